/**
 * @file app.hpp
 * @brief Command orchestration: single runs, thickness sweeps, refinement studies, resultants and reports.
 */
#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "poroplate/biot3d.hpp"
#include "poroplate/config.hpp"
#include "poroplate/io.hpp"
#include "poroplate/limit2d.hpp"
#include "poroplate/mms.hpp"
#include "poroplate/verify.hpp"

namespace poroplate {

/// Verdicts of a command and the files it wrote.
struct RunResult {
    std::vector<Verdict> verdicts;
    std::vector<std::filesystem::path> files;

    bool all_pass() const {
        return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
    }
};

/// Acceptance thresholds shared by the CLI verdicts and the acceptance binary.
namespace thresholds {
inline constexpr double kMembraneOrderMin = 1.8;
inline constexpr double kMembraneOrderMax = 2.5;
inline constexpr double kBendingSpaceOrder = 1.8;
inline constexpr double kBendingTimeOrder = 0.8;
inline constexpr double kEpsDecayRatio = 0.5;
inline constexpr double kAprioriFactor = 3.0;
inline constexpr double kEnergyClosure = 1e-10;
inline constexpr double kNumericalDissipation = -1e-14;
inline constexpr double kCouplingCancellation = 1e-12;
inline constexpr double kZeroData = 1e-12;
inline constexpr double kColumnMean = 1e-12;
inline constexpr double kSpdMargin = -1e-8;
inline constexpr double kResultantMatch = 1e-12;
inline constexpr double kEquilibriumRatio = 3.0;
}  // namespace thresholds

/// Time-step records of a thickness sweep at one eps.
struct SweepMember {
    double eps = 0.0;
    NormReport norms;
    StressReport stress;
    BoundReport bounds;
    double energy_closure = 0.0;  ///< largest relative per-step closure
};

/// Per-quantity sweep table: one value per eps, in sweep order.
struct SweepTable {
    std::vector<double> eps;
    std::vector<std::pair<std::string, std::vector<double>>> convergence;  ///< norm.* and stress.* entries
    std::vector<std::pair<std::string, std::vector<double>>> bounds;       ///< bound.* entries
};

inline SweepTable sweep_table(const std::vector<SweepMember>& members) {
    SweepTable t;
    for (const auto& m : members) t.eps.push_back(m.eps);
    auto collect = [&](auto& out, const std::string& prefix, auto getter) {
        if (members.empty()) return;
        const ReportEntries first = getter(members.front());
        for (std::size_t i = 0; i < first.size(); ++i) {
            std::vector<double> v;
            for (const auto& m : members) v.push_back(getter(m)[i].second);
            out.emplace_back(prefix + first[i].first, v);
        }
    };
    collect(t.convergence, "norm.", [](const SweepMember& m) { return detail::entries_of(m.norms); });
    collect(t.convergence, "stress.", [](const SweepMember& m) { return detail::entries_of(m.stress); });
    collect(t.bounds, "bound.", [](const SweepMember& m) { return detail::entries_of(m.bounds); });
    return t;
}

/// Monotone decrease of every convergence entry and last / first <= 0.5. The verdict value
/// is the largest last / first ratio (infinite if some entry fails to decrease).
inline Verdict eps_convergence_verdict(const SweepTable& t) {
    double worst = 0.0;
    bool monotone = true;
    for (const auto& [name, v] : t.convergence) {
        for (std::size_t i = 1; i < v.size(); ++i)
            if (!(v[i] < v[i - 1])) monotone = false;
        worst = std::max(worst, v.front() > 0.0 ? v.back() / v.front() : std::numeric_limits<double>::infinity());
    }
    if (!monotone) worst = std::numeric_limits<double>::infinity();
    return {"eps-convergence", monotone && worst <= thresholds::kEpsDecayRatio, worst, thresholds::kEpsDecayRatio};
}

/// Every a priori quantity stays below 3 times its value at the largest eps.
inline Verdict apriori_verdict(const SweepTable& t) {
    double worst = 0.0;
    for (const auto& [name, v] : t.bounds)
        for (double x : v) worst = std::max(worst, v.front() > 0.0 ? x / v.front() : (x > 0.0 ? 1e300 : 0.0));
    return {"apriori-scaling", worst <= thresholds::kAprioriFactor, worst, thresholds::kAprioriFactor};
}

/// Largest relative closure, smallest numerical dissipation and largest coupling sum of an audit.
struct EnergySummary {
    double closure = 0.0;
    double numerical_min = 0.0;
    double coupling = 0.0;
};

inline EnergySummary summarize(const std::vector<EnergyReport>& audit) {
    EnergySummary s;
    s.numerical_min = audit.empty() ? 0.0 : std::numeric_limits<double>::infinity();
    for (const auto& r : audit) {
        s.closure = std::max(s.closure, r.relative_closure());
        s.numerical_min = std::min(s.numerical_min, r.numerical);
        s.coupling = std::max(s.coupling, r.scale > 0.0 ? std::abs(r.coupling_sum) / r.scale : std::abs(r.coupling_sum));
    }
    return s;
}

namespace detail {

/// Provenance header echoed at the top of every output file.
inline std::string provenance(const RunConfig& cfg, const std::string& what) {
    return "poroplate " + to_string(cfg.command) + ": " + what + "\nresolved configuration:\n" + to_ini(cfg);
}

inline std::string eps_label(double eps) { return "eps_" + format_number(eps); }

inline std::string step_label(int n) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d", n);
    return buf;
}

inline bool output_step(const RunConfig& cfg, int n, int last) { return n == last || n % cfg.output_every == 0; }

class Writer {
public:
    Writer(const RunConfig& cfg, std::filesystem::path dir, RunResult& result)
        : cfg_(cfg), dir_(std::move(dir)), result_(result) {}

    const std::filesystem::path& dir() const { return dir_; }

    void csv(const std::string& name, const CsvTable& t, const std::string& what) {
        put(name, t.str(provenance(cfg_, what)));
    }
    void vtk(const std::string& name, const std::string& doc) { put(name, doc); }
    void verdicts(const std::vector<Verdict>& v) {
        std::string text;
        std::istringstream hs(provenance(cfg_, "acceptance verdicts (id PASS|FAIL value threshold)"));
        for (std::string line; std::getline(hs, line);) text += "# " + line + "\n";
        put("verdicts.txt", text + verdict_text(v));
    }
    void config() { put("config.ini", to_ini(cfg_)); }

private:
    void put(const std::string& name, const std::string& text) {
        write_text(dir_ / name, text);
        result_.files.push_back(dir_ / name);
    }

    const RunConfig& cfg_;
    std::filesystem::path dir_;
    RunResult& result_;
};

inline CsvTable energy_table(const std::vector<EnergyReport>& audit) {
    CsvTable t({"step", "t", "elastic", "pressure", "dissipation", "numerical", "work", "bending_coupling",
                "pressure_coupling", "coupling_sum", "closure", "relative_closure"});
    for (const auto& r : audit)
        t.row(std::vector<double>{static_cast<double>(r.step), r.t, r.elastic, r.pressure, r.dissipation, r.numerical,
                                  r.work, r.bending_coupling, r.pressure_coupling, r.coupling_sum, r.closure,
                                  r.relative_closure()});
    return t;
}

inline void write_limit_states(Writer& out, const RunConfig& cfg, const LimitTrajectory& traj) {
    const int last = static_cast<int>(traj.states.size()) - 1;
    for (int n = 0; n <= last; ++n) {
        if (!output_step(cfg, n, last)) continue;
        const LimitState& s = traj.states[n];
        const Field3 w = lift_limit(s, s.pi_w.grid());
        const Field3 p = s.pi0();
        const std::string t = format_number(s.t);
        if (cfg.write_csv)
            out.csv("state_" + step_label(n) + ".csv", field_table({{"w", &w}, {"pi_w", &s.pi_w}, {"pi", &p}}),
                    "limit state lifted to the slab, step " + std::to_string(n) + ", t = " + t);
        if (cfg.write_vtk)
            out.vtk("state_" + step_label(n) + ".vtk",
                    vtk_structured_points({{"w", &w}, {"pi_w", &s.pi_w}, {"pi", &p}},
                                          "poroplate limit state t = " + t + " (configuration in config.ini)"));
    }
}

inline void write_slab_states(Writer& out, const RunConfig& cfg, const BiotTrajectory& traj) {
    const int last = static_cast<int>(traj.states.size()) - 1;
    for (int n = 0; n <= last; ++n) {
        if (!output_step(cfg, n, last)) continue;
        const BiotState& s = traj.states[n];
        const std::string t = format_number(s.t);
        if (cfg.write_csv)
            out.csv("state_" + step_label(n) + ".csv", field_table({{"w", &s.w}, {"pi", &s.pi}}),
                    "slab state at eps = " + format_number(traj.eps) + ", step " + std::to_string(n) + ", t = " + t);
        if (cfg.write_vtk)
            out.vtk("state_" + step_label(n) + ".vtk",
                    vtk_structured_points({{"w", &s.w}, {"pi", &s.pi}}, "poroplate slab state eps = " +
                                                                            format_number(traj.eps) + " t = " + t +
                                                                            " (configuration in config.ini)"));
    }
}

inline LimitConfig limit_config(const RunConfig& cfg, const Grid3D& grid, int nsteps) {
    LimitConfig lc;
    lc.grid = grid;
    lc.params = cfg.params;
    lc.loads = cfg.loads();
    lc.t_end = cfg.t_end;
    lc.nsteps = nsteps;
    lc.scheme = cfg.scheme;
    lc.tol = cfg.tol;
    return lc;
}

inline BiotConfig biot_config(const RunConfig& cfg) {
    BiotConfig bc;
    bc.grid = cfg.grid();
    bc.params = cfg.params;
    bc.loads = cfg.loads();
    bc.t_end = cfg.t_end;
    bc.nsteps = cfg.nsteps;
    bc.tol = cfg.tol;
    return bc;
}

inline void log_params(const RunConfig& cfg, std::ostream& log) {
    const auto& d = cfg.params;
    log << "scaled parameters: eps = " << format_number(d.eps) << ", gamma = " << format_number(d.gamma)
        << ", lambda = " << format_number(d.lambda) << ", alpha = " << format_number(d.alpha)
        << ", nu = " << format_number(d.nu) << ", T = " << format_number(d.T_terzaghi) << " s\n";
    if (cfg.from_physical) {
        // Characteristic pressure for a displacement of one thickness (bookkeeping only).
        log << "characteristic pressure G ell / L = " << format_number(characteristic_pressure(cfg.physical, cfg.physical.ell))
            << " Pa\n";
    }
}

}  // namespace detail

/// Limit model run: trajectory, energy audit and the limit-model invariants.
inline RunResult run_solve_limit(const RunConfig& cfg, const std::filesystem::path& root, std::ostream& log) {
    RunResult res;
    detail::Writer out(cfg, root / "limit", res);
    log << "solve-limit: " << cfg.n << "^2 x " << cfg.nz << ", " << cfg.nsteps << " steps, scenario " << cfg.scenario << "\n";
    const LimitTrajectory traj = run_limit(detail::limit_config(cfg, cfg.grid(), cfg.nsteps));
    out.config();
    detail::write_limit_states(out, cfg, traj);
    out.csv("energy.csv", detail::energy_table(traj.energy), "limit energy audit per step");
    const EnergySummary e = summarize(traj.energy);
    res.verdicts = {
        {"limit-energy-closure", e.closure <= thresholds::kEnergyClosure, e.closure, thresholds::kEnergyClosure},
        {"limit-numerical-dissipation", e.numerical_min >= thresholds::kNumericalDissipation, e.numerical_min,
         thresholds::kNumericalDissipation},
        {"limit-coupling-cancellation", e.coupling <= thresholds::kCouplingCancellation, e.coupling,
         thresholds::kCouplingCancellation},
        {"mean-pressure-invariant", traj.max_column_mean <= thresholds::kColumnMean, traj.max_column_mean,
         thresholds::kColumnMean},
    };
    out.verdicts(res.verdicts);
    return res;
}

/// Slab run at the configured eps.
inline RunResult run_solve_3d(const RunConfig& cfg, const std::filesystem::path& root, std::ostream& log) {
    RunResult res;
    const double eps = cfg.params.eps;
    detail::Writer out(cfg, root / "slab" / detail::eps_label(eps), res);
    log << "solve-3d: eps = " << format_number(eps) << ", " << cfg.n << "^2 x " << cfg.nz << ", " << cfg.nsteps
        << " steps\n";
    const BiotTrajectory traj = run_biot(detail::biot_config(cfg), eps);
    out.config();
    detail::write_slab_states(out, cfg, traj);
    out.csv("energy.csv", detail::energy_table(traj.energy), "slab energy audit per step");
    const EnergySummary e = summarize(traj.energy);
    res.verdicts = {{"slab-energy-closure", e.closure <= thresholds::kEnergyClosure, e.closure, thresholds::kEnergyClosure}};
    out.verdicts(res.verdicts);
    return res;
}

/// Thickness sweep: one slab run per eps against a single limit trajectory on the same grid.
inline std::vector<SweepMember> sweep_members(const RunConfig& cfg, std::ostream& log,
                                              std::vector<BiotTrajectory>* keep = nullptr) {
    const LimitTrajectory limit = run_limit(detail::limit_config(cfg, cfg.grid(), cfg.nsteps));
    std::vector<SweepMember> members;
    for (double eps : cfg.sweep_eps) {
        log << "sweep: eps = " << format_number(eps) << "\n";
        BiotTrajectory biot = run_biot(detail::biot_config(cfg), eps);
        const auto corr = build_correctors(limit, eps, cfg.grid());
        SweepMember m;
        m.eps = eps;
        m.norms = corrected_error_norms(biot, limit, corr, eps);
        m.stress = stress_error_norms(biot, limit, corr, eps);
        m.bounds = scaled_bounds(biot);
        m.energy_closure = summarize(biot.energy).closure;
        members.push_back(m);
        if (keep) keep->push_back(std::move(biot));
    }
    return members;
}

inline CsvTable rates_table(const SweepTable& t) {
    CsvTable out({"eps", "quantity", "value", "rate"});
    auto emit = [&](const auto& rows) {
        for (const auto& [name, v] : rows) {
            const auto rates = estimate_rate(v, t.eps);
            for (std::size_t i = 0; i < v.size(); ++i) {
                std::string rate;
                if (i > 0 && rates[i - 1]) rate = format_number(*rates[i - 1]);
                out.row({format_number(t.eps[i]), name, format_number(v[i]), rate});
            }
        }
    };
    emit(t.convergence);
    emit(t.bounds);
    return out;
}

inline RunResult run_sweep(const RunConfig& cfg, const std::filesystem::path& root, std::ostream& log) {
    RunResult res;
    const std::filesystem::path dir = root / "sweep";
    std::vector<BiotTrajectory> trajs;
    const auto members = sweep_members(cfg, log, &trajs);
    detail::Writer top(cfg, dir, res);
    if (cfg.write_vtk) top.config();
    for (std::size_t i = 0; i < members.size(); ++i) {
        const auto& m = members[i];
        detail::Writer out(cfg, dir / detail::eps_label(m.eps), res);
        detail::write_slab_states(out, cfg, trajs[i]);
        out.csv("energy.csv", detail::energy_table(trajs[i].energy), "slab energy audit per step");
        CsvTable norms({"report", "quantity", "value"});
        for (const auto& [k, v] : detail::entries_of(m.norms)) norms.row({"norm", k, format_number(v)});
        for (const auto& [k, v] : detail::entries_of(m.stress)) norms.row({"stress", k, format_number(v)});
        for (const auto& [k, v] : detail::entries_of(m.bounds)) norms.row({"bound", k, format_number(v)});
        out.csv("norms.csv", norms, "time maxima of the corrected norms at eps = " + format_number(m.eps));
    }
    const SweepTable t = sweep_table(members);
    top.csv("rates.csv", rates_table(t), "sweep values and empirical eps-rates (rate between this and the previous eps)");
    double closure = 0.0;
    for (const auto& m : members) closure = std::max(closure, m.energy_closure);
    res.verdicts = {eps_convergence_verdict(t), apriori_verdict(t),
                    {"slab-energy-closure", closure <= thresholds::kEnergyClosure, closure, thresholds::kEnergyClosure}};
    top.verdicts(res.verdicts);
    return res;
}

/// Manufactured-solution refinement studies with an order table (one row per refinement pair).
inline RunResult run_mms(const RunConfig& cfg, const std::filesystem::path& root, std::ostream& log) {
    RunResult res;
    detail::Writer out(cfg, root / "mms", res);
    CsvTable errors({"study", "quantity", "h", "error"});
    CsvTable orders({"study", "quantity", "h_coarse", "h_fine", "order"});
    auto add = [&](const std::string& study, const std::string& q, const std::vector<double>& h,
                   const std::vector<double>& err) {
        for (std::size_t i = 0; i < h.size(); ++i) errors.row({study, q, format_number(h[i]), format_number(err[i])});
        const auto ord = observed_orders(h, err);
        for (std::size_t i = 0; i < ord.size(); ++i)
            orders.row({study, q, format_number(h[i]), format_number(h[i + 1]), format_number(ord[i])});
        return ord;
    };
    auto minmax = [](const std::vector<double>& a, const std::vector<double>& b) {
        std::vector<double> all = a;
        all.insert(all.end(), b.begin(), b.end());
        return std::pair{*std::min_element(all.begin(), all.end()), *std::max_element(all.begin(), all.end())};
    };
    if (cfg.mms_study == "membrane" || cfg.mms_study == "all") {
        log << "mms: membrane study\n";
        const auto s = membrane_convergence(cfg.params, cfg.mms_membrane_cells);
        const auto a = add("membrane", "inplane", s.h, s.error_primary);
        const auto b = add("membrane", "mean_pressure", s.h, s.error_secondary);
        const auto [lo, hi] = minmax(a, b);
        res.verdicts.push_back({"membrane-order-min", lo >= thresholds::kMembraneOrderMin, lo, thresholds::kMembraneOrderMin});
        res.verdicts.push_back({"membrane-order-max", hi <= thresholds::kMembraneOrderMax, hi, thresholds::kMembraneOrderMax});
    }
    if (cfg.mms_study == "bending" || cfg.mms_study == "all") {
        log << "mms: bending-pressure studies\n";
        const auto sp = bending_spatial_convergence(cfg.params, cfg.mms_bending_cells);
        const auto sa = add("bending-space", "deflection", sp.h, sp.error_primary);
        const auto sb = add("bending-space", "fluctuation", sp.h, sp.error_secondary);
        const double ls = minmax(sa, sb).first;
        res.verdicts.push_back({"bending-space-order", ls >= thresholds::kBendingSpaceOrder, ls, thresholds::kBendingSpaceOrder});
        const Grid3D g(Grid2D(cfg.mms_temporal_n), cfg.mms_temporal_nz);
        const auto tm = bending_temporal_convergence(cfg.params, g, cfg.mms_temporal_steps, cfg.scheme);
        const auto ta = add("bending-time", "deflection", tm.h, tm.error_primary);
        const auto tb = add("bending-time", "fluctuation", tm.h, tm.error_secondary);
        const double lt = minmax(ta, tb).first;
        res.verdicts.push_back({"bending-time-order", lt >= thresholds::kBendingTimeOrder, lt, thresholds::kBendingTimeOrder});
    }
    out.csv("errors.csv", errors, "manufactured-solution errors (time maxima for the bending studies)");
    out.csv("orders.csv", orders, "observed orders between consecutive refinement levels");
    out.verdicts(res.verdicts);
    return res;
}

/// Resultants of the final limit state and equilibrium residuals over a 2D refinement.
struct EquilibriumStudy {
    std::vector<int> cells;
    std::vector<EquilibriumResiduals> residuals;
    std::vector<double> discrepancy;

    /// Smallest ratio of consecutive moment residuals.
    double min_moment_ratio() const {
        double r = std::numeric_limits<double>::infinity();
        for (std::size_t i = 1; i < residuals.size(); ++i) r = std::min(r, residuals[i - 1].moment / residuals[i].moment);
        return r;
    }
};

inline EquilibriumStudy equilibrium_study(const RunConfig& cfg, std::ostream& log,
                                          std::vector<std::pair<int, ResultantField>>* keep = nullptr) {
    EquilibriumStudy s;
    const LoadSpec loads = cfg.loads();
    for (int n : cfg.resultant_cells) {
        log << "resultants: " << n << "^2 x " << cfg.resultant_nz << "\n";
        const LimitTrajectory lim = run_limit(detail::limit_config(cfg, Grid3D(Grid2D(n), cfg.resultant_nz), cfg.resultant_nsteps));
        const LimitState& last = lim.states.back();
        ResultantField r = limit_resultants(last, cfg.params, &loads);
        s.cells.push_back(n);
        s.residuals.push_back(equilibrium_residuals(r, loads, last.t, ThicknessConvention{}, cfg.equilibrium_margin));
        s.discrepancy.push_back(r.discrepancy);
        if (keep) keep->emplace_back(n, std::move(r));
    }
    return s;
}

inline RunResult run_resultants(const RunConfig& cfg, const std::filesystem::path& root, std::ostream& log) {
    RunResult res;
    detail::Writer out(cfg, root / "resultants", res);
    std::vector<std::pair<int, ResultantField>> fields;
    const EquilibriumStudy s = equilibrium_study(cfg, log, &fields);
    out.config();
    for (const auto& [n, r] : fields) {
        const std::vector<NamedField<Grid2D>> named = {
            {"N1", &r.N1}, {"N2", &r.N2}, {"N12", &r.N12}, {"M1", &r.M1}, {"M2", &r.M2}, {"M12", &r.M12},
            {"N", &r.N},   {"M", &r.M},   {"Q1", &r.Q1},   {"Q2", &r.Q2}, {"f1", &r.f1}, {"f2", &r.f2},
            {"m1", &r.m1}, {"m2", &r.m2}};
        const std::string name = "resultants_n" + std::to_string(n);
        if (cfg.write_csv) out.csv(name + ".csv", field_table(named), "resultants of the final limit state, n = " + std::to_string(n));
        if (cfg.write_vtk) out.vtk(name + ".vtk", vtk_structured_points(named, "poroplate resultants (configuration in config.ini)"));
    }
    CsvTable eq({"n", "h", "inplane_1", "inplane_2", "moment", "moment_ratio", "closed_form_discrepancy"});
    double disc = 0.0;
    for (std::size_t i = 0; i < s.cells.size(); ++i) {
        const auto& r = s.residuals[i];
        const std::string ratio = i ? format_number(s.residuals[i - 1].moment / r.moment) : std::string();
        eq.row({std::to_string(s.cells[i]), format_number(1.0 / s.cells[i]), format_number(r.inplane_1),
                format_number(r.inplane_2), format_number(r.moment), ratio, format_number(s.discrepancy[i])});
        disc = std::max(disc, s.discrepancy[i]);
    }
    out.csv("equilibrium.csv", eq, "equilibrium residuals over interior nodes at distance >= margin");
    const double ratio = s.min_moment_ratio();
    res.verdicts = {{"resultant-closed-form", disc <= thresholds::kResultantMatch, disc, thresholds::kResultantMatch},
                    {"moment-equilibrium-ratio", ratio >= thresholds::kEquilibriumRatio, ratio, thresholds::kEquilibriumRatio}};
    out.verdicts(res.verdicts);
    return res;
}

/// Aggregates every verdicts.txt below the output directory into report.txt.
inline RunResult run_report(const RunConfig& cfg, const std::filesystem::path& root, std::ostream& log) {
    namespace fs = std::filesystem;
    RunResult res;
    if (!fs::is_directory(root)) throw Error("report: output directory '" + root.string() + "' does not exist");
    std::vector<fs::path> sources;
    for (const auto& entry : fs::recursive_directory_iterator(root))
        if (entry.is_regular_file() && entry.path().filename() == "verdicts.txt") sources.push_back(entry.path());
    std::sort(sources.begin(), sources.end());
    if (sources.empty()) throw Error("report: no verdicts.txt below '" + root.string() + "'");
    std::string body;
    for (const auto& src : sources) {
        const std::string prefix = fs::relative(src.parent_path(), root).generic_string();
        body += "# source: " + fs::relative(src, root).generic_string() + "\n";
        for (Verdict v : parse_verdicts(read_text(src))) {
            v.id = prefix + "/" + v.id;
            body += v.line() + "\n";
            res.verdicts.push_back(v);
        }
    }
    const auto failed = std::count_if(res.verdicts.begin(), res.verdicts.end(), [](const Verdict& v) { return !v.pass; });
    body += "# " + std::to_string(res.verdicts.size() - failed) + " passed, " + std::to_string(failed) + " failed\n";
    std::string text;
    std::istringstream hs(detail::provenance(cfg, "aggregated verdicts"));
    for (std::string line; std::getline(hs, line);) text += "# " + line + "\n";
    write_text(root / "report.txt", text + body);
    res.files.push_back(root / "report.txt");
    log << "report: " << res.verdicts.size() << " verdicts from " << sources.size() << " files, " << failed << " failed\n";
    return res;
}

/// Dispatches on the configured command; output goes below `root`.
inline RunResult run(const RunConfig& cfg, const std::filesystem::path& root, std::ostream& log) {
    detail::log_params(cfg, log);
    switch (cfg.command) {
        case Command::SolveLimit: return run_solve_limit(cfg, root, log);
        case Command::Solve3D: return run_solve_3d(cfg, root, log);
        case Command::SweepEpsilon: return run_sweep(cfg, root, log);
        case Command::Mms: return run_mms(cfg, root, log);
        case Command::Resultants: return run_resultants(cfg, root, log);
        case Command::Report: return run_report(cfg, root, log);
    }
    throw Error("unknown command");
}

}  // namespace poroplate
