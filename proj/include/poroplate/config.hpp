/**
 * @file config.hpp
 * @brief Run configuration: INI schema, validation with line context, canonical echo.
 */
#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "poroplate/error.hpp"
#include "poroplate/io.hpp"
#include "poroplate/limit2d.hpp"
#include "poroplate/params.hpp"
#include "poroplate/scenarios.hpp"

namespace poroplate {

enum class Command { SolveLimit, Solve3D, SweepEpsilon, Mms, Resultants, Report };

inline const std::vector<std::pair<Command, std::string>>& command_names() {
    static const std::vector<std::pair<Command, std::string>> names = {
        {Command::SolveLimit, "solve-limit"}, {Command::Solve3D, "solve-3d"},     {Command::SweepEpsilon, "sweep-epsilon"},
        {Command::Mms, "mms"},                {Command::Resultants, "resultants"}, {Command::Report, "report"}};
    return names;
}

inline std::string to_string(Command c) {
    for (const auto& [k, v] : command_names())
        if (k == c) return v;
    return "unknown";
}

/// Environment variable overriding the root against which relative output directories resolve.
inline constexpr const char* kOutputRootVar = "POROPLATE_OUTPUT_ROOT";

/// Fully resolved run description.
struct RunConfig {
    Command command = Command::SweepEpsilon;
    std::string scenario = "mixed";
    ScenarioAmplitudes amplitudes{};

    bool from_physical = false;     ///< true when the [physical] section supplied the parameters
    PhysicalParams physical{};
    DimensionlessParams params = make_dimensionless(1.0, 0.25, 0.9, 0.1);

    int n = 16;   ///< cells per side
    int nz = 8;   ///< vertical cells
    double t_end = 1.0;
    int nsteps = 50;
    TimeScheme scheme = TimeScheme::BackwardEuler;

    std::vector<double> sweep_eps = {0.4, 0.2, 0.1, 0.05};

    std::string mms_study = "all";  ///< membrane | bending | all
    std::vector<int> mms_membrane_cells = {16, 32, 64};
    std::vector<int> mms_bending_cells = {8, 16, 32};
    std::vector<int> mms_temporal_steps = {8, 16, 32};
    int mms_temporal_n = 32;
    int mms_temporal_nz = 16;

    std::vector<int> resultant_cells = {16, 32, 64};
    int resultant_nz = 4;
    int resultant_nsteps = 10;
    double equilibrium_margin = 0.25;

    SolverTolerances tol{};

    std::string output_dir = "out";
    bool write_csv = true;
    bool write_vtk = false;
    int output_every = 10;  ///< state files every this many steps (the final step is always written)

    LoadSpec loads() const { return make_scenario(scenario, t_end, amplitudes); }
    Grid3D grid() const { return Grid3D(Grid2D(n), nz); }
};

namespace detail {

inline std::string join_numbers(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_number(v[i]);
    return s;
}

inline std::string join_numbers(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + std::to_string(v[i]);
    return s;
}

/// Line number of every "section.key" and "[section]" in INI text.
inline std::map<std::string, int> ini_line_index(const std::string& text) {
    std::map<std::string, int> out;
    std::istringstream is(text);
    std::string section;
    int lineno = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    for (std::string line; std::getline(is, line);) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == ';' || line[0] == '#') continue;
        if (line.front() == '[' && line.back() == ']') {
            section = trim(line.substr(1, line.size() - 2));
            out.emplace("[" + section + "]", lineno);
        } else if (const auto eq = line.find('='); eq != std::string::npos) {
            out.emplace(section + "." + trim(line.substr(0, eq)), lineno);
        }
    }
    return out;
}

/// Typed reader over a parsed INI tree that reports the offending key and its line.
class IniReader {
public:
    IniReader(const boost::property_tree::ptree& tree, std::map<std::string, int> lines)
        : tree_(tree), lines_(std::move(lines)) {}

    bool has_section(const std::string& s) const { return tree_.get_child_optional(s).has_value(); }
    bool has(const std::string& key) const {
        return tree_.get_optional<std::string>(boost::property_tree::ptree::path_type(key, '.')).has_value();
    }
    int line(const std::string& key) const {
        const auto it = lines_.find(key);
        return it == lines_.end() ? 0 : it->second;
    }
    [[noreturn]] void fail(const std::string& key, const std::string& what) const {
        throw ConfigError(key + ": " + what, line(key));
    }
    /// Re-raises a parameter error under the config key it came from.
    [[noreturn]] void fail(const std::string& key, const InvalidParameter& e) const {
        std::string what = e.what();
        if (what.rfind(e.key() + ": ", 0) == 0) what.erase(0, e.key().size() + 2);
        fail(key, what);
    }

    std::string text(const std::string& key) const {
        used_.insert(key);
        return tree_.get<std::string>(boost::property_tree::ptree::path_type(key, '.'));
    }
    void get(const std::string& key, std::string& out) const {
        if (has(key)) out = text(key);
    }
    void get(const std::string& key, double& out) const {
        if (has(key)) out = to_double(key, text(key));
    }
    void get(const std::string& key, int& out) const {
        if (has(key)) out = to_int(key, text(key));
    }
    void get(const std::string& key, std::vector<double>& out) const {
        if (!has(key)) return;
        out.clear();
        for (const auto& item : split(key)) out.push_back(to_double(key, item));
    }
    void get(const std::string& key, std::vector<int>& out) const {
        if (!has(key)) return;
        out.clear();
        for (const auto& item : split(key)) out.push_back(to_int(key, item));
    }

    /// Throws on the first key or section that no reader consumed.
    void reject_unknown(const std::set<std::string>& sections) const {
        for (const auto& [sec, child] : tree_) {
            if (!sections.count(sec)) fail("[" + sec + "]", "unknown section");
            for (const auto& [key, value] : child) {
                (void)value;
                const std::string full = sec + "." + key;
                if (!used_.count(full)) fail(full, "unknown key");
            }
        }
    }

private:
    std::vector<std::string> split(const std::string& key) const {
        std::vector<std::string> items;
        std::istringstream is(text(key));
        for (std::string item; std::getline(is, item, ',');) {
            const auto b = item.find_first_not_of(" \t");
            const auto e = item.find_last_not_of(" \t");
            if (b == std::string::npos) fail(key, "empty list entry");
            items.push_back(item.substr(b, e - b + 1));
        }
        if (items.empty()) fail(key, "empty list");
        return items;
    }
    double to_double(const std::string& key, const std::string& s) const {
        double v = 0.0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v))
            fail(key, "expected a finite number, got '" + s + "'");
        return v;
    }
    int to_int(const std::string& key, const std::string& s) const {
        int v = 0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size()) fail(key, "expected an integer, got '" + s + "'");
        return v;
    }

    const boost::property_tree::ptree& tree_;
    std::map<std::string, int> lines_;
    mutable std::set<std::string> used_;
};

inline std::vector<std::string> split_words(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    for (std::string item; std::getline(is, item, ',');) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
    }
    return out;
}

}  // namespace detail

/// Parses INI text into a validated RunConfig. Every error is a ConfigError naming the
/// key and, where known, the line.
inline RunConfig parse_config(const std::string& text) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    {
        std::istringstream is(text);
        try {
            pt::ini_parser::read_ini(is, tree);
        } catch (const pt::ini_parser_error& e) {
            throw ConfigError(e.message(), static_cast<int>(e.line()));
        }
    }
    const detail::IniReader in(tree, detail::ini_line_index(text));
    RunConfig c;

    std::string command;
    in.get("run.command", command);
    if (!command.empty()) {
        bool found = false;
        for (const auto& [k, v] : command_names())
            if (v == command) c.command = k, found = true;
        if (!found) in.fail("run.command", "unknown command '" + command + "'");
    }
    in.get("run.scenario", c.scenario);
    in.get("loads.normal", c.amplitudes.normal);
    in.get("loads.tangential", c.amplitudes.tangential);
    in.get("loads.flux", c.amplitudes.flux);

    if (in.has_section("physical") && in.has_section("dimensionless"))
        in.fail("[physical]", "give either [physical] or [dimensionless], not both");
    if (in.has_section("physical")) {
        c.from_physical = true;
        auto& p = c.physical;
        in.get("physical.G", p.G);
        in.get("physical.nu", p.nu);
        in.get("physical.gammaG", p.gammaG);
        in.get("physical.alpha", p.alpha);
        in.get("physical.k", p.k);
        in.get("physical.eta", p.eta);
        in.get("physical.L", p.L);
        in.get("physical.ell", p.ell);
        try {
            c.params = derive_dimensionless(p);
            validate(c.params);
        } catch (const InvalidParameter& e) {
            const std::string key = "physical." + e.key();
            in.fail(in.line(key) ? key : "[physical]", e);
        }
    } else {
        double gamma = 1.0, nu = 0.25, alpha = 0.9, eps = 0.1, T = 1.0;
        in.get("dimensionless.gamma", gamma);
        in.get("dimensionless.nu", nu);
        in.get("dimensionless.alpha", alpha);
        in.get("dimensionless.eps", eps);
        in.get("dimensionless.T_terzaghi", T);
        try {
            c.params = make_dimensionless(gamma, nu, alpha, eps);
            c.params.T_terzaghi = T;
            validate(c.params);
        } catch (const InvalidParameter& e) {
            in.fail("dimensionless." + e.key(), e);
        }
    }

    in.get("grid.n", c.n);
    in.get("grid.nz", c.nz);
    try {
        (void)c.grid();
    } catch (const InvalidParameter& e) {
        in.fail(e.key(), e);
    }
    in.get("time.t_end", c.t_end);
    in.get("time.nsteps", c.nsteps);
    if (!(c.t_end > 0.0)) in.fail("time.t_end", "must be positive");
    if (c.nsteps < 1) in.fail("time.nsteps", "at least one step required");
    std::string scheme = "backward-euler";
    in.get("time.scheme", scheme);
    if (scheme == "backward-euler")
        c.scheme = TimeScheme::BackwardEuler;
    else if (scheme == "crank-nicolson")
        c.scheme = TimeScheme::CrankNicolson;
    else
        in.fail("time.scheme", "expected backward-euler or crank-nicolson");

    if (std::find(scenario_names().begin(), scenario_names().end(), c.scenario) == scenario_names().end())
        in.fail("run.scenario", "unknown scenario '" + c.scenario + "'");

    in.get("sweep.eps", c.sweep_eps);
    for (std::size_t i = 0; i < c.sweep_eps.size(); ++i) {
        if (!(c.sweep_eps[i] > 0.0 && c.sweep_eps[i] < 0.5)) in.fail("sweep.eps", "entries must lie in (0, 1/2)");
        if (i > 0 && !(c.sweep_eps[i] < c.sweep_eps[i - 1])) in.fail("sweep.eps", "must be strictly decreasing");
    }
    if (c.command == Command::SweepEpsilon && c.sweep_eps.size() < 2) in.fail("sweep.eps", "a sweep needs two or more values");

    in.get("mms.study", c.mms_study);
    if (c.mms_study != "membrane" && c.mms_study != "bending" && c.mms_study != "all")
        in.fail("mms.study", "expected membrane, bending or all");
    in.get("mms.membrane_cells", c.mms_membrane_cells);
    in.get("mms.bending_cells", c.mms_bending_cells);
    in.get("mms.temporal_steps", c.mms_temporal_steps);
    in.get("mms.temporal_n", c.mms_temporal_n);
    in.get("mms.temporal_nz", c.mms_temporal_nz);
    auto increasing = [&](const std::string& key, const std::vector<int>& v) {
        if (v.size() < 2) in.fail(key, "needs two or more levels");
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (v[i] < kMinCells) in.fail(key, "entries must be at least 4");
            if (i > 0 && !(v[i] > v[i - 1])) in.fail(key, "must be strictly increasing");
        }
    };
    increasing("mms.membrane_cells", c.mms_membrane_cells);
    increasing("mms.bending_cells", c.mms_bending_cells);
    increasing("mms.temporal_steps", c.mms_temporal_steps);
    try {
        (void)Grid3D(Grid2D(c.mms_temporal_n), c.mms_temporal_nz);
    } catch (const InvalidParameter& e) {
        in.fail(e.key() == "grid.n" ? "mms.temporal_n" : "mms.temporal_nz", e);
    }

    in.get("resultants.cells", c.resultant_cells);
    in.get("resultants.nz", c.resultant_nz);
    in.get("resultants.nsteps", c.resultant_nsteps);
    in.get("resultants.margin", c.equilibrium_margin);
    increasing("resultants.cells", c.resultant_cells);
    if (c.resultant_nz < 2 || c.resultant_nz % 2) in.fail("resultants.nz", "must be even and at least 2");
    if (c.resultant_nsteps < 1) in.fail("resultants.nsteps", "at least one step required");
    if (!(c.equilibrium_margin >= 0.0 && c.equilibrium_margin < 0.5)) in.fail("resultants.margin", "must lie in [0, 1/2)");

    in.get("solver.pivot", c.tol.pivot);
    in.get("solver.residual", c.tol.residual);
    in.get("solver.refinement_steps", c.tol.refinement_steps);
    if (!(c.tol.pivot > 0.0)) in.fail("solver.pivot", "must be positive");
    if (!(c.tol.residual > 0.0)) in.fail("solver.residual", "must be positive");
    if (c.tol.refinement_steps < 0) in.fail("solver.refinement_steps", "must be nonnegative");

    in.get("output.directory", c.output_dir);
    if (c.output_dir.empty()) in.fail("output.directory", "must not be empty");
    if (in.has("output.formats")) {
        c.write_csv = c.write_vtk = false;
        for (const auto& f : detail::split_words(in.text("output.formats"))) {
            if (f == "csv")
                c.write_csv = true;
            else if (f == "vtk")
                c.write_vtk = true;
            else if (f == "none")
                continue;
            else
                in.fail("output.formats", "unknown format '" + f + "' (expected csv, vtk)");
        }
    }
    in.get("output.every", c.output_every);
    if (c.output_every < 1) in.fail("output.every", "must be at least 1");

    in.reject_unknown({"run", "loads", "physical", "dimensionless", "grid", "time", "sweep", "mms", "resultants",
                       "solver", "output"});
    return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_text(path);
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    try {
        return parse_config(text);
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

/// Canonical INI text of a resolved configuration, including the derived scaled constants.
inline std::string to_ini(const RunConfig& c) {
    std::ostringstream os;
    auto kv = [&](const std::string& k, const std::string& v) { os << k << " = " << v << "\n"; };
    auto num = [](double v) { return format_number(v); };
    os << "[run]\n";
    kv("command", to_string(c.command));
    kv("scenario", c.scenario);
    os << "[loads]\n";
    kv("normal", num(c.amplitudes.normal));
    kv("tangential", num(c.amplitudes.tangential));
    kv("flux", num(c.amplitudes.flux));
    if (c.from_physical) {
        const auto& p = c.physical;
        os << "[physical]\n";
        kv("G", num(p.G));
        kv("nu", num(p.nu));
        kv("gammaG", num(p.gammaG));
        kv("alpha", num(p.alpha));
        kv("k", num(p.k));
        kv("eta", num(p.eta));
        kv("L", num(p.L));
        kv("ell", num(p.ell));
    } else {
        os << "[dimensionless]\n";
        kv("gamma", num(c.params.gamma));
        kv("nu", num(c.params.nu));
        kv("alpha", num(c.params.alpha));
        kv("eps", num(c.params.eps));
        kv("T_terzaghi", num(c.params.T_terzaghi));
    }
    os << "[grid]\n";
    kv("n", std::to_string(c.n));
    kv("nz", std::to_string(c.nz));
    os << "[time]\n";
    kv("t_end", num(c.t_end));
    kv("nsteps", std::to_string(c.nsteps));
    kv("scheme", c.scheme == TimeScheme::BackwardEuler ? "backward-euler" : "crank-nicolson");
    os << "[sweep]\n";
    kv("eps", detail::join_numbers(c.sweep_eps));
    os << "[mms]\n";
    kv("study", c.mms_study);
    kv("membrane_cells", detail::join_numbers(c.mms_membrane_cells));
    kv("bending_cells", detail::join_numbers(c.mms_bending_cells));
    kv("temporal_steps", detail::join_numbers(c.mms_temporal_steps));
    kv("temporal_n", std::to_string(c.mms_temporal_n));
    kv("temporal_nz", std::to_string(c.mms_temporal_nz));
    os << "[resultants]\n";
    kv("cells", detail::join_numbers(c.resultant_cells));
    kv("nz", std::to_string(c.resultant_nz));
    kv("nsteps", std::to_string(c.resultant_nsteps));
    kv("margin", num(c.equilibrium_margin));
    os << "[solver]\n";
    kv("pivot", num(c.tol.pivot));
    kv("residual", num(c.tol.residual));
    kv("refinement_steps", std::to_string(c.tol.refinement_steps));
    os << "[output]\n";
    kv("directory", c.output_dir);
    std::string formats;
    if (c.write_csv) formats += "csv";
    if (c.write_vtk) formats += formats.empty() ? "vtk" : ", vtk";
    kv("formats", formats.empty() ? "none" : formats);
    kv("every", std::to_string(c.output_every));
    // Derived scaled constants, as comments so the echo parses back to the same run.
    os << "; derived: eps = " << num(c.params.eps) << ", gamma = " << num(c.params.gamma)
       << ", lambda = " << num(c.params.lambda) << ", T_terzaghi = " << num(c.params.T_terzaghi) << "\n";
    return os.str();
}

/// Output directory: relative paths resolve against $POROPLATE_OUTPUT_ROOT when it is set.
inline std::filesystem::path resolve_output_dir(const RunConfig& c) {
    std::filesystem::path dir(c.output_dir);
    if (dir.is_relative()) {
        if (const char* root = std::getenv(kOutputRootVar); root && *root) dir = std::filesystem::path(root) / dir;
    }
    return dir;
}

}  // namespace poroplate
