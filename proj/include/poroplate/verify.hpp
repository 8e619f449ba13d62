/**
 * @file verify.hpp
 * @brief Correctors linking the slab and limit solutions, corrected error norms, stress
 *        discrepancies, plate resultants with equilibrium residuals, and empirical rates.
 */
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "poroplate/biot3d.hpp"
#include "poroplate/grid.hpp"
#include "poroplate/limit2d.hpp"
#include "poroplate/params.hpp"

namespace poroplate {

/// Named scalar entries of a report, in a fixed order.
using ReportEntries = std::vector<std::pair<std::string, double>>;

/// Quintic smoothstep cutoff of the distance to the boundary of the square:
/// 0 on the boundary, 1 at distance >= eps, |grad| ~ 1 / eps inside the band.
inline double cutoff(double y1, double y2, double eps) {
    const double d = std::min({y1, 1.0 - y1, y2, 1.0 - y2});
    const double s = d / eps;
    if (s >= 1.0) return 1.0;
    if (s <= 0.0) return 0.0;
    return std::clamp(s * s * s * (10.0 - 15.0 * s + 6.0 * s * s), 0.0, 1.0);
}

/// Cumulative integral from the midplane, int_0^{y3} f da, for every node column.
/// Exact for piecewise quadratics on the node pairs starting at the midplane.
inline Field3 integrate_from_midplane(const Field3& f) {
    if (f.components() != 1) throw ShapeError("integrate_from_midplane expects a scalar field");
    const Grid3D& g = f.grid();
    Field3 out(g);
    const std::size_t L = g.layer();
    const double hz = g.hz;
    for (std::size_t q = 0; q < L; ++q) {
        auto at = [&](int k) { return f(k * L + q); };
        for (int dir : {1, -1}) {
            double acc = 0.0;
            int k = g.mid();
            while (true) {
                const int k1 = k + dir, k2 = k + 2 * dir;
                if (k1 < 0 || k1 > g.nz) break;
                // Half-pair step (exact for quadratics through k, k1, k2 or k-dir, k, k1).
                double half;
                if (k2 >= 0 && k2 <= g.nz)
                    half = hz / 12.0 * (5.0 * at(k) + 8.0 * at(k1) - at(k2));
                else
                    half = hz / 12.0 * (-at(k - dir) + 8.0 * at(k) + 5.0 * at(k1));
                out(k1 * L + q) = dir * (acc + half);
                if (k2 < 0 || k2 > g.nz) break;
                acc += hz / 3.0 * (at(k) + 4.0 * at(k1) + at(k2));
                out(k2 * L + q) = dir * acc;
                k = k2;
            }
        }
    }
    return out;
}

/// Kirchhoff-Love lift of a limit state with the nodal slopes of the deflection:
/// (w01 - y3 d1 w3, w02 - y3 d2 w3, w3).
inline Field3 lift_limit(const LimitState& s, const Grid3D& g) {
    if (!(s.inplane.grid() == g.base) || !(s.pi_w.grid() == g)) throw ShapeError("limit state does not match the slab grid");
    Field3 out(g, 3, Boundary::LateralDirichlet);
    const std::size_t L = g.layer();
    for (int k = 0; k <= g.nz; ++k)
        for (std::size_t q = 0; q < L; ++q) {
            const std::size_t p = k * L + q;
            out(p, 0) = s.inplane(q, 0) - g.z(k) * s.w3_slopes(q, 0);
            out(p, 1) = s.inplane(q, 1) - g.z(k) * s.w3_slopes(q, 1);
            out(p, 2) = s.w3(q);
        }
    return out;
}

/// Correctors built from one limit state at thickness ratio eps.
struct CorrectorFields {
    double eps = 0.0;
    double t = 0.0;
    Field2 E_cor;   ///< compression built from the membrane fields and the mean pressure
    Field3 E_star;  ///< E_cor plus the bending and fluctuation corrections
    Field3 E0_cor;  ///< the same compression written with the full limit pressure
    Field2 psi;     ///< boundary cutoff
    Field3 Ecal;    ///< psi * int_0^{y3} E_star
    Field3 reference_w;   ///< lifted limit displacement plus eps^2 Ecal in the vertical component
    Field3 reference_pi;  ///< limit pressure pi_m + pi_w

    /// Corrected unknowns (xi, kappa) of a slab state.
    std::pair<Field3, Field3> corrected(const BiotState& s) const {
        if (!(s.w.grid() == reference_w.grid())) throw ShapeError("slab state does not match the corrector grid");
        Field3 xi = s.w - reference_w;
        xi.set_boundary(Boundary::LateralDirichlet);
        return {xi, s.pi - reference_pi};
    }
    /// d Ecal / dy3 = psi * E_star.
    Field3 Ecal_dz() const {
        Field3 out = E_star;
        const std::size_t L = psi.grid().size();
        for (std::size_t p = 0; p < out.nodes(); ++p) out(p) *= psi(p % L);
        return out;
    }
};

inline CorrectorFields build_correctors(const LimitState& s, const DimensionlessParams& params, double eps) {
    if (!(eps > 0.0)) throw InvalidParameter("eps", "must be positive");
    const Grid3D& g = s.pi_w.grid();
    if (!(s.inplane.grid() == g.base) || !(s.w3.grid() == g.base)) throw ShapeError("limit fields live on different grids");
    const double nu = params.nu, al = params.alpha;
    const double cp = al * (1.0 - 2.0 * nu) / (2.0 * (1.0 - nu));
    const std::size_t L = g.layer();

    CorrectorFields c;
    c.eps = eps;
    c.t = s.t;
    c.reference_pi = s.pi0();
    const Field2 mean = 0.5 * moment_integrals(c.reference_pi, 0);
    const Field2 div = div2(s.inplane);
    const Field2 lap = clamped_laplacian(s.w3);

    c.E_cor = Field2(g.base);
    for (std::size_t q = 0; q < L; ++q)
        c.E_cor(q) = (al * (1.0 - 2.0 * nu) * mean(q) - 2.0 * nu * div(q)) / (2.0 * (1.0 - nu));
    c.E_star = Field3(g);
    c.E0_cor = Field3(g);
    for (int k = 0; k <= g.nz; ++k)
        for (std::size_t q = 0; q < L; ++q) {
            const std::size_t p = k * L + q;
            const double y3 = g.z(k);
            c.E_star(p) = c.E_cor(q) + nu * y3 / (1.0 - nu) * lap(q) + cp * (c.reference_pi(p) - mean(q));
            c.E0_cor(p) = cp * (s.pi_w(p) + s.pi_m(q)) - nu / (1.0 - nu) * (div(q) - y3 * lap(q));
        }
    c.psi = Field2(g.base);
    fill(c.psi, [&](double y1, double y2) { return cutoff(y1, y2, eps); });
    c.Ecal = integrate_from_midplane(c.E_star);
    for (std::size_t p = 0; p < c.Ecal.nodes(); ++p) c.Ecal(p) *= c.psi(p % L);

    c.reference_w = lift_limit(s, g);
    for (std::size_t p = 0; p < c.Ecal.nodes(); ++p) c.reference_w(p, 2) += eps * eps * c.Ecal(p);
    return c;
}

/// Correctors for every state of a limit trajectory computed on `grid`.
inline std::vector<CorrectorFields> build_correctors(const LimitTrajectory& limit, double eps, const Grid3D& grid) {
    if (!(limit.config.grid == grid)) throw ShapeError("limit trajectory grid does not match the slab grid");
    std::vector<CorrectorFields> out;
    out.reserve(limit.states.size());
    for (const auto& s : limit.states) out.push_back(build_correctors(s, limit.config.params, eps));
    return out;
}

namespace detail {

/// L2 norms of the element-sampled scaled strains (rows of HexStrains::B) of w by
/// 2 x 2 x 2 Gauss quadrature on every cell.
inline std::array<double, 6> sampled_strain_norms(const Field3& w, double eps) {
    const Grid3D& g = w.grid();
    const HexStrains hs{g.h(), g.hz, eps};
    const double jac = 0.125 * g.h() * g.h() * g.hz;
    std::array<double, 6> sum{};
    std::array<Eigen::Matrix<double, 6, 24>, 8> B;
    for (int gp = 0; gp < 8; ++gp)
        B[gp] = hs.B((gp & 1 ? 1 : -1) * kGauss, (gp & 2 ? 1 : -1) * kGauss, (gp & 4 ? 1 : -1) * kGauss);
    Eigen::Matrix<double, 24, 1> we;
    for (int ck = 0; ck < g.nz; ++ck)
        for (int cj = 0; cj < g.n(); ++cj)
            for (int ci = 0; ci < g.n(); ++ci) {
                for (int a = 0; a < 8; ++a) {
                    const std::size_t node = g.index(ci + (a & 1), cj + ((a >> 1) & 1), ck + ((a >> 2) & 1));
                    for (int c = 0; c < 3; ++c) we[3 * a + c] = w(node, c);
                }
                for (int gp = 0; gp < 8; ++gp) {
                    const Eigen::Matrix<double, 6, 1> e = B[gp] * we;
                    for (int r = 0; r < 6; ++r) sum[r] += jac * e[r] * e[r];
                }
            }
    for (double& s : sum) s = std::sqrt(s);
    return sum;
}

inline Field3 component(const Field3& f, int c) {
    Field3 out = f.scalar(c);
    out.set_boundary(Boundary::Free);
    return out;
}

inline void check_time_grids(const BiotTrajectory& biot, const std::vector<CorrectorFields>& corr) {
    if (biot.states.size() != corr.size()) throw ShapeError("slab and limit trajectories have different step counts");
    for (std::size_t n = 0; n < corr.size(); ++n)
        if (std::abs(biot.states[n].t - corr[n].t) > 1e-12 * std::max(1.0, std::abs(corr[n].t)))
            throw ShapeError("slab and limit trajectories use different time levels");
    if (!corr.empty() && !(biot.states.front().w.grid() == corr.front().reference_w.grid()))
        throw ShapeError("slab and limit trajectories use different grids");
}

template <class Report>
ReportEntries entries_of(const Report& r) {
    ReportEntries out;
    for (const auto& [name, m] : Report::fields()) out.emplace_back(name, r.*m);
    return out;
}

}  // namespace detail

/// Time maxima of the corrected error norms at one thickness ratio.
struct NormReport {
    double eps = 0.0;
    double strain_11 = 0, strain_22 = 0, strain_12 = 0;  ///< e_ab(xi), a, b in-plane
    double shear_13 = 0, shear_23 = 0;                  ///< e_a3(xi) / eps
    double compression = 0;                             ///< d3 xi3 / eps^2
    double pressure = 0, pressure_dz = 0, pressure_grad = 0;  ///< kappa, d3 kappa, eps grad kappa
    double displacement_1 = 0, displacement_2 = 0, displacement_3 = 0;

    static const auto& fields() {
        static const std::array<std::pair<const char*, double NormReport::*>, 12> f = {{
            {"strain_11", &NormReport::strain_11},
            {"strain_22", &NormReport::strain_22},
            {"strain_12", &NormReport::strain_12},
            {"shear_13", &NormReport::shear_13},
            {"shear_23", &NormReport::shear_23},
            {"compression", &NormReport::compression},
            {"pressure", &NormReport::pressure},
            {"pressure_dz", &NormReport::pressure_dz},
            {"pressure_grad", &NormReport::pressure_grad},
            {"displacement_1", &NormReport::displacement_1},
            {"displacement_2", &NormReport::displacement_2},
            {"displacement_3", &NormReport::displacement_3},
        }};
        return f;
    }
    ReportEntries entries() const { return detail::entries_of(*this); }
};

/// Time maxima of the a priori scaled quantities of the slab solution itself.
struct BoundReport {
    double eps = 0.0;
    double shear = 0;          ///< ||(e13, e23)(w)|| / eps
    double compression = 0;    ///< ||e33(w)|| / eps^2
    double pressure_dz = 0;    ///< ||d3 pi||
    double pressure_grad = 0;  ///< eps ||grad pi||

    static const auto& fields() {
        static const std::array<std::pair<const char*, double BoundReport::*>, 4> f = {{
            {"shear", &BoundReport::shear},
            {"compression", &BoundReport::compression},
            {"pressure_dz", &BoundReport::pressure_dz},
            {"pressure_grad", &BoundReport::pressure_grad},
        }};
        return f;
    }
    ReportEntries entries() const { return detail::entries_of(*this); }
};

/// Time maxima of the rescaled stress discrepancies.
struct StressReport {
    double eps = 0.0;
    double trace = 0;                        ///< D + 2 E_star
    double normal_1 = 0, normal_2 = 0;       ///< sigma_jj / eps - 2 e_jj(w0) + 2 y3 d_jj w3 + 2 E0_cor
    double normal_1_cutoff = 0, normal_2_cutoff = 0;  ///< the same with psi * E_star
    double shear_12 = 0;                     ///< sigma_12 / eps - 2 e_12(w0) + 2 y3 d_12 w3
    double shear_13 = 0, shear_23 = 0;       ///< sigma_j3 / eps
    double normal_33 = 0;                    ///< sigma_33 / eps

    static const auto& fields() {
        static const std::array<std::pair<const char*, double StressReport::*>, 9> f = {{
            {"trace", &StressReport::trace},
            {"normal_1", &StressReport::normal_1},
            {"normal_2", &StressReport::normal_2},
            {"normal_1_cutoff", &StressReport::normal_1_cutoff},
            {"normal_2_cutoff", &StressReport::normal_2_cutoff},
            {"shear_12", &StressReport::shear_12},
            {"shear_13", &StressReport::shear_13},
            {"shear_23", &StressReport::shear_23},
            {"normal_33", &StressReport::normal_33},
        }};
        return f;
    }
    ReportEntries entries() const { return detail::entries_of(*this); }
};

/// Corrected error norms of one slab/limit state pair.
inline NormReport corrected_error_norms(const BiotState& s, const CorrectorFields& c) {
    const auto [xi, kappa] = c.corrected(s);
    const double eps = c.eps;
    NormReport r;
    r.eps = eps;
    r.strain_11 = l2_norm(strain(xi, 0, 0));
    r.strain_22 = l2_norm(strain(xi, 1, 1));
    r.strain_12 = l2_norm(strain(xi, 0, 1));
    const auto sampled = detail::sampled_strain_norms(xi, eps);
    r.shear_13 = sampled[4];
    r.shear_23 = sampled[5];
    r.compression = l2_norm(dz(detail::component(xi, 2))) / (eps * eps);
    r.pressure = l2_norm(kappa);
    r.pressure_dz = l2_norm(dz(kappa));
    r.pressure_grad = eps * l2_norm(grad2(kappa));
    r.displacement_1 = l2_norm(detail::component(xi, 0));
    r.displacement_2 = l2_norm(detail::component(xi, 1));
    r.displacement_3 = l2_norm(detail::component(xi, 2));
    return r;
}

/// Common diagonal part of the rescaled stress, lambda (div w + d3 w3 / eps^2) - alpha pi.
inline Field3 stress_trace(const BiotState& s, const DimensionlessParams& params, double eps) {
    Field3 e33 = dz(detail::component(s.w, 2));
    e33 *= 1.0 / (eps * eps);
    Field3 D = strain(s.w, 0, 0) + strain(s.w, 1, 1) + e33;
    D *= params.lambda;
    for (std::size_t p = 0; p < D.nodes(); ++p) D(p) -= params.alpha * s.pi(p);
    return D;
}

/// Rescaled stress discrepancies of one slab/limit state pair.
inline StressReport stress_error_norms(const BiotState& s, const CorrectorFields& c, const DimensionlessParams& params) {
    const auto [xi, kappa] = c.corrected(s);
    const double eps = c.eps;
    const Grid3D& g = xi.grid();
    Field3 e33 = dz(detail::component(s.w, 2));
    e33 *= 1.0 / (eps * eps);
    const Field3 D = stress_trace(s, params, eps);

    const Field3 x11 = strain(xi, 0, 0), x22 = strain(xi, 1, 1);
    const Field3 cut = c.Ecal_dz();
    Field3 trace(g), n1(g), n2(g), n1c(g), n2c(g), n33(g);
    for (std::size_t p = 0; p < g.size(); ++p) {
        trace(p) = D(p) + 2.0 * c.E_star(p);
        n1(p) = 2.0 * x11(p) + D(p) + 2.0 * c.E0_cor(p);
        n2(p) = 2.0 * x22(p) + D(p) + 2.0 * c.E0_cor(p);
        n1c(p) = 2.0 * x11(p) + D(p) + 2.0 * cut(p);
        n2c(p) = 2.0 * x22(p) + D(p) + 2.0 * cut(p);
        n33(p) = 2.0 * e33(p) + D(p);
    }
    StressReport r;
    r.eps = eps;
    r.trace = l2_norm(trace);
    r.normal_1 = l2_norm(n1);
    r.normal_2 = l2_norm(n2);
    r.normal_1_cutoff = l2_norm(n1c);
    r.normal_2_cutoff = l2_norm(n2c);
    r.shear_12 = 2.0 * l2_norm(strain(xi, 0, 1));
    const auto sampled = detail::sampled_strain_norms(s.w, eps);
    r.shear_13 = sampled[4];
    r.shear_23 = sampled[5];
    r.normal_33 = l2_norm(n33);
    return r;
}

/// A priori scaled quantities of one slab state.
inline BoundReport scaled_bounds(const BiotState& s, double eps) {
    BoundReport r;
    r.eps = eps;
    const auto sampled = detail::sampled_strain_norms(s.w, eps);
    r.shear = std::hypot(sampled[4], sampled[5]);
    Field3 e33 = dz(detail::component(s.w, 2));
    r.compression = l2_norm(e33) / (eps * eps);
    r.pressure_dz = l2_norm(dz(s.pi));
    r.pressure_grad = eps * l2_norm(grad2(s.pi));
    return r;
}

namespace detail {

template <class Report, class F>
Report time_max(std::size_t steps, double eps, F&& at) {
    Report out;
    out.eps = eps;
    for (std::size_t n = 0; n < steps; ++n) {
        const Report r = at(n);
        for (const auto& [name, m] : Report::fields()) out.*m = std::max(out.*m, r.*m);
    }
    return out;
}

}  // namespace detail

/// max over time of the corrected error norms.
inline NormReport corrected_error_norms(const BiotTrajectory& biot, const LimitTrajectory& limit,
                                        const std::vector<CorrectorFields>& corr, double eps) {
    detail::check_time_grids(biot, corr);
    (void)limit;
    return detail::time_max<NormReport>(corr.size(), eps,
                                        [&](std::size_t n) { return corrected_error_norms(biot.states[n], corr[n]); });
}

/// max over time of the stress discrepancies.
inline StressReport stress_error_norms(const BiotTrajectory& biot, const LimitTrajectory& limit,
                                       const std::vector<CorrectorFields>& corr, double eps) {
    detail::check_time_grids(biot, corr);
    return detail::time_max<StressReport>(corr.size(), eps, [&](std::size_t n) {
        return stress_error_norms(biot.states[n], corr[n], limit.config.params);
    });
}

/// max over time of the a priori scaled quantities.
inline BoundReport scaled_bounds(const BiotTrajectory& biot) {
    return detail::time_max<BoundReport>(biot.states.size(), biot.eps,
                                         [&](std::size_t n) { return scaled_bounds(biot.states[n], biot.eps); });
}

/// Thickness convention of the resultants: plate thickness and shear modulus.
struct ThicknessConvention {
    double ell = 2.0;  ///< the scaled slab (-1, 1)
    double G = 1.0;
};

/// Plate resultants and moments per unit length, by quadrature and by closed forms.
struct ResultantField {
    Field2 N1, N2, N12, M1, M2, M12, N, M, Q1, Q2;  ///< thickness quadrature of the stresses
    Field2 f1, f2, m1, m2;                          ///< tangential loads and external moments
    Field2 N1_closed, N2_closed, N12_closed, M1_closed, M2_closed, M12_closed;
    double discrepancy = 0.0;  ///< largest |quadrature - closed form|
};

/// Resultants of (w, p) on the slab. Stresses follow the isotropic law with the plate
/// assumption sigma_33 = 0; thickness integrals use Simpson's rule.
inline ResultantField resultants_and_moments(const Field3& w, const Field3& p, const DimensionlessParams& params,
                                             const ThicknessConvention& tc = {}, const LoadSpec* loads = nullptr,
                                             double t = 0.0) {
    if (w.components() != 3 || p.components() != 1) throw ShapeError("resultants expect a displacement and a pressure");
    if (!(w.grid() == p.grid())) throw ShapeError("resultants: grid mismatch");
    const Grid3D& g = w.grid();
    const Grid2D& b = g.base;
    const double nu = params.nu, G = tc.G, ell = tc.ell, half = 0.5 * ell;
    const double c = params.coupling();
    const Field3 wf = [&] { Field3 x = w; x.set_boundary(Boundary::Free); return x; }();
    const Field3 e11 = strain(wf, 0, 0), e22 = strain(wf, 1, 1), e12 = strain(wf, 0, 1);
    // Transverse shear strains in thickness coordinates x3 = y3 ell / 2.
    Field3 e13 = partial(wf, 0, 2), e23 = partial(wf, 1, 2);
    {
        Field3 d1 = partial(wf, 2, 0), d2 = partial(wf, 2, 1);
        d1 *= 1.0 / half;
        d2 *= 1.0 / half;
        e13 += d1;
        e23 += d2;
        e13 *= 0.5;
        e23 *= 0.5;
    }
    Field3 s11(g), s22(g), s12(g), s13(g), s23(g);
    for (std::size_t q = 0; q < g.size(); ++q) {
        s11(q) = 2.0 * G / (1.0 - nu) * (e11(q) + nu * e22(q)) - c * p(q);
        s22(q) = 2.0 * G / (1.0 - nu) * (e22(q) + nu * e11(q)) - c * p(q);
        s12(q) = 2.0 * G * e12(q);
        s13(q) = 2.0 * G * e13(q);
        s23(q) = 2.0 * G * e23(q);
    }
    auto integral = [&](const Field3& f, int power) {
        Field2 out = moment_integrals(f, power);
        out *= power == 0 ? half : half * half;
        return out;
    };
    ResultantField r;
    r.N1 = integral(s11, 0);
    r.N2 = integral(s22, 0);
    r.N12 = integral(s12, 0);
    r.M1 = integral(s11, 1);
    r.M2 = integral(s22, 1);
    r.M12 = integral(s12, 1);
    r.Q1 = integral(s13, 0);
    r.Q2 = integral(s23, 0);
    r.N = -1.0 * integral(p, 0);
    r.M = -1.0 * integral(p, 1);

    // Closed forms from the midsurface displacement and the rotation field -dw_j/dx3.
    const Field2 mid = restrict_to_midplane(wf);
    Field2 rot(b, 2);
    {
        const Field3 r1 = partial(wf, 2, 0), r2 = partial(wf, 2, 1);
        const std::size_t off = static_cast<std::size_t>(g.mid()) * g.layer();
        for (std::size_t q = 0; q < b.size(); ++q) {
            rot(q, 0) = -r1(off + q) / half;
            rot(q, 1) = -r2(off + q) / half;
        }
    }
    const Field2 u11 = partial(mid, 0, 0), u22 = partial(mid, 1, 1), u12 = partial(mid, 1, 0), u21 = partial(mid, 0, 1);
    const Field2 k11 = partial(rot, 0, 0), k22 = partial(rot, 1, 1);
    Field2 k12 = partial(rot, 1, 0) + partial(rot, 0, 1);
    k12 *= 0.5;
    const double bend = G * ell * ell * ell / 6.0;
    r.N1_closed = r.N2_closed = r.N12_closed = r.M1_closed = r.M2_closed = r.M12_closed = Field2(b);
    for (std::size_t q = 0; q < b.size(); ++q) {
        r.N1_closed(q) = 2.0 * G * ell / (1.0 - nu) * (u11(q) + nu * u22(q)) + c * r.N(q);
        r.N2_closed(q) = 2.0 * G * ell / (1.0 - nu) * (u22(q) + nu * u11(q)) + c * r.N(q);
        r.N12_closed(q) = G * ell * (u12(q) + u21(q));
        r.M1_closed(q) = -bend / (1.0 - nu) * (k11(q) + nu * k22(q)) + c * r.M(q);
        r.M2_closed(q) = -bend / (1.0 - nu) * (k22(q) + nu * k11(q)) + c * r.M(q);
        r.M12_closed(q) = -bend * k12(q);
    }
    const std::array<std::pair<const Field2*, const Field2*>, 6> pairs = {{{&r.N1, &r.N1_closed},
                                                                           {&r.N2, &r.N2_closed},
                                                                           {&r.N12, &r.N12_closed},
                                                                           {&r.M1, &r.M1_closed},
                                                                           {&r.M2, &r.M2_closed},
                                                                           {&r.M12, &r.M12_closed}}};
    for (const auto& [a, z] : pairs) r.discrepancy = std::max(r.discrepancy, (*a - *z).max_abs());

    r.f1 = r.f2 = r.m1 = r.m2 = Field2(b);
    if (loads) {
        fill(r.f1, [&](double y1, double y2) { return loads->P(0, Face::Top, y1, y2, t) + loads->P(0, Face::Bottom, y1, y2, t); });
        fill(r.f2, [&](double y1, double y2) { return loads->P(1, Face::Top, y1, y2, t) + loads->P(1, Face::Bottom, y1, y2, t); });
        fill(r.m1, [&](double y1, double y2) { return half * (loads->P(0, Face::Top, y1, y2, t) - loads->P(0, Face::Bottom, y1, y2, t)); });
        fill(r.m2, [&](double y1, double y2) { return half * (loads->P(1, Face::Top, y1, y2, t) - loads->P(1, Face::Bottom, y1, y2, t)); });
    }
    return r;
}

/// Resultants of a limit state: the Kirchhoff-Love lift and the full limit pressure.
inline ResultantField limit_resultants(const LimitState& s, const DimensionlessParams& params, const LoadSpec* loads = nullptr) {
    const Grid3D& g = s.pi_w.grid();
    return resultants_and_moments(lift_limit(s, g), s.pi0(), params, ThicknessConvention{}, loads, s.t);
}

/// L2 norms of the discrete in-plane and moment equilibrium residuals.
struct EquilibriumResiduals {
    double inplane_1 = 0.0;
    double inplane_2 = 0.0;
    double moment = 0.0;
};

/// Residuals of dN1/dy1 + dN12/dy2 + f1, dN12/dy1 + dN2/dy2 + f2 and
/// d11 M1 + 2 d12 M12 + d22 M2 + d1 m1 + d2 m2 + P3+ + P3-, with the tangential
/// loads and moments taken from `loads` at time t (moment arm ell / 2).
///
/// Norms run over the interior nodes at distance >= `margin` from the boundary. Near the
/// clamped corners the deflection has unbounded fourth derivatives, so stencils close to
/// the boundary do not see the O(h^2) truncation of the smooth interior.
inline EquilibriumResiduals equilibrium_residuals(const ResultantField& r, const LoadSpec& loads, double t,
                                                  const ThicknessConvention& tc = {}, double margin = 0.25) {
    const Grid2D& g = r.N1.grid();
    const double half = 0.5 * tc.ell;
    Field2 f1(g), f2(g), m1(g), m2(g), p3(g);
    fill(f1, [&](double y1, double y2) { return loads.P(0, Face::Top, y1, y2, t) + loads.P(0, Face::Bottom, y1, y2, t); });
    fill(f2, [&](double y1, double y2) { return loads.P(1, Face::Top, y1, y2, t) + loads.P(1, Face::Bottom, y1, y2, t); });
    fill(m1, [&](double y1, double y2) { return half * (loads.P(0, Face::Top, y1, y2, t) - loads.P(0, Face::Bottom, y1, y2, t)); });
    fill(m2, [&](double y1, double y2) { return half * (loads.P(1, Face::Top, y1, y2, t) - loads.P(1, Face::Bottom, y1, y2, t)); });
    fill(p3, [&](double y1, double y2) { return loads.P(2, Face::Top, y1, y2, t) + loads.P(2, Face::Bottom, y1, y2, t); });

    const Field2 R1 = partial(r.N1, 0) + partial(r.N12, 1) + f1;
    const Field2 R2 = partial(r.N12, 0) + partial(r.N2, 1) + f2;
    Field2 twist = partial2(r.M12, 0, 1);
    twist *= 2.0;
    const Field2 Rm = partial2(r.M1, 0, 0) + twist + partial2(r.M2, 1, 1) + partial(m1, 0) + partial(m2, 1) + p3;

    auto norm = [&](const Field2& f) {
        double s = 0.0;
        for (int j = 1; j < g.n; ++j)
            for (int i = 1; i < g.n; ++i) {
                const double d = std::min({i, j, g.n - i, g.n - j}) * g.h;
                if (d >= margin - 1e-12) s += g.h * g.h * f(g.index(i, j)) * f(g.index(i, j));
            }
        return std::sqrt(s);
    };
    return {norm(R1), norm(R2), norm(Rm)};
}

/// Empirical rates log(e_i / e_{i+1}) / log(eps_i / eps_{i+1}); empty where undefined.
inline std::vector<std::optional<double>> estimate_rate(const std::vector<double>& errors,
                                                        const std::vector<double>& epsilons) {
    if (errors.size() != epsilons.size() || errors.size() < 2)
        throw ShapeError("estimate_rate needs two or more matching entries");
    for (std::size_t i = 1; i < epsilons.size(); ++i)
        if (!(epsilons[i] < epsilons[i - 1]) || !(epsilons[i] > 0.0))
            throw InvalidParameter("eps", "thickness ratios must be positive and strictly decreasing");
    std::vector<std::optional<double>> out;
    for (std::size_t i = 0; i + 1 < errors.size(); ++i) {
        if (!(errors[i] > 0.0) || !(errors[i + 1] > 0.0) || !std::isfinite(errors[i]) || !std::isfinite(errors[i + 1]))
            out.push_back(std::nullopt);
        else
            out.push_back(std::log(errors[i] / errors[i + 1]) / std::log(epsilons[i] / epsilons[i + 1]));
    }
    return out;
}

}  // namespace poroplate
