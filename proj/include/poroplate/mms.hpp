/**
 * @file mms.hpp
 * @brief Manufactured solutions for the limit model and grid-refinement studies.
 */
#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "poroplate/limit2d.hpp"

namespace poroplate {

/// Observed order log(e_coarse / e_fine) / log(h_coarse / h_fine) between consecutive levels.
inline std::vector<double> observed_orders(const std::vector<double>& h, const std::vector<double>& err) {
    if (h.size() != err.size()) throw ShapeError("observed_orders: length mismatch");
    std::vector<double> out;
    for (std::size_t i = 1; i < h.size(); ++i) out.push_back(std::log(err[i - 1] / err[i]) / std::log(h[i - 1] / h[i]));
    return out;
}

/// Convergence table of one refinement study.
struct ConvergenceStudy {
    std::vector<double> h;  ///< mesh width (or time step for temporal studies)
    std::vector<double> error_primary;    ///< in-plane field or deflection
    std::vector<double> error_secondary;  ///< mean pressure or pressure fluctuation
    std::vector<double> order_primary() const { return observed_orders(h, error_primary); }
    std::vector<double> order_secondary() const { return observed_orders(h, error_secondary); }
};

/// Membrane solution w = (sin^2(pi y1) sin(2 pi y2), sin(2 pi y1) sin^2(pi y2)).
struct MembraneManufactured {
    DimensionlessParams params;

    double w(int c, double y1, double y2) const {
        const double a = std::numbers::pi * y1, b = std::numbers::pi * y2;
        return c == 0 ? std::pow(std::sin(a), 2) * std::sin(2 * b) : std::sin(2 * a) * std::pow(std::sin(b), 2);
    }
    double divergence(double y1, double y2) const {
        const double pi = std::numbers::pi;
        return 2 * pi * std::sin(2 * pi * y1) * std::sin(2 * pi * y2);
    }
    double mean_pressure(double y1, double y2) const {
        return -params.coupling() / params.storage() * divergence(y1, y2);
    }
    /// Body force -lap w - g grad div w + c grad pi_m, i.e. g augmented by c^2 / beta.
    double force(int c, double y1, double y2) const {
        const double pi = std::numbers::pi, p2 = pi * pi;
        const double a = pi * y1, b = pi * y2;
        const double g = params.membrane_graddiv() + params.coupling() * params.coupling() / params.storage();
        const double s2a = std::sin(2 * a), c2a = std::cos(2 * a), s2b = std::sin(2 * b), c2b = std::cos(2 * b);
        const double sa2 = std::pow(std::sin(a), 2), sb2 = std::pow(std::sin(b), 2);
        if (c == 0) return -(2 * p2 * c2a * s2b - 4 * p2 * sa2 * s2b) - g * 4 * p2 * c2a * s2b;
        return -(-4 * p2 * s2a * sb2 + 2 * p2 * s2a * c2b) - g * 4 * p2 * s2a * c2b;
    }
    /// Tangential tractions P+ = P- = force, i.e. their mean equals the body force.
    LoadSpec loads() const {
        LoadSpec l;
        for (int f = 0; f < 2; ++f)
            for (int c = 0; c < 2; ++c)
                l.traction[f][c] = [*this, c](double y1, double y2, double) { return force(c, y1, y2); };
        return l;
    }
};

/// Membrane refinement study: discrete L2 errors of w0 and pi_m on n x n grids.
inline ConvergenceStudy membrane_convergence(const DimensionlessParams& params, const std::vector<int>& cells) {
    const MembraneManufactured mms{params};
    const LoadSpec loads = mms.loads();
    ConvergenceStudy out;
    for (int n : cells) {
        const Grid2D g(n);
        const MembraneSolution s = solve_membrane(loads, 1.0, params, g);
        Field2 ew = s.inplane, ep = s.pi_m;
        for (int c = 0; c < 2; ++c)
            fill(ew, [&](double y1, double y2) { return s.inplane(g.index(std::lround(y1 / g.h), std::lround(y2 / g.h)), c) - mms.w(c, y1, y2); }, c);
        fill(ep, [&](double y1, double y2) { return s.pi_m(g.index(std::lround(y1 / g.h), std::lround(y2 / g.h))) - mms.mean_pressure(y1, y2); });
        out.h.push_back(g.h);
        out.error_primary.push_back(l2_norm(ew));
        out.error_secondary.push_back(l2_norm(ep));
    }
    return out;
}

/// Clamped deflection 16 p(y1) p(y2) r(t), p(s) = s^2 (1 - s)^2, and a zero-column-mean
/// fluctuation (y3^3/3 - y3) cos(pi y1) cos(pi y2) r(t) with no-flux faces.
struct BendingManufactured {
    DimensionlessParams params;
    Ramp ramp{1.0};

    static double p(double s) { return s * s * (1 - s) * (1 - s); }
    static double dp2(double s) { return 2.0 - 12.0 * s + 12.0 * s * s; }
    static double q(double y1, double y2) {
        return std::cos(std::numbers::pi * y1) * std::cos(std::numbers::pi * y2);
    }
    static double profile(double y3) { return y3 * y3 * y3 / 3.0 - y3; }

    double w3(double y1, double y2, double t) const { return 16.0 * p(y1) * p(y2) * ramp(t); }
    double pi_w(double y1, double y2, double y3, double t) const { return profile(y3) * q(y1, y2) * ramp(t); }
    double laplacian_w3(double y1, double y2) const { return 16.0 * (dp2(y1) * p(y2) + p(y1) * dp2(y2)); }
    double bilaplacian_w3(double y1, double y2) const {
        return 16.0 * (24.0 * p(y2) + 2.0 * dp2(y1) * dp2(y2) + 24.0 * p(y1));
    }

    ManufacturedSources sources() const {
        ManufacturedSources s;
        const auto self = *this;
        const double pi2 = std::numbers::pi * std::numbers::pi;
        // D0 lap^2 w + c lap(int y3 pi): the first moment of the profile is -8/15.
        s.bending = [self, pi2](double y1, double y2, double t) {
            const auto& pr = self.params;
            return (pr.flexural() * self.bilaplacian_w3(y1, y2) + pr.coupling() * (16.0 / 15.0) * pi2 * q(y1, y2)) *
                   self.ramp(t);
        };
        // beta d_t pi - d33 pi - c y3 lap d_t w.
        s.pressure = [self](double y1, double y2, double y3, double t) {
            const auto& pr = self.params;
            const double r = self.ramp(t), dr = self.ramp.derivative(t);
            return pr.storage() * profile(y3) * q(y1, y2) * dr - 2.0 * y3 * q(y1, y2) * r -
                   pr.coupling() * y3 * self.laplacian_w3(y1, y2) * dr;
        };
        return s;
    }
};

/// Largest-in-time discrete L2 errors of (w3, pi_w) for one run.
inline std::pair<double, double> bending_errors(const BendingManufactured& mms, const Grid3D& g, int nsteps,
                                                TimeScheme scheme = TimeScheme::BackwardEuler) {
    LimitConfig cfg;
    cfg.grid = g;
    cfg.params = mms.params;
    cfg.sources = mms.sources();
    cfg.t_end = 1.0;
    cfg.nsteps = nsteps;
    cfg.scheme = scheme;
    const BendingPressureOperator op(g, mms.params);
    const BendingPressureStepper stepper(std::make_shared<BendingPressureOperator>(op), cfg.dt(), scheme, cfg.tol);
    LimitState s = LimitState::zero(g);
    double ew = 0.0, ep = 0.0;
    for (int n = 1; n <= nsteps; ++n) {
        s = stepper.step(s, cfg.loads, &cfg.sources);
        Field2 dw = s.w3;
        Field3 dp = s.pi_w;
        const double t = s.t;
        for (std::size_t q = 0; q < g.layer(); ++q) {
            const int i = static_cast<int>(q % g.base.side()), j = static_cast<int>(q / g.base.side());
            dw(q) -= mms.w3(g.base.coord(i), g.base.coord(j), t);
            for (int k = 0; k <= g.nz; ++k)
                dp(g.index(i, j, k)) -= mms.pi_w(g.base.coord(i), g.base.coord(j), g.z(k), t);
        }
        ew = std::max(ew, l2_norm(dw));
        ep = std::max(ep, l2_norm(dp));
    }
    return {ew, ep};
}

/// Spatial study with dt proportional to h^2 (dt = 4 h^2) and nz = n / 2.
inline ConvergenceStudy bending_spatial_convergence(const DimensionlessParams& params, const std::vector<int>& cells) {
    const BendingManufactured mms{params};
    ConvergenceStudy out;
    for (int n : cells) {
        const Grid3D g(Grid2D(n), std::max(2, n / 2));
        const int nsteps = std::max(1, n * n / 4);
        const auto [ew, ep] = bending_errors(mms, g, nsteps);
        out.h.push_back(1.0 / n);
        out.error_primary.push_back(ew);
        out.error_secondary.push_back(ep);
    }
    return out;
}

/// Temporal study at a fixed grid; the table's h column holds the time step.
inline ConvergenceStudy bending_temporal_convergence(const DimensionlessParams& params, const Grid3D& g,
                                                     const std::vector<int>& steps,
                                                     TimeScheme scheme = TimeScheme::BackwardEuler) {
    const BendingManufactured mms{params};
    ConvergenceStudy out;
    for (int ns : steps) {
        const auto [ew, ep] = bending_errors(mms, g, ns, scheme);
        out.h.push_back(1.0 / ns);
        out.error_primary.push_back(ew);
        out.error_secondary.push_back(ep);
    }
    return out;
}

}  // namespace poroplate
