/**
 * @file params.hpp
 * @brief Physical and dimensionless plate parameters, load data and the time ramp.
 */
#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>

#include "poroplate/error.hpp"

namespace poroplate {

/// Width of the excluded band below the incompressible limit nu = 1/2.
inline constexpr double kPoissonExclusion = 1e-3;

/// Material and geometric data in SI units.
struct PhysicalParams {
    double G = 1.0;        ///< drained shear modulus [Pa]
    double nu = 0.25;      ///< drained Poisson ratio [-]
    double gammaG = 1.0;   ///< inverse Biot modulus [1/Pa]
    double alpha = 0.9;    ///< effective stress coefficient [-]
    double k = 1.0;        ///< permeability [m^2]
    double eta = 1.0;      ///< fluid viscosity [Pa s]
    double L = 1.0;        ///< midsurface length [m]
    double ell = 0.2;      ///< plate thickness [m]
};

/// Scaled constants driving both solvers.
struct DimensionlessParams {
    double eps = 0.1;         ///< thickness ratio ell / (2 L)
    double gamma = 1.0;       ///< storage coefficient gammaG * G
    double lambda = 1.0;      ///< scaled Lame coefficient 2 nu / (1 - 2 nu)
    double alpha = 0.9;
    double nu = 0.25;
    double T_terzaghi = 1.0;  ///< transverse consolidation time [s]

    /// alpha (1 - 2 nu) / (1 - nu): pressure coupling in the plate equations.
    double coupling() const { return alpha * (1.0 - 2.0 * nu) / (1.0 - nu); }
    /// gamma + alpha^2 (1 - 2 nu) / (2 (1 - nu)): effective storage of the limit pressure.
    double storage() const { return gamma + alpha * alpha * (1.0 - 2.0 * nu) / (2.0 * (1.0 - nu)); }
    /// 4 / (3 (1 - nu)): scaled flexural rigidity.
    double flexural() const { return 4.0 / (3.0 * (1.0 - nu)); }
    /// (1 + nu) / (1 - nu): grad-div weight of the membrane operator.
    double membrane_graddiv() const { return (1.0 + nu) / (1.0 - nu); }
    /// 2 (1 - nu) / (1 - 2 nu) = 2 + lambda: through-thickness compression weight.
    double compression() const { return 2.0 + lambda; }
};

/// Scaled parameters from the physical ones; throws InvalidParameter naming the bad field.
inline DimensionlessParams derive_dimensionless(const PhysicalParams& p) {
    auto positive = [](double v, const char* key) {
        if (!(v > 0.0) || !std::isfinite(v)) throw InvalidParameter(key, "must be positive and finite");
    };
    positive(p.G, "G");
    positive(p.k, "k");
    positive(p.eta, "eta");
    positive(p.L, "L");
    positive(p.ell, "ell");
    if (!(p.ell < p.L)) throw InvalidParameter("ell", "thickness must be smaller than the length L");
    if (!(p.nu > 0.0 && p.nu < 0.5 - kPoissonExclusion))
        throw InvalidParameter("nu", "must lie in (0, 1/2 - 1e-3)");
    if (!(p.gammaG >= 0.0) || !std::isfinite(p.gammaG)) throw InvalidParameter("gammaG", "must be nonnegative");
    if (!(p.alpha >= 0.0 && p.alpha <= 1.0)) throw InvalidParameter("alpha", "must lie in [0, 1]");

    DimensionlessParams d;
    d.eps = p.ell / (2.0 * p.L);
    d.gamma = p.gammaG * p.G;
    d.lambda = 2.0 * p.nu / (1.0 - 2.0 * p.nu);
    d.alpha = p.alpha;
    d.nu = p.nu;
    d.T_terzaghi = p.eta * p.ell * p.ell / (4.0 * p.k * p.G);
    return d;
}

/// Passes iff every DimensionlessParams invariant holds; otherwise names the first violation.
inline void validate(const DimensionlessParams& d) {
    if (!(d.nu > 0.0 && d.nu < 0.5 - kPoissonExclusion))
        throw InvalidParameter("nu", "must lie in (0, 1/2 - 1e-3)");
    if (!(d.eps > 0.0 && d.eps < 0.5)) throw InvalidParameter("eps", "must lie in (0, 1/2)");
    if (!(d.gamma >= 0.0) || !std::isfinite(d.gamma)) throw InvalidParameter("gamma", "must be nonnegative");
    if (!(d.lambda > 0.0)) throw InvalidParameter("lambda", "must be positive");
    const double expected = 2.0 * d.nu / (1.0 - 2.0 * d.nu);
    if (std::abs(d.lambda - expected) > 1e-12 * expected)
        throw InvalidParameter("lambda", "must equal 2 nu / (1 - 2 nu)");
    if (!(d.alpha >= 0.0 && d.alpha <= 1.0)) throw InvalidParameter("alpha", "must lie in [0, 1]");
    if (!(d.T_terzaghi > 0.0) || !std::isfinite(d.T_terzaghi))
        throw InvalidParameter("T_terzaghi", "must be positive");
}

/// Scaled parameter set from the four material numbers, lambda recomputed from nu.
inline DimensionlessParams make_dimensionless(double gamma, double nu, double alpha, double eps) {
    DimensionlessParams d;
    d.gamma = gamma;
    d.nu = nu;
    d.alpha = alpha;
    d.eps = eps;
    d.lambda = 2.0 * nu / (1.0 - 2.0 * nu);
    d.T_terzaghi = 1.0;
    validate(d);
    return d;
}

/// Characteristic pressure G d / L for a chosen characteristic displacement d (log output only).
inline double characteristic_pressure(const PhysicalParams& p, double displacement) {
    return p.G * displacement / p.L;
}

/// Smooth start-up envelope: sin^2(pi t / (2 t0)) up to t0, then 1.
struct Ramp {
    double t0 = 0.25;

    double operator()(double t) const {
        if (t <= 0.0) return 0.0;
        if (t >= t0) return 1.0;
        const double s = std::sin(std::numbers::pi * t / (2.0 * t0));
        return s * s;
    }
    double derivative(double t) const {
        if (t <= 0.0 || t >= t0) return 0.0;
        return std::numbers::pi / (2.0 * t0) * std::sin(std::numbers::pi * t / t0);
    }
};

/// Default ramp reaching 1 at a quarter of the final time.
inline Ramp default_ramp(double t_end) { return Ramp{t_end / 4.0}; }

enum class Face { Bottom = 0, Top = 1 };

/// Scalar data on the top/bottom faces or on the lateral boundary, as f(y1, y2, t).
using SurfaceLoad = std::function<double(double, double, double)>;

/// Load data as closures, so a single instance serves every grid of a sweep.
struct LoadSpec {
    /// traction[face][component], components 0..2 = P1, P2, P3.
    std::array<std::array<SurfaceLoad, 3>, 2> traction{};
    /// Normal flux U on the top and bottom faces.
    SurfaceLoad flux{};
    /// Lateral in/outflow flux V, evaluated at boundary points (y1, y2) of the square.
    SurfaceLoad lateral{};

    double P(int component, Face face, double y1, double y2, double t) const {
        const auto& f = traction[static_cast<int>(face)][component];
        return f ? f(y1, y2, t) : 0.0;
    }
    double U(double y1, double y2, double t) const { return flux ? flux(y1, y2, t) : 0.0; }
    double V(double y1, double y2, double t) const { return lateral ? lateral(y1, y2, t) : 0.0; }

    bool has_tangential() const {
        for (const auto& face : traction)
            if (face[0] || face[1]) return true;
        return false;
    }
};

/// Load set with every entry absent (identically zero).
inline LoadSpec zero_loads() { return LoadSpec{}; }

/// Samples the loads at t = 0 and throws unless every sampled value vanishes.
inline void check_vanishing_at_start(const LoadSpec& loads, int samples = 9) {
    for (int a = 0; a <= samples; ++a) {
        for (int b = 0; b <= samples; ++b) {
            const double y1 = static_cast<double>(a) / samples;
            const double y2 = static_cast<double>(b) / samples;
            for (int c = 0; c < 3; ++c)
                for (Face f : {Face::Bottom, Face::Top})
                    if (loads.P(c, f, y1, y2, 0.0) != 0.0)
                        throw InvalidParameter("traction", "loads must vanish at t = 0");
            if (loads.U(y1, y2, 0.0) != 0.0) throw InvalidParameter("flux", "loads must vanish at t = 0");
            if (loads.V(y1, y2, 0.0) != 0.0) throw InvalidParameter("lateral", "loads must vanish at t = 0");
        }
    }
}

}  // namespace poroplate
