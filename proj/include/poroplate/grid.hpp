/**
 * @file grid.hpp
 * @brief Tensor grids on the unit square and the slab (0,1)^2 x (-1,1), nodal fields,
 *        finite-difference operators and vertical quadrature.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <type_traits>
#include <string>
#include <vector>

#include "poroplate/error.hpp"

namespace poroplate {

/// Smallest admissible number of cells per side.
inline constexpr int kMinCells = 4;

/// Uniform grid of the unit square with n x n cells; nodes include the boundary.
struct Grid2D {
    int n = 16;
    double h = 1.0 / 16;

    Grid2D() = default;
    explicit Grid2D(int cells) : n(cells), h(1.0 / cells) {
        if (cells < kMinCells) throw InvalidParameter("grid.n", "at least 4 cells per side required");
    }

    int side() const { return n + 1; }
    std::size_t size() const { return static_cast<std::size_t>(side()) * side(); }
    std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * side() + i; }
    double coord(int i) const { return i * h; }
    bool on_boundary(int i, int j) const { return i == 0 || j == 0 || i == n || j == n; }
    /// Trapezoid weight: 1 inside, 1/2 on edges, 1/4 at corners (multiply by h^2 for area).
    double trapezoid(int i, int j) const {
        double w = 1.0;
        if (i == 0 || i == n) w *= 0.5;
        if (j == 0 || j == n) w *= 0.5;
        return w;
    }
    bool operator==(const Grid2D& o) const { return n == o.n; }
};

/// Composite Simpson weights for nz (even) intervals of width hz.
inline std::vector<double> simpson_weights(int nz, double hz) {
    if (nz < 2 || nz % 2 != 0) throw InvalidParameter("grid.nz", "Simpson quadrature needs an even count");
    std::vector<double> w(nz + 1);
    for (int k = 0; k <= nz; ++k) w[k] = (k == 0 || k == nz) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
    for (double& x : w) x *= hz / 3.0;
    return w;
}

/// Slab grid: a horizontal Grid2D times nz (even) cells on (-1, 1).
struct Grid3D {
    Grid2D base;
    int nz = 8;
    double hz = 0.25;

    Grid3D() = default;
    Grid3D(Grid2D b, int vertical) : base(b), nz(vertical), hz(2.0 / vertical) {
        if (vertical < 2 || vertical % 2 != 0)
            throw InvalidParameter("grid.nz", "vertical cell count must be even and at least 2");
    }

    int n() const { return base.n; }
    double h() const { return base.h; }
    std::size_t layer() const { return base.size(); }
    std::size_t size() const { return layer() * static_cast<std::size_t>(nz + 1); }
    std::size_t index(int i, int j, int k) const { return static_cast<std::size_t>(k) * layer() + base.index(i, j); }
    double z(int k) const { return -1.0 + k * hz; }
    int mid() const { return nz / 2; }
    std::vector<double> simpson() const { return simpson_weights(nz, hz); }
    bool operator==(const Grid3D& o) const { return base == o.base && nz == o.nz; }
};

/// Boundary treatment carried by a field.
enum class Boundary { LateralDirichlet, Free, Clamped };

/// Nodal field with 1..3 components stored component-major.
template <class GridT>
class Field {
public:
    Field() = default;
    Field(const GridT& g, int components = 1, Boundary bc = Boundary::Free)
        : grid_(g), ncomp_(components), bc_(bc), values_(g.size() * components, 0.0) {
        if (components < 1 || components > 3) throw ShapeError("field component count must be 1, 2 or 3");
    }

    const GridT& grid() const { return grid_; }
    int components() const { return ncomp_; }
    Boundary boundary() const { return bc_; }
    void set_boundary(Boundary bc) { bc_ = bc; }
    std::size_t nodes() const { return grid_.size(); }

    double& operator()(std::size_t node, int c = 0) { return values_[c * grid_.size() + node]; }
    double operator()(std::size_t node, int c = 0) const { return values_[c * grid_.size() + node]; }

    std::span<double> component(int c) { return {values_.data() + c * grid_.size(), grid_.size()}; }
    std::span<const double> component(int c) const { return {values_.data() + c * grid_.size(), grid_.size()}; }
    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    /// Single component as its own scalar field.
    Field scalar(int c) const {
        Field out(grid_, 1, bc_);
        std::copy(component(c).begin(), component(c).end(), out.values_.begin());
        return out;
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::abs(v));
        return m;
    }
    bool all_finite() const {
        return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
    }
    const Field& require_finite(const char* where) const {
        if (!all_finite()) throw Error(std::string("non-finite value produced by ") + where);
        return *this;
    }

    Field& operator+=(const Field& o) {
        check_same(o);
        for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
        return *this;
    }
    Field& operator-=(const Field& o) {
        check_same(o);
        for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
        return *this;
    }
    Field& operator*=(double s) {
        for (double& v : values_) v *= s;
        return *this;
    }
    friend Field operator+(Field a, const Field& b) { return a += b; }
    friend Field operator-(Field a, const Field& b) { return a -= b; }
    friend Field operator*(double s, Field a) { return a *= s; }

    void check_same(const Field& o) const {
        if (!(grid_ == o.grid_) || ncomp_ != o.ncomp_) throw ShapeError("field shape mismatch");
    }

private:
    GridT grid_{};
    int ncomp_ = 1;
    Boundary bc_ = Boundary::Free;
    std::vector<double> values_;
};

using Field2 = Field<Grid2D>;
using Field3 = Field<Grid3D>;

/// Samples f(y1, y2) (or f(y1, y2, y3)) into component c.
template <class F>
void fill(Field2& out, F&& f, int c = 0) {
    const Grid2D& g = out.grid();
    for (int j = 0; j <= g.n; ++j)
        for (int i = 0; i <= g.n; ++i) out(g.index(i, j), c) = f(g.coord(i), g.coord(j));
}
template <class F>
void fill(Field3& out, F&& f, int c = 0) {
    const Grid3D& g = out.grid();
    for (int k = 0; k <= g.nz; ++k)
        for (int j = 0; j <= g.n(); ++j)
            for (int i = 0; i <= g.n(); ++i) out(g.index(i, j, k), c) = f(g.base.coord(i), g.base.coord(j), g.z(k));
}

namespace detail {

struct Axis {
    std::size_t stride;
    int count;      // nodes along the axis
    double step;
    std::size_t lines;
};

inline Axis axis_of(const Grid2D& g, int a) {
    return a == 0 ? Axis{1, g.side(), g.h, static_cast<std::size_t>(g.side())}
                  : Axis{static_cast<std::size_t>(g.side()), g.side(), g.h, static_cast<std::size_t>(g.side())};
}
inline Axis axis_of(const Grid3D& g, int a) {
    const std::size_t s = g.base.side();
    if (a == 0) return {1, g.base.side(), g.h(), s * (g.nz + 1)};
    if (a == 1) return {s, g.base.side(), g.h(), s * (g.nz + 1)};
    return {g.layer(), g.nz + 1, g.hz, g.layer()};
}

/// Start offset of line `l` for an axis with the given stride.
inline std::size_t line_start(std::size_t l, const Axis& ax, std::size_t side) {
    if (ax.stride == 1) return l * side;
    // stride spans one index: decompose l into (before, after) parts around the axis.
    const std::size_t before = l % ax.stride;
    const std::size_t after = l / ax.stride;
    return before + after * ax.stride * ax.count;
}

/// First derivative along one axis: centered inside, second-order one-sided at the ends,
/// or zero at the ends when `even_reflection` (ghost reflection of a clamped field).
inline void first_derivative(const double* in, double* out, const Axis& ax, std::size_t lines, std::size_t side,
                             bool even_reflection) {
    const double inv2h = 1.0 / (2.0 * ax.step);
    const int m = ax.count - 1;
    for (std::size_t l = 0; l < lines; ++l) {
        const std::size_t s0 = line_start(l, ax, side);
        auto at = [&](int p) { return in[s0 + p * ax.stride]; };
        for (int p = 1; p < m; ++p) out[s0 + p * ax.stride] = (at(p + 1) - at(p - 1)) * inv2h;
        if (even_reflection) {
            out[s0] = 0.0;
            out[s0 + m * ax.stride] = 0.0;
        } else {
            out[s0] = (-3.0 * at(0) + 4.0 * at(1) - at(2)) * inv2h;
            out[s0 + m * ax.stride] = (3.0 * at(m) - 4.0 * at(m - 1) + at(m - 2)) * inv2h;
        }
    }
}

/// Second derivative along one axis; clamped ends use the ghost value f(-1) = f(1).
inline void second_derivative(const double* in, double* out, const Axis& ax, std::size_t lines, std::size_t side,
                              bool even_reflection) {
    const double invh2 = 1.0 / (ax.step * ax.step);
    const int m = ax.count - 1;
    for (std::size_t l = 0; l < lines; ++l) {
        const std::size_t s0 = line_start(l, ax, side);
        auto at = [&](int p) { return in[s0 + p * ax.stride]; };
        for (int p = 1; p < m; ++p) out[s0 + p * ax.stride] = (at(p + 1) - 2.0 * at(p) + at(p - 1)) * invh2;
        if (even_reflection) {
            out[s0] = 2.0 * (at(1) - at(0)) * invh2;
            out[s0 + m * ax.stride] = 2.0 * (at(m - 1) - at(m)) * invh2;
        } else {
            out[s0] = (2.0 * at(0) - 5.0 * at(1) + 4.0 * at(2) - at(3)) * invh2;
            out[s0 + m * ax.stride] = (2.0 * at(m) - 5.0 * at(m - 1) + 4.0 * at(m - 2) - at(m - 3)) * invh2;
        }
    }
}

template <class GridT>
std::size_t side_of(const GridT& g) {
    if constexpr (std::is_same_v<GridT, Grid2D>) return g.side();
    else return g.base.side();
}

}  // namespace detail

/// d/dy_axis of component c (axis 0, 1 horizontal; 2 vertical on slab fields).
template <class GridT>
Field<GridT> partial(const Field<GridT>& f, int axis, int c = 0) {
    const GridT& g = f.grid();
    constexpr int dims = std::is_same_v<GridT, Grid2D> ? 2 : 3;
    if (axis < 0 || axis >= dims) throw ShapeError("derivative axis out of range for this grid");
    if (c < 0 || c >= f.components()) throw ShapeError("component out of range");
    Field<GridT> out(g, 1, Boundary::Free);
    const auto ax = detail::axis_of(g, axis);
    const bool reflect = f.boundary() == Boundary::Clamped && axis < 2;
    detail::first_derivative(f.component(c).data(), out.component(0).data(), ax, ax.lines, detail::side_of(g),
                             reflect);
    return out;
}

/// d^2/dy_a dy_b of component c; clamped fields use ghost reflection.
template <class GridT>
Field<GridT> partial2(const Field<GridT>& f, int a, int b, int c = 0) {
    const GridT& g = f.grid();
    if (a == b) {
        constexpr int dims = std::is_same_v<GridT, Grid2D> ? 2 : 3;
        if (a < 0 || a >= dims) throw ShapeError("derivative axis out of range for this grid");
        Field<GridT> out(g, 1, Boundary::Free);
        const auto ax = detail::axis_of(g, a);
        const bool reflect = f.boundary() == Boundary::Clamped && a < 2;
        detail::second_derivative(f.component(c).data(), out.component(0).data(), ax, ax.lines, detail::side_of(g),
                                  reflect);
        return out;
    }
    Field<GridT> inner = partial(f, a, c);
    inner.set_boundary(f.boundary());
    return partial(inner, b, 0);
}

/// Horizontal gradient of a scalar field (two components).
template <class GridT>
Field<GridT> grad2(const Field<GridT>& f) {
    if (f.components() != 1) throw ShapeError("grad2 expects a scalar field");
    Field<GridT> out(f.grid(), 2, Boundary::Free);
    for (int a = 0; a < 2; ++a) {
        const auto d = partial(f, a);
        std::copy(d.component(0).begin(), d.component(0).end(), out.component(a).begin());
    }
    out.require_finite("grad2");
    return out;
}

/// Horizontal divergence of the first two components.
template <class GridT>
Field<GridT> div2(const Field<GridT>& f) {
    if (f.components() < 2) throw ShapeError("div2 expects at least two components");
    Field<GridT> out = partial(f, 0, 0);
    out += partial(f, 1, 1);
    out.require_finite("div2");
    return out;
}

/// Symmetric gradient component e_ab (0-based indices).
template <class GridT>
Field<GridT> strain(const Field<GridT>& w, int a, int b) {
    constexpr int dims = std::is_same_v<GridT, Grid2D> ? 2 : 3;
    if (w.components() < dims && (a >= w.components() || b >= w.components()))
        throw ShapeError("strain component requires more displacement components");
    if (a >= dims || b >= dims) throw ShapeError("strain index exceeds grid dimension");
    Field<GridT> out = partial(w, b, a);
    if (a != b) {
        out += partial(w, a, b);
        out *= 0.5;
    }
    out.require_finite("strain");
    return out;
}

/// Vertical derivative of a scalar slab field: centered inside, one-sided second order at y3 = +-1.
inline Field3 dz(const Field3& f) {
    if (f.components() != 1) throw ShapeError("dz expects a scalar field");
    Field3 out = partial(f, 2);
    out.require_finite("dz");
    return out;
}

/// Five-point Laplacian; clamped fields use ghost reflection at the boundary.
inline Field2 laplacian2(const Field2& f) {
    if (f.components() != 1) throw ShapeError("laplacian2 expects a scalar field");
    Field2 out = partial2(f, 0, 0);
    out += partial2(f, 1, 1);
    return out;
}

/// Thirteen-point biharmonic with ghost reflection (w = dw/dn = 0); zero on boundary nodes.
inline Field2 biharmonic2(const Field2& f) {
    if (f.components() != 1) throw ShapeError("biharmonic2 expects a scalar field");
    if (f.boundary() != Boundary::Clamped) throw ShapeError("biharmonic2 requires a clamped field");
    const Grid2D& g = f.grid();
    const Field2 lap = laplacian2(f);
    Field2 out(g, 1, Boundary::Free);
    const double invh2 = 1.0 / (g.h * g.h);
    for (int j = 1; j < g.n; ++j)
        for (int i = 1; i < g.n; ++i)
            out(g.index(i, j)) = (lap(g.index(i + 1, j)) + lap(g.index(i - 1, j)) + lap(g.index(i, j + 1)) +
                                  lap(g.index(i, j - 1)) - 4.0 * lap(g.index(i, j))) *
                                 invh2;
    out.require_finite("biharmonic2");
    return out;
}

enum class DiffOp { Grad2, Div2, E11, E22, E33, E12, E13, E23, Dz, Biharmonic2 };

/// Dispatches one of the named operators, checking dimensionality.
template <class GridT>
Field<GridT> apply_diff(const Field<GridT>& f, DiffOp op) {
    constexpr bool is3 = std::is_same_v<GridT, Grid3D>;
    switch (op) {
        case DiffOp::Grad2: return grad2(f);
        case DiffOp::Div2: return div2(f);
        case DiffOp::E11: return strain(f, 0, 0);
        case DiffOp::E22: return strain(f, 1, 1);
        case DiffOp::E12: return strain(f, 0, 1);
        case DiffOp::E13:
        case DiffOp::E23:
        case DiffOp::E33:
        case DiffOp::Dz:
            if constexpr (is3) {
                if (op == DiffOp::Dz) return dz(f);
                if (f.components() != 3) throw ShapeError("vertical strains need three components");
                if (op == DiffOp::E13) return strain(f, 0, 2);
                if (op == DiffOp::E23) return strain(f, 1, 2);
                return strain(f, 2, 2);
            } else {
                throw ShapeError("vertical operator applied to a 2D field");
            }
        case DiffOp::Biharmonic2:
            if constexpr (!is3) return biharmonic2(f);
            else throw ShapeError("biharmonic2 applies to 2D fields only");
    }
    throw ShapeError("unknown operator");
}

/// Simpson integral over y3 of y3^power * f for each node column.
inline Field2 moment_integrals(const Field3& f, int power) {
    if (f.components() != 1) throw ShapeError("moment_integrals expects a scalar field");
    if (power != 0 && power != 1) throw ShapeError("weight power must be 0 or 1");
    const Grid3D& g = f.grid();
    const auto w = g.simpson();
    Field2 out(g.base, 1, Boundary::Free);
    for (int k = 0; k <= g.nz; ++k) {
        const double wk = power == 0 ? w[k] : w[k] * g.z(k);
        for (std::size_t p = 0; p < g.layer(); ++p) out(p) += wk * f(k * g.layer() + p);
    }
    return out;
}

/// Kirchhoff-Love lift: v_j = g_j - y3 dg3/dy_j, v3 = g3.
inline Field3 lift_kl(const Field2& inplane, const Field2& deflection, int nz) {
    if (inplane.components() != 2 || deflection.components() != 1)
        throw ShapeError("lift_kl expects two in-plane components and a scalar deflection");
    if (!(inplane.grid() == deflection.grid())) throw ShapeError("lift_kl grid mismatch");
    const Grid3D g(inplane.grid(), nz);
    const Field2 slope = grad2(deflection);
    Field3 out(g, 3, Boundary::LateralDirichlet);
    for (int k = 0; k <= g.nz; ++k) {
        const double z = g.z(k);
        for (std::size_t p = 0; p < g.layer(); ++p) {
            const std::size_t q = k * g.layer() + p;
            out(q, 0) = inplane(p, 0) - z * slope(p, 0);
            out(q, 1) = inplane(p, 1) - z * slope(p, 1);
            out(q, 2) = deflection(p);
        }
    }
    return out;
}

/// Values on the midplane y3 = 0, all components.
inline Field2 restrict_to_midplane(const Field3& f) {
    const Grid3D& g = f.grid();
    Field2 out(g.base, f.components(), f.boundary());
    const std::size_t off = static_cast<std::size_t>(g.mid()) * g.layer();
    for (int c = 0; c < f.components(); ++c)
        for (std::size_t p = 0; p < g.layer(); ++p) out(p, c) = f(off + p, c);
    return out;
}

/// Copies a 2D scalar into every layer of the slab.
inline Field3 extrude(const Field2& f, int nz) {
    const Grid3D g(f.grid(), nz);
    Field3 out(g, f.components(), f.boundary());
    for (int c = 0; c < f.components(); ++c)
        for (int k = 0; k <= nz; ++k)
            for (std::size_t p = 0; p < g.layer(); ++p) out(k * g.layer() + p, c) = f(p, c);
    return out;
}

/// Trapezoid (horizontal) x Simpson (vertical) integral of the squared field.
inline double integral_sq(const Field3& f) {
    const Grid3D& g = f.grid();
    const auto wz = g.simpson();
    const double area = g.h() * g.h();
    double sum = 0.0;
    for (int c = 0; c < f.components(); ++c)
        for (int k = 0; k <= g.nz; ++k)
            for (int j = 0; j <= g.n(); ++j)
                for (int i = 0; i <= g.n(); ++i) {
                    const double v = f(g.index(i, j, k), c);
                    sum += wz[k] * area * g.base.trapezoid(i, j) * v * v;
                }
    return sum;
}

/// Trapezoid integral over the square of the squared field.
inline double integral_sq(const Field2& f) {
    const Grid2D& g = f.grid();
    double sum = 0.0;
    for (int c = 0; c < f.components(); ++c)
        for (int j = 0; j <= g.n; ++j)
            for (int i = 0; i <= g.n; ++i) {
                const double v = f(g.index(i, j), c);
                sum += g.h * g.h * g.trapezoid(i, j) * v * v;
            }
    return sum;
}

inline double l2_norm(const Field3& f) { return std::sqrt(integral_sq(f)); }
inline double l2_norm(const Field2& f) { return std::sqrt(integral_sq(f)); }

}  // namespace poroplate
