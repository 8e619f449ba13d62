/**
 * @file limit2d.hpp
 * @brief Limit plate model: membrane/mean-pressure solve per time level and the
 *        coupled bending/pressure-fluctuation evolution with an energy audit.
 */
#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "poroplate/grid.hpp"
#include "poroplate/linsolve.hpp"
#include "poroplate/params.hpp"

namespace poroplate {

/// Volumetric data f(y1, y2, y3, t).
using VolumeSource = std::function<double(double, double, double, double)>;

/// Extra forcing used by manufactured-solution studies; both entries optional.
struct ManufacturedSources {
    SurfaceLoad bending;   ///< added to the right-hand side of the bending equation
    VolumeSource pressure; ///< added to the right-hand side of the fluctuation equation
};

enum class TimeScheme { BackwardEuler, CrankNicolson };

/// Second derivative of a deflection that vanishes on the boundary. Normal second
/// derivatives at boundary nodes use the one-sided formula (2 w0 - 5 w1 + 4 w2 - w3) / h^2,
/// which is second order without relying on the discrete slope condition.
inline Field2 curvature(const Field2& w, int a, int b) {
    if (a != b) {
        Field2 c = w;
        c.set_boundary(Boundary::Clamped);
        return partial2(c, a, b);
    }
    const Grid2D& g = w.grid();
    Field2 out(g);
    const double invh2 = 1.0 / (g.h * g.h);
    for (int l = 0; l <= g.n; ++l) {
        auto at = [&](int p) { return a == 0 ? w(g.index(p, l)) : w(g.index(l, p)); };
        auto put = [&](int p, double v) { (a == 0 ? out(g.index(p, l)) : out(g.index(l, p))) = v; };
        for (int p = 1; p < g.n; ++p) put(p, (at(p + 1) - 2.0 * at(p) + at(p - 1)) * invh2);
        put(0, (2.0 * at(0) - 5.0 * at(1) + 4.0 * at(2) - at(3)) * invh2);
        put(g.n, (2.0 * at(g.n) - 5.0 * at(g.n - 1) + 4.0 * at(g.n - 2) - at(g.n - 3)) * invh2);
    }
    return out;
}

/// Laplacian of a clamped deflection at every node, second order up to the boundary.
inline Field2 clamped_laplacian(const Field2& w) { return curvature(w, 0, 0) + curvature(w, 1, 1); }

/// Membrane solution at one time level.
struct MembraneSolution {
    Field2 inplane;  ///< (w01, w02), zero on the boundary
    Field2 pi_m;     ///< mean pressure
    int iterations = 0;
};

/// Assembled membrane operator -Lap - ((1+nu)/(1-nu) + c^2/beta) grad div on interior unknowns.
class MembraneOperator {
public:
    MembraneOperator(const Grid2D& g, const DimensionlessParams& p) : grid_(g), params_(p) {
        const int m = g.n - 1;
        const double h2 = g.h * g.h;
        const double gd = p.membrane_graddiv() + p.coupling() * p.coupling() / p.storage();
        auto id = [m](int comp, int i, int j) { return comp * m * m + (j - 1) * m + (i - 1); };
        auto interior = [&](int i, int j) { return i >= 1 && i <= m && j >= 1 && j <= m; };
        Triplets t;
        for (int comp = 0; comp < 2; ++comp)
            for (int j = 1; j <= m; ++j)
                for (int i = 1; i <= m; ++i) {
                    const int row = id(comp, i, j);
                    // weights of d11 and d22 in this component's row
                    const double w11 = 1.0 + (comp == 0 ? gd : 0.0);
                    const double w22 = 1.0 + (comp == 1 ? gd : 0.0);
                    t.emplace_back(row, row, 2.0 * (w11 + w22) / h2);
                    if (interior(i - 1, j)) t.emplace_back(row, id(comp, i - 1, j), -w11 / h2);
                    if (interior(i + 1, j)) t.emplace_back(row, id(comp, i + 1, j), -w11 / h2);
                    if (interior(i, j - 1)) t.emplace_back(row, id(comp, i, j - 1), -w22 / h2);
                    if (interior(i, j + 1)) t.emplace_back(row, id(comp, i, j + 1), -w22 / h2);
                    const int other = 1 - comp;
                    for (int di : {-1, 1})
                        for (int dj : {-1, 1})
                            if (interior(i + di, j + dj))
                                t.emplace_back(row, id(other, i + di, j + dj), -gd * di * dj / (4.0 * h2));
                }
        matrix_ = assemble(2 * m * m, 2 * m * m, t);
    }

    const SparseMatrix& matrix() const { return matrix_; }
    const Grid2D& grid() const { return grid_; }

    /// Half the face-summed tangential tractions at interior nodes.
    Vector load(const LoadSpec& loads, double t) const {
        const int m = grid_.n - 1;
        Vector f(2 * m * m);
        for (int comp = 0; comp < 2; ++comp)
            for (int j = 1; j <= m; ++j)
                for (int i = 1; i <= m; ++i) {
                    const double y1 = grid_.coord(i), y2 = grid_.coord(j);
                    f[comp * m * m + (j - 1) * m + (i - 1)] =
                        0.5 * (loads.P(comp, Face::Top, y1, y2, t) + loads.P(comp, Face::Bottom, y1, y2, t));
                }
        return f;
    }

    MembraneSolution solve(const LoadSpec& loads, double t, double tol = 1e-10) const {
        const int m = grid_.n - 1;
        MembraneSolution s{Field2(grid_, 2, Boundary::LateralDirichlet), Field2(grid_), 0};
        const Vector f = load(loads, t);
        if (f.squaredNorm() == 0.0) return s;
        const CgResult r = solve_cg(matrix_, f, tol);
        s.iterations = r.iterations;
        for (int comp = 0; comp < 2; ++comp)
            for (int j = 1; j <= m; ++j)
                for (int i = 1; i <= m; ++i) s.inplane(grid_.index(i, j), comp) = r.x[comp * m * m + (j - 1) * m + (i - 1)];
        s.pi_m = mean_pressure(s.inplane, params_);
        s.inplane.require_finite("solve_membrane");
        return s;
    }

    /// pi_m = -(c / beta) div w at every node.
    static Field2 mean_pressure(const Field2& inplane, const DimensionlessParams& p) {
        Field2 pm = div2(inplane);
        pm *= -p.coupling() / p.storage();
        return pm;
    }

private:
    Grid2D grid_;
    DimensionlessParams params_;
    SparseMatrix matrix_;
};

/// Stationary membrane system at time t.
inline MembraneSolution solve_membrane(const LoadSpec& loads, double t, const DimensionlessParams& params,
                                       const Grid2D& grid) {
    return MembraneOperator(grid, params).solve(loads, t);
}

/// Limit-model fields at one time level.
struct LimitState {
    Field2 inplane;  ///< (w01, w02)
    Field2 pi_m;
    Field2 w3;         ///< clamped deflection
    Field2 w3_slopes;  ///< (d/dy1, d/dy2, d2/dy1dy2) of the deflection
    Field3 pi_w;     ///< zero-mean pressure fluctuation
    double t = 0.0;

    static LimitState zero(const Grid3D& g) {
        return {Field2(g.base, 2, Boundary::LateralDirichlet), Field2(g.base), Field2(g.base, 1, Boundary::Clamped),
                Field2(g.base, 3, Boundary::Clamped), Field3(g), 0.0};
    }
    /// Full limit pressure pi_m + pi_w on the slab.
    Field3 pi0() const {
        Field3 p = pi_w;
        const Grid3D& g = p.grid();
        for (int k = 0; k <= g.nz; ++k)
            for (std::size_t q = 0; q < g.layer(); ++q) p(k * g.layer() + q) += pi_m(q);
        return p;
    }
};

/// Largest |1/2 int pi dy3| over node columns.
inline double max_column_mean(const Field3& pi) {
    const Field2 m = moment_integrals(pi, 0);
    return 0.5 * m.max_abs();
}

/// Energy balance of one time step of a limit or slab trajectory.
struct EnergyReport {
    int step = 0;
    double t = 0.0;
    double elastic = 0.0;        ///< elastic energy at the new level
    double pressure = 0.0;       ///< pressure energy at the new level
    double dissipation = 0.0;    ///< dt times the Darcy dissipation
    double numerical = 0.0;      ///< increment quadratic form of the time scheme
    double work = 0.0;           ///< external work over the step
    double bending_coupling = 0.0;
    double pressure_coupling = 0.0;
    double coupling_sum = 0.0;
    double closure = 0.0;        ///< absolute balance residual
    double scale = 0.0;          ///< energy scale used for relative checks
    double relative_closure() const { return scale > 0.0 ? std::abs(closure) / scale : 0.0; }
};

namespace detail {

/// Four-point Gauss rule on (0, 1).
inline constexpr std::array<double, 4> kGauss4X = {0.0694318442029737, 0.3300094782075719, 0.6699905217924281,
                                                   0.9305681557970263};
inline constexpr std::array<double, 4> kGauss4W = {0.1739274225687269, 0.3260725774312731, 0.3260725774312731,
                                                   0.1739274225687269};

/// Cubic Hermite basis on a cell of width h at local coordinate s in (0, 1):
/// index 0/2 = value at the left/right end, 1/3 = slope at the left/right end.
struct Hermite1D {
    std::array<double, 4> v{}, d1{}, d2{};
    Hermite1D(double s, double h) {
        const double s2 = s * s, s3 = s2 * s;
        v = {1 - 3 * s2 + 2 * s3, h * (s - 2 * s2 + s3), 3 * s2 - 2 * s3, h * (s3 - s2)};
        d1 = {(-6 * s + 6 * s2) / h, 1 - 4 * s + 3 * s2, (6 * s - 6 * s2) / h, 3 * s2 - 2 * s};
        d2 = {(-6 + 12 * s) / (h * h), (-4 + 6 * s) / h, (6 - 12 * s) / (h * h), (-2 + 6 * s) / h};
    }
};

/// Values, gradient and Laplacian of the 16 bicubic Hermite functions of one cell.
/// Local dof 4 a + d: corner a = ax + 2 ay, d = value, d/dy1, d/dy2, d2/dy1dy2.
struct HermiteCell {
    std::array<double, 16> v{}, dx{}, dy{}, lap{};
    HermiteCell(double sx, double sy, double h) {
        const Hermite1D X(sx, h), Y(sy, h);
        for (int a = 0; a < 4; ++a) {
            const int ax = a & 1, ay = a >> 1;
            for (int d = 0; d < 4; ++d) {
                const int fx = 2 * ax + (d & 1), fy = 2 * ay + (d >> 1);
                const int l = 4 * a + d;
                v[l] = X.v[fx] * Y.v[fy];
                dx[l] = X.d1[fx] * Y.v[fy];
                dy[l] = X.v[fx] * Y.d1[fy];
                lap[l] = X.d2[fx] * Y.v[fy] + X.v[fx] * Y.d2[fy];
            }
        }
    }
};

inline std::array<double, 4> bilinear(double sx, double sy) {
    return {(1 - sx) * (1 - sy), sx * (1 - sy), (1 - sx) * sy, sx * sy};
}

}  // namespace detail

/// Matrices of the bending/fluctuation system.
///
/// The clamped deflection uses C1 bicubic Hermite elements (nodal value, both slopes and
/// the twist at interior nodes; all four vanish on the clamped edge). The fluctuation is
/// bilinear in the plane and piecewise quadratic across the thickness on node triples with
/// Simpson-lumped vertical mass, so its Simpson column mean is preserved exactly. The
/// coupling is the exact integral of Laplacian(deflection) against the fluctuation's first
/// vertical moment, which makes the two coupling terms exact transposes.
class BendingPressureOperator {
public:
    BendingPressureOperator(const Grid3D& g, const DimensionlessParams& p) : grid_(g), params_(p) {
        const Grid2D& b = g.base;
        const int n = b.n, m = n - 1;
        const double h = b.h, area = h * h;
        nw_ = 4 * m * m;
        np_ = static_cast<int>(g.size());
        const auto wz = g.simpson();

        interior_.assign(b.size(), -1);
        for (int j = 1; j <= m; ++j)
            for (int i = 1; i <= m; ++i) interior_[b.index(i, j)] = (j - 1) * m + (i - 1);

        // Reference element matrices (the grid is uniform).
        Eigen::Matrix<double, 16, 16> kb = Eigen::Matrix<double, 16, 16>::Zero();
        Eigen::Matrix<double, 16, 4> gl = Eigen::Matrix<double, 16, 4>::Zero();
        Eigen::Matrix<double, 4, 4> m2 = Eigen::Matrix<double, 4, 4>::Zero();
        for (int gx = 0; gx < 4; ++gx)
            for (int gy = 0; gy < 4; ++gy) {
                const double sx = detail::kGauss4X[gx], sy = detail::kGauss4X[gy];
                const double wq = detail::kGauss4W[gx] * detail::kGauss4W[gy] * area;
                const detail::HermiteCell c(sx, sy, h);
                const auto phi = detail::bilinear(sx, sy);
                for (int r = 0; r < 16; ++r) {
                    for (int s = 0; s < 16; ++s) kb(r, s) += wq * c.lap[r] * c.lap[s];
                    for (int s = 0; s < 4; ++s) gl(r, s) += wq * c.lap[r] * phi[s];
                }
                for (int r = 0; r < 4; ++r)
                    for (int s = 0; s < 4; ++s) m2(r, s) += wq * phi[r] * phi[s];
            }

        Triplets tb, tg, tm;
        for (int cj = 0; cj < n; ++cj)
            for (int ci = 0; ci < n; ++ci) {
                std::array<int, 16> wd{};
                std::array<int, 4> node{};
                for (int a = 0; a < 4; ++a) {
                    node[a] = static_cast<int>(b.index(ci + (a & 1), cj + (a >> 1)));
                    for (int d = 0; d < 4; ++d) wd[4 * a + d] = interior_[node[a]] < 0 ? -1 : 4 * interior_[node[a]] + d;
                }
                for (int r = 0; r < 16; ++r) {
                    if (wd[r] < 0) continue;
                    for (int s = 0; s < 16; ++s)
                        if (wd[s] >= 0) tb.emplace_back(wd[r], wd[s], kb(r, s));
                    for (int s = 0; s < 4; ++s) tg.emplace_back(wd[r], node[s], gl(r, s));
                }
                for (int r = 0; r < 4; ++r)
                    for (int s = 0; s < 4; ++s) tm.emplace_back(node[r], node[s], m2(r, s));
            }
        const auto nq = static_cast<Eigen::Index>(b.size());
        bending_ = SparseMatrix(p.flexural() * assemble(nw_, nw_, tb));
        laplacian_ = assemble(nw_, nq, tg);
        mass2d_ = assemble(nq, nq, tm);

        // Tensor products with the vertical operators.
        const double s6 = 1.0 / (6.0 * g.hz);
        const double ke[3][3] = {{7, -8, 1}, {-8, 16, -8}, {1, -8, 7}};
        Triplets tk, tmp;
        const auto layer = static_cast<int>(g.layer());
        for (int k = 0; k <= g.nz; ++k) {
            for (int o = 0; o < mass2d_.outerSize(); ++o)
                for (SparseMatrix::InnerIterator it(mass2d_, o); it; ++it)
                    tmp.emplace_back(k * layer + static_cast<int>(it.row()), k * layer + static_cast<int>(it.col()),
                                     p.storage() * wz[k] * it.value());
        }
        for (int e = 0; e < g.nz / 2; ++e)
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c)
                    for (int o = 0; o < mass2d_.outerSize(); ++o)
                        for (SparseMatrix::InnerIterator it(mass2d_, o); it; ++it)
                            tk.emplace_back((2 * e + r) * layer + static_cast<int>(it.row()),
                                            (2 * e + c) * layer + static_cast<int>(it.col()),
                                            s6 * ke[r][c] * it.value());
        stiffness_ = assemble(np_, np_, tk);
        mass_ = assemble(np_, np_, tmp);

        vertical_stiffness_ = Eigen::MatrixXd::Zero(g.nz + 1, g.nz + 1);
        for (int e = 0; e < g.nz / 2; ++e)
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) vertical_stiffness_(2 * e + r, 2 * e + c) += s6 * ke[r][c];
        moment_weights_.resize(g.nz + 1);
        for (int k = 0; k <= g.nz; ++k) moment_weights_[k] = wz[k] * g.z(k);
    }

    const Grid3D& grid() const { return grid_; }
    const DimensionlessParams& params() const { return params_; }
    int deflection_dofs() const { return nw_; }
    int pressure_dofs() const { return np_; }
    /// Flexural rigidity times int lap(u) lap(v).
    const SparseMatrix& bending() const { return bending_; }
    /// c times int lap(v) (int y3 zeta dy3): deflection rows, fluctuation columns (assembled on demand).
    SparseMatrix coupling() const {
        Triplets t;
        const auto layer = static_cast<int>(grid_.layer());
        for (int k = 0; k <= grid_.nz; ++k)
            for (int o = 0; o < laplacian_.outerSize(); ++o)
                for (SparseMatrix::InnerIterator it(laplacian_, o); it; ++it)
                    t.emplace_back(static_cast<int>(it.row()), k * layer + static_cast<int>(it.col()),
                                   params_.coupling() * moment_weights_[k] * it.value());
        return assemble(nw_, np_, t);
    }
    /// Vertical Darcy stiffness int d3 pi d3 zeta.
    const SparseMatrix& stiffness() const { return stiffness_; }
    /// Storage-weighted fluctuation mass.
    const SparseMatrix& mass() const { return mass_; }
    /// int lap(v) phi_q for deflection functions v and bilinear hats phi_q.
    const SparseMatrix& laplacian_pairing() const { return laplacian_; }
    /// Consistent bilinear mass of the plane grid.
    const SparseMatrix& plane_mass() const { return mass2d_; }
    /// Vertical quadratic-element stiffness on one column.
    const Eigen::MatrixXd& vertical_stiffness() const { return vertical_stiffness_; }
    /// Simpson weights times y3: the discrete first vertical moment.
    const Vector& moment_weights() const { return moment_weights_; }

    /// Column moments sum_k w_k y3_k pi_k as a plane vector.
    Vector column_moment(const Vector& pi) const {
        const auto layer = static_cast<Eigen::Index>(grid_.layer());
        Vector m = Vector::Zero(layer);
        for (int k = 0; k <= grid_.nz; ++k) m += moment_weights_[k] * pi.segment(k * layer, layer);
        return m;
    }
    /// Coupling applied to a fluctuation vector, C pi.
    Vector apply_coupling(const Vector& pi) const { return params_.coupling() * (laplacian_ * column_moment(pi)); }
    /// Transposed coupling applied to a deflection vector, C^T w.
    Vector apply_coupling_transpose(const Vector& w) const {
        const auto layer = static_cast<Eigen::Index>(grid_.layer());
        const Vector gw = params_.coupling() * (laplacian_.transpose() * w);
        Vector out(np_);
        for (int k = 0; k <= grid_.nz; ++k) out.segment(k * layer, layer) = moment_weights_[k] * gw;
        return out;
    }

    /// Block matrix [Kb, C; C^T, -(Mp + theta dt Kp)].
    SparseMatrix system(double theta_dt) const {
        Triplets t;
        auto push = [&](const SparseMatrix& a, int r0, int c0, double f) {
            for (int k = 0; k < a.outerSize(); ++k)
                for (SparseMatrix::InnerIterator it(a, k); it; ++it)
                    t.emplace_back(r0 + it.row(), c0 + it.col(), f * it.value());
        };
        const SparseMatrix cp = coupling();
        push(bending_, 0, 0, 1.0);
        push(cp, 0, nw_, 1.0);
        const SparseMatrix ct = cp.transpose();
        push(ct, nw_, 0, 1.0);
        push(stiffness_, nw_, nw_, -theta_dt);
        push(mass_, nw_, nw_, -1.0);
        return assemble(nw_ + np_, nw_ + np_, t);
    }

    /// Bending load int (P3+ + P3-) v - (P+ - P-) . grad v, plus an optional source.
    Vector bending_load(const LoadSpec& loads, double t, const ManufacturedSources* src = nullptr) const {
        const Grid2D& b = grid_.base;
        const double h = b.h;
        Vector f = Vector::Zero(nw_);
        for (int cj = 0; cj < b.n; ++cj)
            for (int ci = 0; ci < b.n; ++ci)
                for (int gx = 0; gx < 4; ++gx)
                    for (int gy = 0; gy < 4; ++gy) {
                        const double sx = detail::kGauss4X[gx], sy = detail::kGauss4X[gy];
                        const double y1 = (ci + sx) * h, y2 = (cj + sy) * h;
                        const double wq = detail::kGauss4W[gx] * detail::kGauss4W[gy] * h * h;
                        double q = loads.P(2, Face::Top, y1, y2, t) + loads.P(2, Face::Bottom, y1, y2, t);
                        if (src && src->bending) q += src->bending(y1, y2, t);
                        const double m1 = loads.P(0, Face::Top, y1, y2, t) - loads.P(0, Face::Bottom, y1, y2, t);
                        const double m2 = loads.P(1, Face::Top, y1, y2, t) - loads.P(1, Face::Bottom, y1, y2, t);
                        if (q == 0.0 && m1 == 0.0 && m2 == 0.0) continue;
                        const detail::HermiteCell c(sx, sy, h);
                        for (int a = 0; a < 4; ++a) {
                            const int id = interior_[b.index(ci + (a & 1), cj + (a >> 1))];
                            if (id < 0) continue;
                            for (int d = 0; d < 4; ++d) {
                                const int l = 4 * a + d;
                                f[4 * id + d] += wq * (q * c.v[l] - m1 * c.dx[l] - m2 * c.dy[l]);
                            }
                        }
                    }
        return f;
    }

    /// Weak right-hand side of the fluctuation equation: -U on the top face, +U on the bottom face.
    /// Data tested against bilinear hats use the two-point Gauss rule per axis.
    Vector flux_load(const LoadSpec& loads, double t, const ManufacturedSources* src = nullptr) const {
        static constexpr double gx2[2] = {0.2113248654051871, 0.7886751345948129};
        const Grid2D& b = grid_.base;
        const double h = b.h, wq = 0.25 * h * h;
        const auto wz = grid_.simpson();
        const bool vol = src && src->pressure;
        std::vector<double> col(grid_.nz + 1);
        Vector r = Vector::Zero(np_);
        for (int cj = 0; cj < b.n; ++cj)
            for (int ci = 0; ci < b.n; ++ci)
                for (double sx : gx2)
                    for (double sy : gx2) {
                        const double y1 = (ci + sx) * h, y2 = (cj + sy) * h;
                        const auto phi = detail::bilinear(sx, sy);
                        const double u = loads.U(y1, y2, t);
                        if (vol)
                            for (int k = 0; k <= grid_.nz; ++k) col[k] = wz[k] * src->pressure(y1, y2, grid_.z(k), t);
                        for (int a = 0; a < 4; ++a) {
                            const int i = ci + (a & 1), j = cj + (a >> 1);
                            const double wa = wq * phi[a];
                            if (u != 0.0) {
                                r[grid_.index(i, j, grid_.nz)] -= wa * u;
                                r[grid_.index(i, j, 0)] += wa * u;
                            }
                            if (vol)
                                for (int k = 0; k <= grid_.nz; ++k) r[grid_.index(i, j, k)] += wa * col[k];
                        }
                    }
        return r;
    }

    Vector pack_deflection(const Field2& w, const Field2& slopes) const {
        Vector v(nw_);
        for (std::size_t q = 0; q < grid_.layer(); ++q)
            if (interior_[q] >= 0) {
                v[4 * interior_[q]] = w(q);
                for (int d = 0; d < 3; ++d) v[4 * interior_[q] + 1 + d] = slopes(q, d);
            }
        return v;
    }
    /// Nodal deflection values and the (d/dy1, d/dy2, d2/dy1dy2) slope field.
    std::pair<Field2, Field2> unpack_deflection(const Vector& v) const {
        Field2 w(grid_.base, 1, Boundary::Clamped), s(grid_.base, 3, Boundary::Clamped);
        for (std::size_t q = 0; q < grid_.layer(); ++q)
            if (interior_[q] >= 0) {
                w(q) = v[4 * interior_[q]];
                for (int d = 0; d < 3; ++d) s(q, d) = v[4 * interior_[q] + 1 + d];
            }
        return {w, s};
    }
    static Vector pack_pressure(const Field3& p) { return Eigen::Map<const Vector>(p.values().data(), p.values().size()); }
    Field3 unpack_pressure(const Vector& v) const {
        Field3 p(grid_);
        std::copy(v.data(), v.data() + v.size(), p.values().begin());
        return p;
    }

private:
    Grid3D grid_;
    DimensionlessParams params_;
    int nw_ = 0, np_ = 0;
    std::vector<int> interior_;
    SparseMatrix bending_, stiffness_, mass_, laplacian_, mass2d_;
    Eigen::MatrixXd vertical_stiffness_;
    Vector moment_weights_;
};

/// Fixed-step integrator of the bending/fluctuation system.
///
/// The fluctuation block is (plane mass) x (column operator Q) and the coupling sees only
/// the first vertical moment, so the fluctuation is condensed out exactly: the symmetric
/// system [Kb, c G; c G^T, -M2 / kappa] in (deflection, column moment), kappa = z^T Q^-1 z,
/// is factored once, and the fluctuation is recovered by plane-mass and column solves.
/// Every step is checked against the residual of the full block system.
class BendingPressureStepper {
public:
    BendingPressureStepper(std::shared_ptr<const BendingPressureOperator> op, double dt,
                           TimeScheme scheme = TimeScheme::BackwardEuler, SolverTolerances tol = {})
        : op_(std::move(op)), dt_(dt), theta_(scheme == TimeScheme::BackwardEuler ? 1.0 : 0.5), tol_(tol) {
        if (!(dt > 0.0)) throw InvalidParameter("dt", "time step must be positive");
        const auto& A = *op_;
        const auto weights = A.grid().simpson();
        const Vector wz = Eigen::Map<const Vector>(weights.data(), static_cast<Eigen::Index>(weights.size()));
        Eigen::MatrixXd Q = theta_ * dt_ * A.vertical_stiffness();
        Q.diagonal() += A.params().storage() * wz;
        column_ = Eigen::LLT<Eigen::MatrixXd>(Q);
        if (column_.info() != Eigen::Success) throw SolverError("column operator is not positive definite");
        zq_ = column_.solve(A.moment_weights());
        kappa_ = A.moment_weights().dot(zq_);

        const int nw = A.deflection_dofs();
        const auto nq = static_cast<int>(A.grid().layer());
        Triplets t;
        auto push = [&](const SparseMatrix& a, int r0, int c0, double f, bool tr) {
            for (int k = 0; k < a.outerSize(); ++k)
                for (SparseMatrix::InnerIterator it(a, k); it; ++it)
                    t.emplace_back(r0 + static_cast<int>(tr ? it.col() : it.row()),
                                   c0 + static_cast<int>(tr ? it.row() : it.col()), f * it.value());
        };
        const double c = A.params().coupling();
        push(A.bending(), 0, 0, 1.0, false);
        push(A.laplacian_pairing(), 0, nw, c, false);
        push(A.laplacian_pairing(), nw, 0, c, true);
        push(A.plane_mass(), nw, nw, -1.0 / kappa_, false);
        solver_ = std::make_shared<DirectSolver>(assemble(nw + nq, nw + nq, t), tol);
        plane_ = std::make_shared<DirectSolver>(A.plane_mass(), tol);
    }

    const BendingPressureOperator& op() const { return *op_; }
    double dt() const { return dt_; }
    double theta() const { return theta_; }

    /// Advances (w3, pi_w) from s.t to s.t + dt; membrane fields are copied unchanged.
    LimitState step(const LimitState& s, const LoadSpec& loads, const ManufacturedSources* src = nullptr) const {
        const auto& A = *op_;
        const double t1 = s.t + dt_;
        const int nw = A.deflection_dofs(), nz = A.grid().nz;
        const auto nq = static_cast<Eigen::Index>(A.grid().layer());
        const Vector w = A.pack_deflection(s.w3, s.w3_slopes);
        const Vector pi = BendingPressureOperator::pack_pressure(s.pi_w);

        Vector b = A.flux_load(loads, t1, src);
        if (theta_ < 1.0) b = theta_ * b + (1.0 - theta_) * A.flux_load(loads, s.t, src);
        // Pressure rows: C^T w1 - (Mp + theta dt Kp) pi1 = r.
        Vector r = -(A.mass() * pi) + A.apply_coupling_transpose(w) - dt_ * b;
        if (theta_ < 1.0) r += (1.0 - theta_) * dt_ * (A.stiffness() * pi);
        const Vector F = A.bending_load(loads, t1, src);

        auto [w1, pi1] = solve_block(F, r);
        // Refinement against the residual of the full block system.
        double res = INFINITY;
        // Backward-error scale: right-hand side plus the size of the matrix-solution products.
        const double ref = std::sqrt(F.squaredNorm() + r.squaredNorm()) + (A.bending() * w1).norm() +
                           A.apply_coupling(pi1).norm() + A.apply_coupling_transpose(w1).norm() +
                           (A.mass() * pi1).norm() + theta_ * dt_ * (A.stiffness() * pi1).norm();
        for (int it = 0; it <= tol_.refinement_steps; ++it) {
            const Vector r1 = F - A.bending() * w1 - A.apply_coupling(pi1);
            const Vector r2 = r - A.apply_coupling_transpose(w1) + A.mass() * pi1 + theta_ * dt_ * (A.stiffness() * pi1);
            const double rn = std::sqrt(r1.squaredNorm() + r2.squaredNorm());
            if (!(rn < 0.5 * res) || rn <= 1e-15 * ref) {
                res = std::min(res, rn);
                break;
            }
            res = rn;
            const auto [dw, dp] = solve_block(r1, r2);
            w1 += dw;
            pi1 += dp;
        }
        if (!(res <= tol_.residual * ref))
            throw SolverError("bending/fluctuation residual " + std::to_string(res) + " exceeds bound at t = " +
                              std::to_string(t1));

        LimitState out = s;
        out.t = t1;
        std::tie(out.w3, out.w3_slopes) = A.unpack_deflection(w1);
        out.pi_w = A.unpack_pressure(pi1);
        out.w3.require_finite("step_bending_pressure");
        out.pi_w.require_finite("step_bending_pressure");
        const double drift = std::abs(max_column_mean(out.pi_w) - max_column_mean(s.pi_w));
        if (drift > 1e-12 * std::max(1.0, out.pi_w.max_abs()))
            throw SolverError("column mean of the pressure fluctuation drifted by " + std::to_string(drift));
        return out;
    }

private:
    /// Solves [Kb, C; C^T, -P] (w, pi) = (F, r) through the condensed system.
    std::pair<Vector, Vector> solve_block(const Vector& F, const Vector& r) const {
        const auto& A = *op_;
        const int nw = A.deflection_dofs(), nz = A.grid().nz;
        const auto nq = static_cast<Eigen::Index>(A.grid().layer());
        // Column reduction of r: (I x z^T Q^-1) r / kappa.
        Vector reduced(nw + nq);
        reduced.head(nw) = F;
        Vector rz = Vector::Zero(nq);
        for (int k = 0; k <= nz; ++k) rz += zq_[k] * r.segment(k * nq, nq);
        reduced.tail(nq) = rz / kappa_;
        Vector w = solver_->solve(reduced).head(nw);
        // pi = (M2^-1 x Q^-1)(C^T w - r).
        const Vector rhs = A.apply_coupling_transpose(w) - r;
        Eigen::MatrixXd levels(nq, nz + 1);
        for (int k = 0; k <= nz; ++k) levels.col(k) = plane_->solve(rhs.segment(k * nq, nq));
        const Eigen::MatrixXd cols = column_.solve(levels.transpose());
        Vector pi(A.pressure_dofs());
        for (int k = 0; k <= nz; ++k) pi.segment(k * nq, nq) = cols.row(k).transpose();
        return {std::move(w), std::move(pi)};
    }

    std::shared_ptr<const BendingPressureOperator> op_;
    double dt_;
    double theta_;
    SolverTolerances tol_;
    Eigen::LLT<Eigen::MatrixXd> column_;
    Vector zq_;
    double kappa_ = 0.0;
    std::shared_ptr<DirectSolver> solver_, plane_;
};

/// One backward-Euler step from scratch (assembles and factors the system).
inline LimitState step_bending_pressure(const LimitState& s, const LoadSpec& loads, double dt,
                                        const DimensionlessParams& params) {
    auto op = std::make_shared<BendingPressureOperator>(s.pi_w.grid(), params);
    return BendingPressureStepper(op, dt).step(s, loads);
}

/// Everything needed to integrate the limit model.
struct LimitConfig {
    Grid3D grid{Grid2D(16), 8};
    DimensionlessParams params{};
    LoadSpec loads{};
    ManufacturedSources sources{};
    double t_end = 1.0;
    int nsteps = 50;
    TimeScheme scheme = TimeScheme::BackwardEuler;
    SolverTolerances tol{};
    double dt() const { return t_end / nsteps; }
};

struct LimitTrajectory {
    LimitConfig config;
    std::vector<LimitState> states;  ///< states[0] is the zero initial state
    std::vector<EnergyReport> energy;
    double max_column_mean = 0.0;
};

/// Energy balance of every step, rebuilt from the trajectory and its configuration.
inline std::vector<EnergyReport> energy_audit(const LimitTrajectory& traj) {
    std::vector<EnergyReport> out;
    if (traj.states.size() < 2) return out;
    const auto& cfg = traj.config;
    const BendingPressureOperator A(cfg.grid, cfg.params);
    const double dt = cfg.dt();
    const double th = cfg.scheme == TimeScheme::BackwardEuler ? 1.0 : 0.5;
    const ManufacturedSources* src = (cfg.sources.bending || cfg.sources.pressure) ? &cfg.sources : nullptr;
    for (std::size_t n = 1; n < traj.states.size(); ++n) {
        const auto& s0 = traj.states[n - 1];
        const auto& s1 = traj.states[n];
        const Vector w0 = A.pack_deflection(s0.w3, s0.w3_slopes), w1 = A.pack_deflection(s1.w3, s1.w3_slopes);
        const Vector p0 = BendingPressureOperator::pack_pressure(s0.pi_w);
        const Vector p1 = BendingPressureOperator::pack_pressure(s1.pi_w);
        const Vector dw = w1 - w0, dp = p1 - p0;
        const Vector pa = th * p1 + (1 - th) * p0;
        const Vector Fa = th * A.bending_load(cfg.loads, s1.t, src) + (1 - th) * A.bending_load(cfg.loads, s0.t, src);
        const Vector ba = th * A.flux_load(cfg.loads, s1.t, src) + (1 - th) * A.flux_load(cfg.loads, s0.t, src);
        const SparseMatrix& M = A.mass();

        EnergyReport r;
        r.step = static_cast<int>(n);
        r.t = s1.t;
        const double eb0 = 0.5 * w0.dot(A.bending() * w0);
        r.elastic = 0.5 * w1.dot(A.bending() * w1);
        const double ep0 = 0.5 * p0.dot(M * p0);
        r.pressure = 0.5 * p1.dot(M * p1);
        r.dissipation = dt * pa.dot(A.stiffness() * pa);
        r.numerical = (th - 0.5) * (dw.dot(A.bending() * dw) + dp.dot(M * dp));
        r.work = Fa.dot(dw) + dt * ba.dot(pa);
        r.bending_coupling = dw.dot(A.apply_coupling(pa));
        r.pressure_coupling = -pa.dot(A.apply_coupling_transpose(dw));
        r.coupling_sum = r.bending_coupling + r.pressure_coupling;
        r.closure = (r.elastic - eb0) + (r.pressure - ep0) + r.dissipation + r.numerical - r.work + r.coupling_sum;
        r.scale = std::max({r.elastic + r.pressure, eb0 + ep0, std::abs(r.work), r.dissipation});
        out.push_back(r);
    }
    return out;
}

/// Integrates the limit model from zero data: membrane at every level, bending/fluctuation by fixed steps.
inline LimitTrajectory run_limit(const LimitConfig& cfg) {
    validate(cfg.params);
    if (cfg.nsteps < 1) throw InvalidParameter("time.nsteps", "at least one step required");
    LimitTrajectory traj;
    traj.config = cfg;
    const MembraneOperator membrane(cfg.grid.base, cfg.params);
    auto op = std::make_shared<BendingPressureOperator>(cfg.grid, cfg.params);
    const BendingPressureStepper stepper(op, cfg.dt(), cfg.scheme, cfg.tol);
    const ManufacturedSources* src = (cfg.sources.bending || cfg.sources.pressure) ? &cfg.sources : nullptr;

    traj.states.push_back(LimitState::zero(cfg.grid));
    for (int n = 1; n <= cfg.nsteps; ++n) {
        try {
            LimitState next = stepper.step(traj.states.back(), cfg.loads, src);
            const MembraneSolution ms = membrane.solve(cfg.loads, next.t);
            next.inplane = ms.inplane;
            next.pi_m = ms.pi_m;
            traj.max_column_mean = std::max(traj.max_column_mean, max_column_mean(next.pi_w));
            traj.states.push_back(std::move(next));
        } catch (const Error& e) {
            throw SolverError("limit model, step " + std::to_string(n) + ": " + e.what());
        }
    }
    traj.energy = energy_audit(traj);
    return traj;
}

}  // namespace poroplate
