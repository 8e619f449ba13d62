/**
 * @file biot3d.hpp
 * @brief Scaled quasi-static Biot problem on the slab (0,1)^2 x (-1,1) with trilinear
 *        hexahedra, monolithic backward-Euler stepping and an energy audit.
 */
#pragma once

#include <array>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "poroplate/grid.hpp"
#include "poroplate/limit2d.hpp"
#include "poroplate/linsolve.hpp"
#include "poroplate/params.hpp"

namespace poroplate {

/// Slab fields at one time level.
struct BiotState {
    Field3 w;   ///< scaled displacement, zero on the lateral boundary
    Field3 pi;  ///< scaled pressure
    double t = 0.0;

    static BiotState zero(const Grid3D& g) { return {Field3(g, 3, Boundary::LateralDirichlet), Field3(g), 0.0}; }
};

namespace detail {

inline constexpr double kGauss = 0.57735026918962576451;  // 1/sqrt(3)

/// Trilinear shape value and reference gradient of local node a = (ax, ay, az).
inline double q1_value(int a, double x, double y, double z) {
    const double sx = (a & 1) ? 1.0 : -1.0, sy = (a & 2) ? 1.0 : -1.0, sz = (a & 4) ? 1.0 : -1.0;
    return 0.125 * (1 + sx * x) * (1 + sy * y) * (1 + sz * z);
}
inline std::array<double, 3> q1_grad(int a, double x, double y, double z) {
    const double sx = (a & 1) ? 1.0 : -1.0, sy = (a & 2) ? 1.0 : -1.0, sz = (a & 4) ? 1.0 : -1.0;
    return {0.125 * sx * (1 + sy * y) * (1 + sz * z), 0.125 * sy * (1 + sx * x) * (1 + sz * z),
            0.125 * sz * (1 + sx * x) * (1 + sy * y)};
}

}  // namespace detail

/// Element-level strain evaluation shared by assembly and post-processing.
///
/// Scaled strains are (e11, e22, e33/eps^2, e12, e13/eps, e23/eps). The e13 shear is
/// sampled on the y1 mid-surface of the cell and e23 on the y2 mid-surface, which
/// removes the parasitic shear of bilinear deflections (shear locking).
struct HexStrains {
    double h, hz, eps;

    /// 6 x 24 strain-displacement matrix at reference point (x, y, z); dof = 3 * node + comp.
    Eigen::Matrix<double, 6, 24> B(double x, double y, double z) const {
        Eigen::Matrix<double, 6, 24> b = Eigen::Matrix<double, 6, 24>::Zero();
        const double j1 = 2.0 / h, j3 = 2.0 / hz;
        for (int a = 0; a < 8; ++a) {
            const auto g = detail::q1_grad(a, x, y, z);
            const auto g13 = detail::q1_grad(a, 0.0, y, z);
            const auto g23 = detail::q1_grad(a, x, 0.0, z);
            b(0, 3 * a + 0) = g[0] * j1;
            b(1, 3 * a + 1) = g[1] * j1;
            b(2, 3 * a + 2) = g[2] * j3 / (eps * eps);
            b(3, 3 * a + 0) = 0.5 * g[1] * j1;
            b(3, 3 * a + 1) = 0.5 * g[0] * j1;
            b(4, 3 * a + 0) = 0.5 * g13[2] * j3 / eps;
            b(4, 3 * a + 2) = 0.5 * g13[0] * j1 / eps;
            b(5, 3 * a + 1) = 0.5 * g23[2] * j3 / eps;
            b(5, 3 * a + 2) = 0.5 * g23[1] * j1 / eps;
        }
        return b;
    }
};

/// Isotropic stiffness (unit shear modulus) acting on scaled strains.
inline Eigen::Matrix<double, 6, 6> scaled_elasticity(double lambda) {
    Eigen::Matrix<double, 6, 6> c = Eigen::Matrix<double, 6, 6>::Zero();
    for (int r = 0; r < 3; ++r)
        for (int s = 0; s < 3; ++s) c(r, s) = (r == s) ? 2.0 + lambda : lambda;
    for (int r = 3; r < 6; ++r) c(r, r) = 4.0;
    return c;
}

/// Sparse blocks of the scaled slab problem and its load assemblers.
class AssembledSystem {
public:
    AssembledSystem(const Grid3D& g, const DimensionlessParams& p, double eps) : grid_(g), params_(p), eps_(eps) {
        if (!(eps > 0.0)) throw InvalidParameter("eps", "must be positive");
        const int n = g.n(), m = n - 1;
        nu_ = 3 * m * m * (g.nz + 1);
        np_ = static_cast<int>(g.size());
        dof_.assign(g.size(), -1);
        for (int k = 0; k <= g.nz; ++k)
            for (int j = 1; j < n; ++j)
                for (int i = 1; i < n; ++i) dof_[g.index(i, j, k)] = 3 * (k * m * m + (j - 1) * m + (i - 1));

        const double h = g.h(), hz = g.hz;
        const double jac = 0.125 * h * h * hz;
        const HexStrains hs{h, hz, eps};
        const auto C = scaled_elasticity(p.lambda);
        Eigen::Matrix<double, 24, 24> ke = Eigen::Matrix<double, 24, 24>::Zero();
        Eigen::Matrix<double, 8, 24> be = Eigen::Matrix<double, 8, 24>::Zero();
        Eigen::Matrix<double, 8, 8> kh = Eigen::Matrix<double, 8, 8>::Zero(), kv = kh, me = kh;
        for (int gp = 0; gp < 8; ++gp) {
            const double x = (gp & 1 ? 1 : -1) * detail::kGauss, y = (gp & 2 ? 1 : -1) * detail::kGauss,
                         z = (gp & 4 ? 1 : -1) * detail::kGauss;
            const auto b = hs.B(x, y, z);
            ke += jac * b.transpose() * C * b;
            Eigen::Matrix<double, 1, 24> dil = b.row(0) + b.row(1) + b.row(2);
            for (int a = 0; a < 8; ++a) {
                const double na = detail::q1_value(a, x, y, z);
                const auto ga = detail::q1_grad(a, x, y, z);
                be.row(a) += jac * na * dil;
                for (int c = 0; c < 8; ++c) {
                    const double nc = detail::q1_value(c, x, y, z);
                    const auto gc = detail::q1_grad(c, x, y, z);
                    me(a, c) += jac * na * nc;
                    kh(a, c) += jac * (ga[0] * gc[0] + ga[1] * gc[1]) * 4.0 / (h * h);
                    kv(a, c) += jac * ga[2] * gc[2] * 4.0 / (hz * hz);
                }
            }
        }

        Triplets ta, tb, tkh, tkv, tm;
        for (int ck = 0; ck < g.nz; ++ck)
            for (int cj = 0; cj < n; ++cj)
                for (int ci = 0; ci < n; ++ci) {
                    std::array<int, 8> node{};
                    for (int a = 0; a < 8; ++a)
                        node[a] = static_cast<int>(g.index(ci + (a & 1), cj + ((a >> 1) & 1), ck + ((a >> 2) & 1)));
                    for (int a = 0; a < 8; ++a) {
                        for (int c = 0; c < 8; ++c) {
                            tm.emplace_back(node[a], node[c], me(a, c));
                            tkh.emplace_back(node[a], node[c], eps * eps * kh(a, c));
                            tkv.emplace_back(node[a], node[c], kv(a, c));
                        }
                        for (int c = 0; c < 8; ++c) {
                            const int dc = dof_[node[c]];
                            if (dc < 0) continue;
                            for (int s = 0; s < 3; ++s) {
                                tb.emplace_back(node[a], dc + s, be(a, 3 * c + s));
                                const int da = dof_[node[a]];
                                if (da < 0) continue;
                                for (int r = 0; r < 3; ++r) ta.emplace_back(da + r, dc + s, ke(3 * a + r, 3 * c + s));
                            }
                        }
                    }
                }
        A_ = assemble(nu_, nu_, ta);
        B_ = assemble(np_, nu_, tb);
        Kh_ = assemble(np_, np_, tkh);
        Kv_ = assemble(np_, np_, tkv);
        K_ = SparseMatrix(Kh_ + Kv_);
        M_ = assemble(np_, np_, tm);
    }

    const Grid3D& grid() const { return grid_; }
    const DimensionlessParams& params() const { return params_; }
    double eps() const { return eps_; }
    int displacement_dofs() const { return nu_; }
    int pressure_dofs() const { return np_; }
    /// Elasticity block on the lateral-Dirichlet subspace.
    const SparseMatrix& A() const { return A_; }
    /// Pressure-dilatation block: (B w)_z = int zeta (div w + d3 w3 / eps^2).
    const SparseMatrix& Mcpl() const { return B_; }
    /// Pressure stiffness eps^2 (horizontal) + vertical.
    const SparseMatrix& K() const { return K_; }
    const SparseMatrix& K_horizontal() const { return Kh_; }
    const SparseMatrix& K_vertical() const { return Kv_; }
    /// Pressure mass (without the storage coefficient).
    const SparseMatrix& Mass_p() const { return M_; }
    /// Displacement dof of node, component 0, or -1 on the lateral boundary.
    int dof(std::size_t node) const { return dof_[node]; }

    /// Symmetric block matrix [A, -alpha B^T; -alpha B, -(gamma M + dt K)].
    SparseMatrix block_system(double dt, double shift = 0.0) const {
        Triplets t;
        const double al = params_.alpha, ga = params_.gamma;
        auto push = [&](const SparseMatrix& a, int r0, int c0, double f, bool transpose) {
            for (int k = 0; k < a.outerSize(); ++k)
                for (SparseMatrix::InnerIterator it(a, k); it; ++it) {
                    const int r = static_cast<int>(transpose ? it.col() : it.row());
                    const int c = static_cast<int>(transpose ? it.row() : it.col());
                    t.emplace_back(r0 + r, c0 + c, f * it.value());
                }
        };
        push(A_, 0, 0, 1.0, false);
        if (al != 0.0) {
            push(B_, 0, nu_, -al, true);
            push(B_, nu_, 0, -al, false);
        }
        push(M_, nu_, nu_, -ga, false);
        if (dt != 0.0) push(K_, nu_, nu_, -dt, false);
        if (shift != 0.0)
            for (int i = 0; i < np_; ++i) t.emplace_back(nu_ + i, nu_ + i, shift);
        return assemble(nu_ + np_, nu_ + np_, t);
    }

    /// Traction functional: face integrals of P_c on the top and bottom faces.
    Vector traction_load(const LoadSpec& loads, double t) const {
        Vector f = Vector::Zero(nu_);
        const int n = grid_.n();
        const double h = grid_.h();
        for (Face face : {Face::Bottom, Face::Top}) {
            const int k = face == Face::Top ? grid_.nz : 0;
            for (int cj = 0; cj < n; ++cj)
                for (int ci = 0; ci < n; ++ci)
                    for (int gp = 0; gp < 4; ++gp) {
                        const double x = (gp & 1 ? 1 : -1) * detail::kGauss, y = (gp & 2 ? 1 : -1) * detail::kGauss;
                        const double y1 = (ci + 0.5 * (1 + x)) * h, y2 = (cj + 0.5 * (1 + y)) * h;
                        const double wq = 0.25 * h * h;
                        const double pc[3] = {loads.P(0, face, y1, y2, t), loads.P(1, face, y1, y2, t),
                                              loads.P(2, face, y1, y2, t)};
                        for (int a = 0; a < 4; ++a) {
                            const int d = dof_[grid_.index(ci + (a & 1), cj + (a >> 1), k)];
                            if (d < 0) continue;
                            const double na = 0.25 * (1 + ((a & 1) ? x : -x)) * (1 + ((a >> 1) ? y : -y));
                            for (int c = 0; c < 3; ++c) f[d + c] += wq * na * pc[c];
                        }
                    }
        }
        return f;
    }

    /// Flux functional: -eps int V zeta on the lateral boundary, -U on the top face, +U on the bottom face.
    Vector flux_load(const LoadSpec& loads, double t) const {
        Vector g = Vector::Zero(np_);
        const int n = grid_.n();
        const double h = grid_.h(), hz = grid_.hz;
        for (Face face : {Face::Bottom, Face::Top}) {
            const int k = face == Face::Top ? grid_.nz : 0;
            const double sign = face == Face::Top ? -1.0 : 1.0;
            for (int cj = 0; cj < n; ++cj)
                for (int ci = 0; ci < n; ++ci)
                    for (int gp = 0; gp < 4; ++gp) {
                        const double x = (gp & 1 ? 1 : -1) * detail::kGauss, y = (gp & 2 ? 1 : -1) * detail::kGauss;
                        const double u = loads.U((ci + 0.5 * (1 + x)) * h, (cj + 0.5 * (1 + y)) * h, t);
                        if (u == 0.0) continue;
                        for (int a = 0; a < 4; ++a) {
                            const double na = 0.25 * (1 + ((a & 1) ? x : -x)) * (1 + ((a >> 1) ? y : -y));
                            g[grid_.index(ci + (a & 1), cj + (a >> 1), k)] += sign * 0.25 * h * h * na * u;
                        }
                    }
        }
        if (!loads.lateral) return g;
        // Four lateral sides, parametrized by the tangential node index s and the layer.
        for (int side = 0; side < 4; ++side)
            for (int ck = 0; ck < grid_.nz; ++ck)
                for (int cs = 0; cs < n; ++cs)
                    for (int gp = 0; gp < 4; ++gp) {
                        const double x = (gp & 1 ? 1 : -1) * detail::kGauss, z = (gp & 2 ? 1 : -1) * detail::kGauss;
                        const double s = (cs + 0.5 * (1 + x)) * h;
                        double y1 = 0, y2 = 0;
                        auto node = [&](int ds, int dk) -> std::size_t {
                            const int sidx = cs + ds;
                            switch (side) {
                                case 0: return grid_.index(sidx, 0, ck + dk);
                                case 1: return grid_.index(n, sidx, ck + dk);
                                case 2: return grid_.index(sidx, n, ck + dk);
                                default: return grid_.index(0, sidx, ck + dk);
                            }
                        };
                        switch (side) {
                            case 0: y1 = s, y2 = 0; break;
                            case 1: y1 = 1, y2 = s; break;
                            case 2: y1 = s, y2 = 1; break;
                            default: y1 = 0, y2 = s; break;
                        }
                        const double v = loads.V(y1, y2, t);
                        if (v == 0.0) continue;
                        for (int ds = 0; ds < 2; ++ds)
                            for (int dk = 0; dk < 2; ++dk) {
                                const double na = 0.25 * (1 + (ds ? x : -x)) * (1 + (dk ? z : -z));
                                g[node(ds, dk)] -= eps_ * 0.25 * h * hz * na * v;
                            }
                    }
        return g;
    }

    Vector pack_displacement(const Field3& w) const {
        Vector v(nu_);
        for (std::size_t q = 0; q < grid_.size(); ++q)
            if (dof_[q] >= 0)
                for (int c = 0; c < 3; ++c) v[dof_[q] + c] = w(q, c);
        return v;
    }
    Field3 unpack_displacement(const Vector& v) const {
        Field3 w(grid_, 3, Boundary::LateralDirichlet);
        for (std::size_t q = 0; q < grid_.size(); ++q)
            if (dof_[q] >= 0)
                for (int c = 0; c < 3; ++c) w(q, c) = v[dof_[q] + c];
        return w;
    }

private:
    Grid3D grid_;
    DimensionlessParams params_;
    double eps_;
    int nu_ = 0, np_ = 0;
    std::vector<int> dof_;
    SparseMatrix A_, B_, Kh_, Kv_, K_, M_;
};

inline AssembledSystem assemble_biot(const Grid3D& grid, const DimensionlessParams& params, double eps) {
    return AssembledSystem(grid, params, eps);
}

/// Backward-Euler integrator of the slab problem; the block matrix is factored once.
class BiotStepper {
public:
    BiotStepper(std::shared_ptr<const AssembledSystem> sys, double dt, SolverTolerances tol = {})
        : sys_(std::move(sys)), dt_(dt) {
        if (!(dt > 0.0)) throw InvalidParameter("dt", "time step must be positive");
        solver_ = std::make_shared<DirectSolver>(sys_->block_system(dt_), tol);
    }

    double dt() const { return dt_; }
    const AssembledSystem& system() const { return *sys_; }

    BiotState step(const BiotState& s, const LoadSpec& loads) const {
        const auto& S = *sys_;
        const double t1 = s.t + dt_;
        const double al = S.params().alpha, ga = S.params().gamma;
        const Vector w = S.pack_displacement(s.w);
        const Vector p = BendingPressureOperator::pack_pressure(s.pi);
        Vector rhs(S.displacement_dofs() + S.pressure_dofs());
        rhs << S.traction_load(loads, t1), -ga * (S.Mass_p() * p) - al * (S.Mcpl() * w) - dt_ * S.flux_load(loads, t1);
        const Vector x = solver_->solve(rhs);
        const double res = residual_extended(solver_->matrix(), x, rhs).norm();
        if (res > 1e-9 * (solver_->matrix().norm() * x.norm() + rhs.norm()))
            throw SolverError("slab step residual check failed at t = " + std::to_string(t1));
        BiotState out{S.unpack_displacement(x.head(S.displacement_dofs())), Field3(S.grid()), t1};
        std::copy(x.data() + S.displacement_dofs(), x.data() + x.size(), out.pi.values().begin());
        out.w.require_finite("step_biot");
        out.pi.require_finite("step_biot");
        return out;
    }

private:
    std::shared_ptr<const AssembledSystem> sys_;
    double dt_;
    std::shared_ptr<DirectSolver> solver_;
};

/// One step from scratch (factors the block matrix).
inline BiotState step_biot(const AssembledSystem& sys, const BiotState& s, const LoadSpec& loads, double dt) {
    return BiotStepper(std::make_shared<AssembledSystem>(sys), dt).step(s, loads);
}

struct BiotConfig {
    Grid3D grid{Grid2D(16), 8};
    DimensionlessParams params{};
    LoadSpec loads{};
    double t_end = 1.0;
    int nsteps = 50;
    SolverTolerances tol{};
    double dt() const { return t_end / nsteps; }
};

struct BiotTrajectory {
    BiotConfig config;
    double eps = 0.0;
    std::vector<BiotState> states;  ///< states[0] is the zero initial state
    std::vector<EnergyReport> energy;
};

/// Per-step energy balance of a slab trajectory.
inline std::vector<EnergyReport> energy_audit(const AssembledSystem& S, const BiotTrajectory& traj) {
    std::vector<EnergyReport> out;
    const double dt = traj.config.dt();
    const double al = S.params().alpha, ga = S.params().gamma;
    for (std::size_t n = 1; n < traj.states.size(); ++n) {
        const auto& s0 = traj.states[n - 1];
        const auto& s1 = traj.states[n];
        const Vector w0 = S.pack_displacement(s0.w), w1 = S.pack_displacement(s1.w);
        const Vector p0 = BendingPressureOperator::pack_pressure(s0.pi);
        const Vector p1 = BendingPressureOperator::pack_pressure(s1.pi);
        const Vector dw = w1 - w0, dp = p1 - p0;
        EnergyReport r;
        r.step = static_cast<int>(n);
        r.t = s1.t;
        const double e0 = 0.5 * w0.dot(S.A() * w0);
        r.elastic = 0.5 * w1.dot(S.A() * w1);
        const double q0 = 0.5 * ga * p0.dot(S.Mass_p() * p0);
        r.pressure = 0.5 * ga * p1.dot(S.Mass_p() * p1);
        r.dissipation = dt * p1.dot(S.K() * p1);
        r.numerical = 0.5 * dw.dot(S.A() * dw) + 0.5 * ga * dp.dot(S.Mass_p() * dp);
        r.work = S.traction_load(traj.config.loads, s1.t).dot(dw) + dt * S.flux_load(traj.config.loads, s1.t).dot(p1);
        r.bending_coupling = -al * p1.dot(S.Mcpl() * dw);
        r.pressure_coupling = al * (S.Mcpl() * dw).dot(p1);
        r.coupling_sum = r.bending_coupling + r.pressure_coupling;
        r.closure = (r.elastic - e0) + (r.pressure - q0) + r.dissipation + r.numerical - r.work + r.coupling_sum;
        r.scale = std::max({r.elastic + r.pressure, e0 + q0, std::abs(r.work), r.dissipation});
        out.push_back(r);
    }
    return out;
}

/// Full slab trajectory at thickness ratio eps.
inline BiotTrajectory run_biot(const BiotConfig& cfg, double eps) {
    auto params = cfg.params;
    params.eps = eps;
    validate(params);
    if (cfg.nsteps < 1) throw InvalidParameter("time.nsteps", "at least one step required");
    auto sys = std::make_shared<AssembledSystem>(cfg.grid, params, eps);
    const BiotStepper stepper(sys, cfg.dt(), cfg.tol);
    BiotTrajectory traj{cfg, eps, {BiotState::zero(cfg.grid)}, {}};
    traj.config.params = params;
    for (int n = 1; n <= cfg.nsteps; ++n) {
        try {
            traj.states.push_back(stepper.step(traj.states.back(), cfg.loads));
        } catch (const Error& e) {
            throw SolverError("slab model, step " + std::to_string(n) + ": " + e.what());
        }
    }
    traj.energy = energy_audit(*sys, traj);
    return traj;
}

/// Smallest eigenvalue of the pressure mass. The trilinear mass on a uniform grid is the
/// Kronecker product of 1D linear-element masses, so it is the product of their minima.
inline double mass_min_eigenvalue(const Grid3D& g) {
    auto min1d = [](int cells, double h) {
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(cells + 1, cells + 1);
        for (int e = 0; e < cells; ++e) {
            m(e, e) += h / 3.0;
            m(e + 1, e + 1) += h / 3.0;
            m(e, e + 1) += h / 6.0;
            m(e + 1, e) += h / 6.0;
        }
        return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly).eigenvalues()(0);
    };
    const double mh = min1d(g.n(), g.h());
    return mh * mh * min1d(g.nz, g.hz);
}

/// lambda_min(gamma M + alpha^2 B A^{-1} B^T) from a randomized block of inverse iterates.
///
/// The Schur complement is never formed: (S - sigma I)^{-1} y is read off the pressure
/// part of a solve with the bordered block matrix [A, -aB^T; -aB, -(gM - sigma I)],
/// with sigma just below the lower bound gamma lambda_min(M).
inline double schur_min_eigenvalue(const AssembledSystem& sys, double tol = 1e-10) {
    const double lower = sys.params().gamma * mass_min_eigenvalue(sys.grid());
    const double sigma = lower - (1e-2 * lower + 1e-12);
    const DirectSolver solver(sys.block_system(0.0, sigma));
    const int nu = sys.displacement_dofs(), np = sys.pressure_dofs();
    auto apply = [&](const Vector& y) {
        Vector rhs = Vector::Zero(nu + np);
        rhs.tail(np) = -y;
        return Vector(solver.solve(rhs).tail(np));
    };
    return subspace_min_eig(apply, np, sigma, tol);
}

/// lambda_min(gamma M + alpha^2 B A^{-1} B^T) - gamma lambda_min(M); nonnegative in exact arithmetic.
inline double coupling_spd_margin(const AssembledSystem& sys, double tol = 1e-10) {
    return schur_min_eigenvalue(sys, tol) - sys.params().gamma * mass_min_eigenvalue(sys.grid());
}

}  // namespace poroplate
