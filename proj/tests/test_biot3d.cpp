/**
 * @file test_biot3d.cpp
 * @brief Scaled slab problem: assembly structure, stepping, energy audit and SPD margin.
 */
#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <numbers>

#include "poroplate/biot3d.hpp"

using namespace poroplate;
using std::numbers::pi;

namespace {

DimensionlessParams default_params(double eps = 0.2) { return make_dimensionless(1.0, 0.25, 0.9, eps); }

LoadSpec mixed_loads() {
    const Ramp r = default_ramp(1.0);
    LoadSpec l;
    l.traction[1][2] = [r](double y1, double y2, double t) { return std::sin(pi * y1) * std::sin(pi * y2) * r(t); };
    l.traction[0][0] = [r](double y1, double y2, double t) { return 0.5 * y2 * std::sin(pi * y1) * r(t); };
    l.traction[1][1] = [r](double y1, double, double t) { return 0.3 * std::cos(pi * y1) * r(t); };
    l.flux = [r](double y1, double y2, double t) { return 0.2 * std::cos(pi * y1) * y2 * r(t); };
    l.lateral = [r](double y1, double y2, double t) { return 0.1 * (y1 - y2) * r(t); };
    return l;
}

/// Data of the problem mirrored under y3 -> -y3.
LoadSpec mirrored(const LoadSpec& l) {
    LoadSpec m;
    for (int f = 0; f < 2; ++f) {
        const auto& other = l.traction[1 - f];
        m.traction[f][0] = other[0];
        m.traction[f][1] = other[1];
        if (other[2]) m.traction[f][2] = [g = other[2]](double a, double b, double t) { return -g(a, b, t); };
    }
    if (l.flux) m.flux = [g = l.flux](double a, double b, double t) { return -g(a, b, t); };
    m.lateral = l.lateral;
    return m;
}

double rel_defect(const SparseMatrix& m) { return symmetry_defect(m) / max_abs(m); }

}  // namespace

TEST(Assembly, DofCountsOnSmallGrid) {
    const AssembledSystem s(Grid3D(Grid2D(4), 4), default_params(), 0.2);
    EXPECT_EQ(s.displacement_dofs(), 135);
    EXPECT_EQ(s.pressure_dofs(), 125);
    EXPECT_EQ(s.A().rows(), 135);
    EXPECT_EQ(s.Mcpl().rows(), 125);
    EXPECT_EQ(s.Mcpl().cols(), 135);
}

TEST(Assembly, BlocksAreSymmetric) {
    const AssembledSystem s(Grid3D(Grid2D(6), 4), default_params(), 0.1);
    EXPECT_LE(rel_defect(s.A()), 1e-14);
    EXPECT_LE(rel_defect(s.K()), 1e-14);
    EXPECT_LE(rel_defect(s.Mass_p()), 1e-14);
    EXPECT_LE(rel_defect(s.block_system(0.05)), 1e-14);
}

TEST(Assembly, ElasticityIsPositiveDefiniteOnDirichletSubspace) {
    const AssembledSystem s(Grid3D(Grid2D(4), 4), default_params(), 0.2);
    const Eigen::MatrixXd a(s.A());
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    EXPECT_GT(es.eigenvalues()(0), 0.0);
}

TEST(Assembly, PressureStiffnessKernelIsConstants) {
    const AssembledSystem s(Grid3D(Grid2D(4), 4), default_params(), 0.3);
    const Vector ones = Vector::Ones(s.pressure_dofs());
    EXPECT_LE((s.K() * ones).lpNorm<Eigen::Infinity>(), 1e-13);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(s.K())};
    EXPECT_NEAR(es.eigenvalues()(0), 0.0, 1e-12);
    EXPECT_GT(es.eigenvalues()(1), 1e-6);
}

TEST(Assembly, HorizontalPressureBlockScalesWithEpsSquared) {
    const Grid3D g(Grid2D(4), 4);
    const AssembledSystem a(g, default_params(), 0.15), b(g, default_params(), 0.3);
    const SparseMatrix diff = b.K_horizontal() - 4.0 * a.K_horizontal();
    EXPECT_EQ(max_abs(diff), 0.0);
    EXPECT_EQ(max_abs(SparseMatrix(b.K_vertical() - a.K_vertical())), 0.0);
}

TEST(Assembly, PackRoundTripKeepsInteriorAndDropsLateralBoundary) {
    const Grid3D g(Grid2D(4), 4);
    const AssembledSystem s(g, default_params(), 0.2);
    Field3 w(g, 3, Boundary::LateralDirichlet);
    for (int c = 0; c < 3; ++c) fill(w, [c](double y1, double y2, double y3) { return 1.0 + c + y1 + y2 * y3; }, c);
    const Field3 back = s.unpack_displacement(s.pack_displacement(w));
    for (int k = 0; k <= g.nz; ++k)
        for (int j = 0; j <= g.n(); ++j)
            for (int i = 0; i <= g.n(); ++i)
                for (int c = 0; c < 3; ++c) {
                    const auto q = g.index(i, j, k);
                    EXPECT_EQ(back(q, c), g.base.on_boundary(i, j) ? 0.0 : w(q, c));
                }
}

TEST(Assembly, MassMinimumEigenvalueMatchesDenseSolve) {
    const Grid3D g(Grid2D(4), 4);
    const AssembledSystem s(g, default_params(), 0.2);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(s.Mass_p())};
    EXPECT_NEAR(mass_min_eigenvalue(g), es.eigenvalues()(0), 1e-14);
}

TEST(Step, ZeroLoadsAndStateStayZero) {
    const Grid3D g(Grid2D(4), 4);
    const AssembledSystem s(g, default_params(), 0.2);
    const BiotState out = step_biot(s, BiotState::zero(g), zero_loads(), 0.1);
    EXPECT_EQ(out.w.max_abs(), 0.0);
    EXPECT_EQ(out.pi.max_abs(), 0.0);
    EXPECT_DOUBLE_EQ(out.t, 0.1);
}

TEST(Step, ReflectedDataGiveReflectedSolution) {
    const Grid3D g(Grid2D(6), 4);
    const auto sys = std::make_shared<AssembledSystem>(g, default_params(), 0.2);
    const BiotStepper stepper(sys, 0.1);
    const LoadSpec l = mixed_loads(), m = mirrored(l);
    BiotState a = BiotState::zero(g), b = BiotState::zero(g);
    for (int n = 0; n < 3; ++n) {
        a = stepper.step(a, l);
        b = stepper.step(b, m);
    }
    const double ws = a.w.max_abs(), ps = a.pi.max_abs();
    ASSERT_GT(ws, 0.0);
    for (int k = 0; k <= g.nz; ++k)
        for (int j = 0; j <= g.n(); ++j)
            for (int i = 0; i <= g.n(); ++i) {
                const auto q = g.index(i, j, k), r = g.index(i, j, g.nz - k);
                EXPECT_NEAR(b.w(q, 0), a.w(r, 0), 1e-12 * ws);
                EXPECT_NEAR(b.w(q, 1), a.w(r, 1), 1e-12 * ws);
                EXPECT_NEAR(b.w(q, 2), -a.w(r, 2), 1e-12 * ws);
                EXPECT_NEAR(b.pi(q), a.pi(r), 1e-12 * ps);
            }
}

TEST(Step, LateralBoundaryStaysClamped) {
    const Grid3D g(Grid2D(4), 4);
    const AssembledSystem s(g, default_params(), 0.2);
    const BiotState out = step_biot(s, BiotState::zero(g), mixed_loads(), 0.5);
    for (int k = 0; k <= g.nz; ++k)
        for (int j = 0; j <= g.n(); ++j)
            for (int i = 0; i <= g.n(); ++i)
                if (g.base.on_boundary(i, j))
                    for (int c = 0; c < 3; ++c) EXPECT_EQ(out.w(g.index(i, j, k), c), 0.0);
}

TEST(Run, ZeroLoadsGiveZeroTrajectory) {
    BiotConfig cfg;
    cfg.grid = Grid3D(Grid2D(4), 4);
    cfg.params = default_params();
    cfg.nsteps = 4;
    const auto traj = run_biot(cfg, 0.2);
    for (const auto& s : traj.states) {
        EXPECT_LE(s.w.max_abs(), 1e-12);
        EXPECT_LE(s.pi.max_abs(), 1e-12);
    }
}

TEST(Run, EnergyBalanceClosesAtEveryStep) {
    BiotConfig cfg;
    cfg.grid = Grid3D(Grid2D(6), 4);
    cfg.params = default_params();
    cfg.loads = mixed_loads();
    cfg.nsteps = 10;
    for (double eps : {0.4, 0.05}) {
        const auto traj = run_biot(cfg, eps);
        ASSERT_EQ(traj.energy.size(), 10u);
        for (const auto& e : traj.energy) {
            EXPECT_LE(e.relative_closure(), 1e-10);
            EXPECT_GE(e.numerical, 0.0);
            EXPECT_GE(e.dissipation, 0.0);
            EXPECT_LE(std::abs(e.coupling_sum), 1e-12 * e.scale);
        }
    }
}

TEST(Run, DefaultScenarioOnReferenceGrid) {
    const auto t0 = std::chrono::steady_clock::now();
    BiotConfig cfg;
    cfg.params = default_params();
    cfg.loads = mixed_loads();
    const auto traj = run_biot(cfg, 0.2);
    ASSERT_EQ(traj.states.size(), 51u);
    double grad_sq = 0.0;
    for (const auto& e : traj.energy) {
        EXPECT_TRUE(std::isfinite(e.elastic) && std::isfinite(e.pressure));
        EXPECT_LE(e.relative_closure(), 1e-10);
    }
    const AssembledSystem sys(cfg.grid, cfg.params, 0.2);
    for (const auto& s : traj.states) {
        const Vector p = Eigen::Map<const Vector>(s.pi.values().data(), s.pi.values().size());
        grad_sq = std::max(grad_sq, p.dot(sys.K_horizontal() * p));  // eps^2 |grad_h pi|^2
    }
    EXPECT_TRUE(std::isfinite(grad_sq));
    EXPECT_LT(grad_sq, 1e3);
    EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 120.0);
}

TEST(Run, RejectsNonPositiveEps) {
    BiotConfig cfg;
    cfg.grid = Grid3D(Grid2D(4), 4);
    EXPECT_THROW(run_biot(cfg, 0.0), InvalidParameter);
}

TEST(Margin, VanishesWithoutCoupling) {
    auto p = default_params();
    p.alpha = 0.0;
    const AssembledSystem s(Grid3D(Grid2D(6), 4), p, 0.2);
    EXPECT_NEAR(coupling_spd_margin(s), 0.0, 1e-8);
}

TEST(Margin, NonNegativeOnReferenceAssembly) {
    const AssembledSystem s(Grid3D(Grid2D(16), 8), default_params(), 0.2);
    EXPECT_GE(coupling_spd_margin(s), -1e-8);
}

TEST(Margin, SmallestEigenvalueIsLinearInStorageWithoutCoupling) {
    auto p = default_params();
    p.alpha = 0.0;
    const Grid3D g(Grid2D(6), 4);
    const double a = schur_min_eigenvalue(AssembledSystem(g, p, 0.2));
    p.gamma *= 2.0;
    const double b = schur_min_eigenvalue(AssembledSystem(g, p, 0.2));
    EXPECT_NEAR(b, 2.0 * a, 1e-9 * a);
}

TEST(Margin, MatchesDenseSchurComplementOnSmallGrid) {
    const AssembledSystem s(Grid3D(Grid2D(4), 4), default_params(), 0.2);
    const Eigen::MatrixXd A(s.A()), B(s.Mcpl()), M(s.Mass_p());
    const double a = s.params().alpha, g = s.params().gamma;
    const Eigen::MatrixXd S = g * M + a * a * B * A.ldlt().solve(B.transpose());
    const double exact = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(S).eigenvalues()(0);
    EXPECT_NEAR(schur_min_eigenvalue(s), exact, 1e-9 * exact);
}
