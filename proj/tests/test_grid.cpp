/**
 * @file test_grid.cpp
 * @brief Finite-difference operators, vertical quadrature and the Kirchhoff-Love lift.
 */
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "poroplate/grid.hpp"

using namespace poroplate;
using std::numbers::pi;

TEST(Grid, RejectsTooFewCellsAndOddVerticalCount) {
    EXPECT_THROW(Grid2D(3), InvalidParameter);
    EXPECT_THROW(Grid3D(Grid2D(8), 5), InvalidParameter);
    EXPECT_NO_THROW(Grid3D(Grid2D(8), 4));
}

TEST(Grid, NodeCountsAndCoordinates) {
    const Grid3D g(Grid2D(8), 4);
    EXPECT_EQ(g.size(), 9u * 9u * 5u);
    EXPECT_DOUBLE_EQ(g.z(0), -1.0);
    EXPECT_DOUBLE_EQ(g.z(g.mid()), 0.0);
    EXPECT_DOUBLE_EQ(g.z(4), 1.0);
}

TEST(Grad2, ConstantHasZeroGradient) {
    const Grid2D g(8);
    Field2 f(g);
    fill(f, [](double, double) { return 3.5; });
    const Field2 d = apply_diff(f, DiffOp::Grad2);
    EXPECT_EQ(d.components(), 2);
    EXPECT_LE(d.max_abs(), 1e-12);
}

TEST(Strain, ShearOfSwappedLinearFieldIsOne) {
    const Grid2D g(8);
    Field2 w(g, 2);
    fill(w, [](double, double y2) { return y2; }, 0);
    fill(w, [](double y1, double) { return y1; }, 1);
    const Field2 e12 = apply_diff(w, DiffOp::E12);
    for (double v : e12.values()) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(Strain, ExactOnLinearsIncludingBoundaryClosure) {
    const Grid3D g(Grid2D(8), 4);
    Field3 w(g, 3);
    fill(w, [](double a, double b, double c) { return 2 * a - b + 0.5 * c; }, 0);
    fill(w, [](double a, double b, double c) { return a + 3 * b - c; }, 1);
    fill(w, [](double a, double b, double c) { return -a + 4 * c; }, 2);
    const auto e13 = strain(w, 0, 2);
    const auto e33 = apply_diff(w, DiffOp::E33);
    const auto e23 = strain(w, 1, 2);
    for (std::size_t p = 0; p < g.size(); ++p) {
        EXPECT_NEAR(e13(p), 0.5 * (0.5 - 1.0), 1e-12);
        EXPECT_NEAR(e23(p), 0.5 * (-1.0 + 0.0), 1e-12);
        EXPECT_NEAR(e33(p), 4.0, 1e-12);
    }
}

TEST(Laplacian, ExactOnQuadraticsForFreeFields) {
    const Grid2D g(10);
    Field2 f(g);
    fill(f, [](double a, double b) { return 3 * a * a - a * b + 2 * b * b + a; });
    const auto lap = laplacian2(f);
    for (double v : lap.values()) EXPECT_NEAR(v, 6.0 + 4.0, 1e-9);
}

TEST(Biharmonic, SineProductMatchesAnalyticValueInTheInterior) {
    const Grid2D g(64);
    Field2 f(g, 1, Boundary::Clamped);
    fill(f, [](double a, double b) { return std::sin(pi * a) * std::sin(pi * b); });
    const auto b = apply_diff(f, DiffOp::Biharmonic2);
    double err = 0.0, ref = 0.0;
    for (int j = 2; j <= g.n - 2; ++j)
        for (int i = 2; i <= g.n - 2; ++i) {
            const double exact = 4 * std::pow(pi, 4) * f(g.index(i, j));
            err = std::max(err, std::abs(b(g.index(i, j)) - exact));
            ref = std::max(ref, std::abs(exact));
        }
    EXPECT_LT(err / ref, 1e-2);
}

TEST(Biharmonic, RequiresClampedTag) {
    const Grid2D g(8);
    Field2 f(g, 1, Boundary::Free);
    EXPECT_THROW(apply_diff(f, DiffOp::Biharmonic2), ShapeError);
}

TEST(Biharmonic, ClampedQuarticTruncationIsSecondOrderAwayFromGhosts) {
    // w = y1^2 (1-y1)^2 y2^2 (1-y2)^2 is clamped; its biharmonic is known in closed form.
    auto p = [](double s) { return s * s * (1 - s) * (1 - s); };
    auto p2 = [](double s) { return 2 - 12 * s + 12 * s * s; };
    double prev = 0.0;
    for (int n : {16, 32}) {
        const Grid2D g(n);
        Field2 f(g, 1, Boundary::Clamped);
        fill(f, [&](double a, double b) { return p(a) * p(b); });
        const auto b = biharmonic2(f);
        double err = 0.0;
        for (int j = 2; j <= n - 2; ++j)
            for (int i = 2; i <= n - 2; ++i) {
                const double a = g.coord(i), c = g.coord(j);
                const double exact = 24 * p(c) + 2 * p2(a) * p2(c) + 24 * p(a);
                err = std::max(err, std::abs(b(g.index(i, j)) - exact));
            }
        if (prev > 0.0) EXPECT_GT(prev / err, 3.0);
        prev = err;
    }
}

TEST(Operators, WrongDimensionalityIsRejected) {
    const Grid2D g(8);
    Field2 f(g, 1);
    EXPECT_THROW(apply_diff(f, DiffOp::Dz), ShapeError);
    EXPECT_THROW(apply_diff(f, DiffOp::Div2), ShapeError);
    Field2 v(g, 2);
    EXPECT_THROW(apply_diff(v, DiffOp::Grad2), ShapeError);
}

TEST(SummationByParts, CompactlySupportedPairsHaveNoResidual) {
    const Grid2D g(32);
    auto bump = [](double s) {
        const double x = (s - 0.5) / 0.3;
        return std::abs(x) < 1 ? std::pow(1 - x * x, 4) : 0.0;
    };
    Field2 f(g);
    fill(f, [&](double a, double b) { return bump(a) * bump(b) * (1 + a); });
    Field2 v(g, 2);
    fill(v, [&](double a, double b) { return bump(a) * bump(b) * std::sin(3 * b); }, 0);
    fill(v, [&](double a, double b) { return bump(a) * bump(b) * a * b; }, 1);
    const auto gf = grad2(f);
    const auto dv = div2(v);
    double s = 0.0;
    for (std::size_t p = 0; p < g.size(); ++p) s += gf(p, 0) * v(p, 0) + gf(p, 1) * v(p, 1) + f(p) * dv(p);
    EXPECT_LE(std::abs(s * g.h * g.h), 1e-12);
}

TEST(MomentIntegrals, ConstantAndOddIntegrands) {
    const Grid3D g(Grid2D(8), 6);
    Field3 one(g), lin(g);
    fill(one, [](double, double, double) { return 1.0; });
    fill(lin, [](double, double, double z) { return z; });
    const auto m0 = moment_integrals(one, 0);
    const auto m1 = moment_integrals(lin, 1);
    const auto m0z = moment_integrals(lin, 0);
    for (std::size_t p = 0; p < g.layer(); ++p) {
        EXPECT_NEAR(m0(p), 2.0, 1e-14);
        EXPECT_NEAR(m1(p), 2.0 / 3.0, 1e-14);
        EXPECT_NEAR(m0z(p), 0.0, 1e-14);
    }
}

TEST(MomentIntegrals, ExactForCubicsAndAnnihilatesColumnConstantsWithWeight) {
    const Grid3D g(Grid2D(8), 4);
    Field3 cubic(g), flat(g);
    fill(cubic, [](double a, double, double z) { return z * z * z + 2 * z * z - z + a; });
    fill(flat, [](double a, double b, double) { return std::cos(a + 2 * b); });
    const auto m = moment_integrals(cubic, 0);
    const auto f1 = moment_integrals(flat, 1);
    for (int i = 0; i <= 8; ++i) EXPECT_NEAR(m(g.base.index(i, 3)), 4.0 / 3.0 + 2 * g.base.coord(i), 1e-13);
    EXPECT_LE(f1.max_abs(), 1e-15);
}

TEST(LiftKL, ZeroAndMembraneOnlyLifts) {
    const Grid2D g(8);
    Field2 inplane(g, 2, Boundary::LateralDirichlet), defl(g, 1, Boundary::Clamped);
    EXPECT_EQ(lift_kl(inplane, defl, 4).max_abs(), 0.0);
    fill(inplane, [](double a, double b) { return a * (1 - a) * b; }, 0);
    fill(inplane, [](double a, double b) { return std::sin(a * b); }, 1);
    const auto v = lift_kl(inplane, defl, 4);
    for (int c = 0; c < 3; ++c) EXPECT_LE(dz(v.scalar(c)).max_abs(), 1e-12);
}

TEST(LiftKL, QuadraticDeflectionHasExactlyZeroShear) {
    const Grid2D g(8);
    Field2 inplane(g, 2), defl(g, 1, Boundary::Free);
    fill(defl, [](double a, double b) { return a * a - 2 * a * b + 0.5 * b * b + a; });
    const auto v = lift_kl(inplane, defl, 4);
    EXPECT_LE(strain(v, 0, 2).max_abs(), 1e-12);
    EXPECT_LE(strain(v, 1, 2).max_abs(), 1e-12);
    EXPECT_LE(strain(v, 2, 2).max_abs(), 1e-12);
    // Midplane restriction recovers the generating deflection.
    const auto mid = restrict_to_midplane(v);
    for (std::size_t p = 0; p < g.size(); ++p) EXPECT_NEAR(mid(p, 2), defl(p), 1e-14);
}
