/**
 * @file test_linsolve.cpp
 * @brief Direct and CG solvers and the smallest-eigenvalue estimate.
 */
#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "poroplate/linsolve.hpp"

using namespace poroplate;

namespace {

SparseMatrix tridiag(int n, double scale) {
    Triplets t;
    for (int i = 0; i < n; ++i) {
        t.emplace_back(i, i, 2.0 * scale);
        if (i > 0) t.emplace_back(i, i - 1, -scale);
        if (i + 1 < n) t.emplace_back(i, i + 1, -scale);
    }
    return assemble(n, n, t);
}

SparseMatrix laplacian_2d(int m) {
    Triplets t;
    auto id = [m](int i, int j) { return j * m + i; };
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < m; ++i) {
            t.emplace_back(id(i, j), id(i, j), 4.0);
            if (i > 0) t.emplace_back(id(i, j), id(i - 1, j), -1.0);
            if (i + 1 < m) t.emplace_back(id(i, j), id(i + 1, j), -1.0);
            if (j > 0) t.emplace_back(id(i, j), id(i, j - 1), -1.0);
            if (j + 1 < m) t.emplace_back(id(i, j), id(i, j + 1), -1.0);
        }
    return assemble(m * m, m * m, t);
}

}  // namespace

TEST(SolveDirect, IdentityReturnsRhs) {
    SparseMatrix id(5, 5);
    id.setIdentity();
    Vector b(5);
    b << 1, -2, 3.5, 0, 7;
    EXPECT_LE((solve_direct(id, b) - b).norm(), 1e-15);
}

TEST(SolveDirect, DirichletLaplacianMatchesDenseInverse) {
    const SparseMatrix m = tridiag(3, 16.0);  // h = 1/4
    const Vector b = Vector::Ones(3);
    const Vector x = solve_direct(m, b);
    EXPECT_NEAR(x[0], 3.0 / 32.0, 1e-15);
    EXPECT_NEAR(x[1], 4.0 / 32.0, 1e-15);
    EXPECT_NEAR(x[2], 3.0 / 32.0, 1e-15);

    for (int n = 2; n <= 10; ++n) {
        const SparseMatrix a = tridiag(n, 1.0);
        const Eigen::MatrixXd inv = Eigen::MatrixXd(a).inverse();
        Vector rhs(n);
        for (int i = 0; i < n; ++i) rhs[i] = std::sin(1.0 + i);
        EXPECT_LE((solve_direct(a, rhs) - inv * rhs).norm(), 1e-12);
    }
}

TEST(SolveDirect, ZeroRowIsReportedNotSolved) {
    Triplets t{{0, 0, 1.0}, {1, 1, 2.0}, {0, 2, 1.0}, {2, 0, 1.0}};
    const SparseMatrix m = assemble(3, 3, t);  // row/column 1 fine, but see below
    Triplets z{{0, 0, 1.0}, {2, 2, 1.0}};
    const SparseMatrix singular = assemble(3, 3, z);
    EXPECT_THROW(solve_direct(singular, Vector::Ones(3)), SolverError);
    EXPECT_NO_THROW(solve_direct(m, Vector::Ones(3)));
}

TEST(SolveDirect, NumericallySingularIsReported) {
    Triplets t{{0, 0, 1.0}, {0, 1, 1.0}, {1, 0, 1.0}, {1, 1, 1.0}};
    EXPECT_THROW(solve_direct(assemble(2, 2, t), Vector::Ones(2)), SolverError);
}

TEST(SolveDirect, SymmetricIndefiniteSaddleSystem) {
    // [A B^T; B -C] with A, C SPD is quasi-definite.
    const SparseMatrix a = tridiag(6, 1.0);
    Triplets t;
    for (int k = 0; k < a.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(a, k); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
    for (int i = 0; i < 3; ++i) {
        t.emplace_back(6 + i, 2 * i, 1.0);
        t.emplace_back(2 * i, 6 + i, 1.0);
        t.emplace_back(6 + i, 6 + i, -1e-3);
    }
    const SparseMatrix m = assemble(9, 9, t);
    Vector b(9);
    for (int i = 0; i < 9; ++i) b[i] = 1.0 + i;
    const DirectSolver s(m);
    EXPECT_TRUE(s.symmetric_factorization());
    const Vector x = s.solve(b);
    EXPECT_LE((m * x - b).norm(), 1e-10 * (m.norm() * x.norm() + b.norm()));
}

TEST(SolveDirect, NonSymmetricFallsBackToLu) {
    Triplets t{{0, 0, 2.0}, {0, 1, 1.0}, {1, 0, -1.0}, {1, 1, 3.0}};
    const DirectSolver s(assemble(2, 2, t));
    EXPECT_FALSE(s.symmetric_factorization());
    Vector b(2);
    b << 1, 2;
    const Vector x = s.solve(b);
    EXPECT_NEAR(x[0], 1.0 / 7.0, 1e-15);
    EXPECT_NEAR(x[1], 5.0 / 7.0, 1e-15);
}

TEST(SolveDirect, BadlyScaledSystemMeetsResidualBound) {
    Triplets t;
    const int n = 20;
    for (int i = 0; i < n; ++i) {
        const double s = std::pow(10.0, (i % 5) * 2.0);
        t.emplace_back(i, i, 2.0 * s);
        if (i + 1 < n) {
            const double c = -0.5 * std::sqrt(s * std::pow(10.0, ((i + 1) % 5) * 2.0));
            t.emplace_back(i, i + 1, c);
            t.emplace_back(i + 1, i, c);
        }
    }
    const SparseMatrix m = assemble(n, n, t);
    const Vector b = Vector::LinSpaced(n, 1.0, 2.0);
    const Vector x = solve_direct(m, b);
    EXPECT_LE((m * x - b).norm(), 1e-10 * (m.norm() * x.norm() + b.norm()));
}

TEST(SolveCg, IdentityConvergesInOneIteration) {
    SparseMatrix id(4, 4);
    id.setIdentity();
    const Vector b = Vector::LinSpaced(4, 1.0, 4.0);
    const auto r = solve_cg(id, b);
    EXPECT_EQ(r.iterations, 1);
    EXPECT_LE((r.x - b).norm(), 1e-15);
}

TEST(SolveCg, ZeroRhsGivesZeroWithoutIterating) {
    const auto r = solve_cg(laplacian_2d(4), Vector::Zero(16));
    EXPECT_EQ(r.iterations, 0);
    EXPECT_EQ(r.x.norm(), 0.0);
}

TEST(SolveCg, AgreesWithDirectOnDirichletLaplacian) {
    const SparseMatrix m = laplacian_2d(16);
    Vector b(m.rows());
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = std::cos(0.1 * i);
    const auto r = solve_cg(m, b);
    const Vector xd = solve_direct(m, b);
    EXPECT_LE((r.x - xd).norm(), 1e-8 * xd.norm());
    EXPECT_LE(r.relative_residual, 1e-10);
}

TEST(SolveCg, AgreesWithDirectOnRandomSpdCorpus) {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 30;
        Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = std::max(0, i - 3); j <= std::min(n - 1, i + 3); ++j) b(i, j) = u(rng);
        const Eigen::MatrixXd dense = b * b.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
        const SparseMatrix m = dense.sparseView();
        Vector rhs(n);
        for (int i = 0; i < n; ++i) rhs[i] = u(rng);
        const Vector xd = solve_direct(m, rhs);
        EXPECT_LE((solve_cg(m, rhs).x - xd).norm(), 1e-8 * xd.norm());
    }
}

TEST(SolveCg, IndefiniteMatrixViolatesContract) {
    Triplets t{{0, 0, 1.0}, {0, 1, 2.0}, {1, 0, 2.0}, {1, 1, 1.0}};
    Vector b(2);
    b << 1.0, -1.0;
    EXPECT_THROW(solve_cg(assemble(2, 2, t), b), SolverError);
}

TEST(SolveCg, NonConvergenceReportsResidual) {
    const SparseMatrix m = laplacian_2d(16);
    try {
        solve_cg(m, Vector::Ones(m.rows()), 1e-12, 3);
        FAIL() << "expected non-convergence";
    } catch (const SolverError& e) {
        EXPECT_NE(std::string(e.what()).find("residual"), std::string::npos);
    }
}

TEST(MinEig, DiagonalAndIdentity) {
    Triplets t{{0, 0, 1.0}, {1, 1, 2.0}, {2, 2, 3.0}};
    EXPECT_NEAR(min_eig_estimate(assemble(3, 3, t)), 1.0, 1e-6);
    SparseMatrix id(7, 7);
    id.setIdentity();
    EXPECT_NEAR(min_eig_estimate(id), 1.0, 1e-6);
}

TEST(MinEig, TridiagonalClosedForm) {
    const int n = 10;
    const double exact = 2.0 - 2.0 * std::cos(std::numbers::pi / (n + 1));
    EXPECT_NEAR(min_eig_estimate(tridiag(n, 1.0)), exact, 1e-6 * exact);
}

TEST(MinEig, IndefiniteMatrixReturnsMostNegativeEigenvalue) {
    Triplets t{{0, 0, -2.0}, {1, 1, 0.5}, {2, 2, 3.0}, {0, 1, 0.1}, {1, 0, 0.1}};
    const SparseMatrix m = assemble(3, 3, t);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(m)};
    EXPECT_NEAR(min_eig_estimate(m), es.eigenvalues()[0], 1e-5);
}

TEST(Determinism, RepeatedSolvesAreBitwiseIdentical) {
    const SparseMatrix m = laplacian_2d(12);
    const Vector b = Vector::LinSpaced(m.rows(), -1.0, 1.0);
    const Vector a1 = solve_direct(m, b), a2 = solve_direct(m, b);
    const Vector c1 = solve_cg(m, b).x, c2 = solve_cg(m, b).x;
    EXPECT_EQ(0, std::memcmp(a1.data(), a2.data(), sizeof(double) * a1.size()));
    EXPECT_EQ(0, std::memcmp(c1.data(), c2.data(), sizeof(double) * c1.size()));
}

TEST(Symmetry, DefectMeasuresAsymmetry) {
    EXPECT_EQ(symmetry_defect(laplacian_2d(4)), 0.0);
    Triplets t{{0, 0, 1.0}, {0, 1, 1.0}, {1, 0, 0.5}, {1, 1, 1.0}};
    EXPECT_NEAR(symmetry_defect(assemble(2, 2, t)), 0.5, 1e-15);
}

TEST(MatrixMarket, ExportWritesCoordinateHeader) {
    const auto path = std::filesystem::temp_directory_path() / "poroplate_mm_test.mtx";
    write_matrix_market(tridiag(4, 1.0), path.string());
    std::ifstream in(path);
    std::string first;
    std::getline(in, first);
    EXPECT_NE(first.find("MatrixMarket"), std::string::npos);
    std::filesystem::remove(path);
}
