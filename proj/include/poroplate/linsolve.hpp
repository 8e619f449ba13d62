/**
 * @file linsolve.hpp
 * @brief Sparse symmetric linear algebra: direct factorization with equilibration and
 *        refinement, Jacobi-preconditioned CG, and smallest-eigenvalue estimation.
 */
#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <unsupported/Eigen/SparseExtra>

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "poroplate/error.hpp"

namespace poroplate {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplets = std::vector<Eigen::Triplet<double>>;

/// Tolerances of the direct solver; surfaced as configuration keys.
struct SolverTolerances {
    double pivot = 1e-14;     ///< relative LDL^T pivot threshold
    double residual = 1e-10;  ///< post-solve residual bound
    int refinement_steps = 8;
};

inline SparseMatrix assemble(Eigen::Index rows, Eigen::Index cols, const Triplets& t) {
    SparseMatrix m(rows, cols);
    m.setFromTriplets(t.begin(), t.end());
    m.makeCompressed();
    return m;
}

inline double max_abs(const SparseMatrix& m) {
    double r = 0.0;
    for (int k = 0; k < m.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(m, k); it; ++it) r = std::max(r, std::abs(it.value()));
    return r;
}

/// max |a_ij - a_ji| / max |a|, or 0 for the zero matrix.
inline double symmetry_defect(const SparseMatrix& m) {
    if (m.rows() != m.cols()) return INFINITY;
    const double scale = max_abs(m);
    if (scale == 0.0) return 0.0;
    const SparseMatrix t = m.transpose();
    return max_abs(SparseMatrix(m - t)) / scale;
}

inline bool is_symmetric(const SparseMatrix& m, double tol = 1e-14) { return symmetry_defect(m) <= tol; }

/// Residual b - M x accumulated in extended precision.
inline Vector residual_extended(const SparseMatrix& m, const Vector& x, const Vector& b) {
    std::vector<long double> r(b.size());
    for (Eigen::Index i = 0; i < b.size(); ++i) r[i] = b[i];
    for (int k = 0; k < m.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(m, k); it; ++it)
            r[it.row()] -= static_cast<long double>(it.value()) * static_cast<long double>(x[it.col()]);
    Vector out(b.size());
    for (Eigen::Index i = 0; i < b.size(); ++i) out[i] = static_cast<double>(r[i]);
    return out;
}

/// Factorization of a square sparse matrix, reusable for many right-hand sides.
///
/// Symmetric input is equilibrated and factored by LDL^T; small pivots or a
/// non-symmetric input switch to sparse LU. Every solve is refined and checked.
class DirectSolver {
public:
    explicit DirectSolver(const SparseMatrix& m, SolverTolerances tol = {}) : tol_(tol), matrix_(m) {
        if (m.rows() != m.cols()) throw ShapeError("direct solve needs a square matrix");
        const Eigen::Index n = m.rows();
        matrix_.makeCompressed();
        frob_ = matrix_.norm();
        if (!std::isfinite(frob_)) throw SolverError("matrix contains non-finite entries");

        std::vector<double> row_max(n, 0.0), col_max(n, 0.0);
        for (int k = 0; k < matrix_.outerSize(); ++k)
            for (SparseMatrix::InnerIterator it(matrix_, k); it; ++it) {
                row_max[it.row()] = std::max(row_max[it.row()], std::abs(it.value()));
                col_max[it.col()] = std::max(col_max[it.col()], std::abs(it.value()));
            }
        for (Eigen::Index i = 0; i < n; ++i)
            if (row_max[i] == 0.0 || col_max[i] == 0.0)
                throw SolverError("structurally singular matrix: empty row or column " + std::to_string(i));

        scale_.resize(n);
        for (Eigen::Index i = 0; i < n; ++i) scale_[i] = 1.0 / std::sqrt(std::max(row_max[i], col_max[i]));
        SparseMatrix scaled = scale_.asDiagonal() * matrix_ * scale_.asDiagonal();
        scaled.makeCompressed();

        if (is_symmetric(matrix_, 1e-14)) {
            auto ldlt = std::make_unique<Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower>>();
            ldlt->compute(scaled);
            if (ldlt->info() == Eigen::Success) {
                const Vector d = ldlt->vectorD();
                const double dmax = d.cwiseAbs().maxCoeff();
                const double dmin = d.cwiseAbs().minCoeff();
                min_pivot_ratio_ = dmax > 0.0 ? dmin / dmax : 0.0;
                if (std::isfinite(min_pivot_ratio_) && min_pivot_ratio_ > tol_.pivot) ldlt_ = std::move(ldlt);
            }
        }
        if (!ldlt_) {
            lu_ = std::make_unique<Eigen::SparseLU<SparseMatrix>>();
            lu_->analyzePattern(scaled);
            lu_->factorize(scaled);
            if (lu_->info() != Eigen::Success)
                throw SolverError("numerically singular matrix: " + lu_->lastErrorMessage());
        }
    }

    Eigen::Index size() const { return matrix_.rows(); }
    bool symmetric_factorization() const { return static_cast<bool>(ldlt_); }
    double min_pivot_ratio() const { return min_pivot_ratio_; }
    const SparseMatrix& matrix() const { return matrix_; }

    /// Solves M x = rhs; throws SolverError if the residual bound cannot be met.
    Vector solve(const Vector& rhs) const {
        if (rhs.size() != size()) throw ShapeError("right-hand side length mismatch");
        if (!rhs.allFinite()) throw SolverError("right-hand side contains non-finite entries");
        Vector x = raw_solve(rhs);
        double last = INFINITY;
        for (int it = 0; it < tol_.refinement_steps; ++it) {
            const Vector r = residual_extended(matrix_, x, rhs);
            const double rn = r.norm();
            if (rn <= 1e-15 * (frob_ * x.norm() + rhs.norm()) || !(rn < 0.5 * last)) break;
            last = rn;
            x += raw_solve(r);
        }
        const double res = residual_extended(matrix_, x, rhs).norm();
        const double bound = tol_.residual * (frob_ * x.norm() + rhs.norm());
        if (!x.allFinite() || res > bound)
            throw SolverError("numerically singular matrix: residual " + std::to_string(res) + " exceeds " +
                              std::to_string(bound));
        return x;
    }

private:
    Vector raw_solve(const Vector& b) const {
        const Vector sb = scale_.cwiseProduct(b);
        Vector y = ldlt_ ? Vector(ldlt_->solve(sb)) : Vector(lu_->solve(sb));
        return scale_.cwiseProduct(y);
    }

    SolverTolerances tol_;
    SparseMatrix matrix_;
    Vector scale_;
    double frob_ = 0.0;
    double min_pivot_ratio_ = 0.0;
    std::unique_ptr<Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower>> ldlt_;
    std::unique_ptr<Eigen::SparseLU<SparseMatrix>> lu_;
};

/// One-shot direct solve.
inline Vector solve_direct(const SparseMatrix& m, const Vector& rhs, SolverTolerances tol = {}) {
    return DirectSolver(m, tol).solve(rhs);
}

struct CgResult {
    Vector x;
    int iterations = 0;
    double relative_residual = 0.0;
};

/// Jacobi-preconditioned conjugate gradients for SPD matrices.
/// maxit <= 0 selects 10 n iterations.
inline CgResult solve_cg(const SparseMatrix& m, const Vector& rhs, double tol = 1e-10, int maxit = 0) {
    if (m.rows() != m.cols() || rhs.size() != m.rows()) throw ShapeError("CG shape mismatch");
    const Eigen::Index n = m.rows();
    if (maxit <= 0) maxit = static_cast<int>(10 * n);
    CgResult out;
    out.x = Vector::Zero(n);
    const double bnorm = rhs.norm();
    if (bnorm == 0.0) return out;

    const Vector diag = m.diagonal();
    if ((diag.array() <= 0.0).any()) throw SolverError("SPD contract violated: nonpositive diagonal entry");
    const Vector inv = diag.cwiseInverse();

    Vector r = rhs;
    Vector z = inv.cwiseProduct(r);
    Vector p = z;
    double rz = r.dot(z);
    for (int it = 1; it <= maxit; ++it) {
        const Vector q = m * p;
        const double curvature = p.dot(q);
        if (!(curvature > 0.0)) throw SolverError("SPD contract violated: negative curvature in CG");
        const double a = rz / curvature;
        out.x += a * p;
        r -= a * q;
        out.iterations = it;
        if (r.norm() <= tol * bnorm) {
            out.relative_residual = (rhs - m * out.x).norm() / bnorm;
            if (out.relative_residual <= tol) return out;
            r = rhs - m * out.x;  // recursive residual drifted; restart from the true one
        }
        z = inv.cwiseProduct(r);
        const double rz_new = r.dot(z);
        p = z + (rz_new / rz) * p;
        rz = rz_new;
    }
    out.relative_residual = (rhs - m * out.x).norm() / bnorm;
    throw SolverError("CG did not converge: relative residual " + std::to_string(out.relative_residual) + " after " +
                      std::to_string(maxit) + " iterations");
}

/// Smallest eigenvalue of a symmetric operator from its shifted inverse by randomized
/// block inverse iteration with Rayleigh-Ritz on the inverse. The estimate shift + 1/theta_max
/// is an upper bound of the true smallest eigenvalue; iteration stops when it changes by
/// less than tol relative to (estimate - shift).
inline double subspace_min_eig(const std::function<Vector(const Vector&)>& apply_inverse, Eigen::Index n,
                               double shift, double tol = 1e-10, int maxit = 500, int block = 6,
                               unsigned seed = 20240607u) {
    const auto k = static_cast<Eigen::Index>(std::min<Eigen::Index>(block, n));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd X(n, k);
    for (Eigen::Index j = 0; j < k; ++j)
        for (Eigen::Index i = 0; i < n; ++i) X(i, j) = normal(rng);
    X = Eigen::HouseholderQR<Eigen::MatrixXd>(X).householderQ() * Eigen::MatrixXd::Identity(n, k);
    double prev = INFINITY;
    for (int it = 0; it < maxit; ++it) {
        Eigen::MatrixXd Z(n, k);
        for (Eigen::Index j = 0; j < k; ++j) Z.col(j) = apply_inverse(X.col(j));
        Eigen::MatrixXd T = X.transpose() * Z;
        T = 0.5 * (T + T.transpose());
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        const double theta = es.eigenvalues()(k - 1);
        if (!(theta > 0.0) || !std::isfinite(theta)) throw SolverError("subspace iteration broke down");
        const double lambda = shift + 1.0 / theta;
        if (std::abs(lambda - prev) <= tol * (1.0 / theta)) return lambda;
        prev = lambda;
        // Ritz-rotated next block, orthonormalized.
        const Eigen::MatrixXd Y = Z * es.eigenvectors();
        X = Eigen::HouseholderQR<Eigen::MatrixXd>(Y).householderQ() * Eigen::MatrixXd::Identity(n, k);
    }
    throw SolverError("subspace iteration did not converge in " + std::to_string(maxit) + " iterations");
}

/// Smallest (algebraic) eigenvalue of a symmetric matrix by shifted subspace inverse iteration.
inline double min_eig_estimate(const SparseMatrix& m, double tol = 1e-10, int maxit = 500) {
    if (m.rows() != m.cols()) throw ShapeError("eigenvalue estimate needs a square matrix");
    if (!is_symmetric(m, 1e-12)) throw ShapeError("eigenvalue estimate needs a symmetric matrix");
    const Eigen::Index n = m.rows();
    double shift = 0.0;
    Eigen::SimplicialLLT<SparseMatrix> llt(m);
    if (llt.info() != Eigen::Success) {
        // Gershgorin lower bound makes M - shift I positive definite.
        double lower = INFINITY;
        Vector offsum = Vector::Zero(n);
        for (int k = 0; k < m.outerSize(); ++k)
            for (SparseMatrix::InnerIterator it(m, k); it; ++it)
                if (it.row() != it.col()) offsum[it.row()] += std::abs(it.value());
        const Vector d = m.diagonal();
        for (Eigen::Index i = 0; i < n; ++i) lower = std::min(lower, d[i] - offsum[i]);
        shift = lower - 1e-3 * (std::abs(lower) + 1.0);
    }
    SparseMatrix shifted = m;
    if (shift != 0.0) {
        SparseMatrix id(n, n);
        id.setIdentity();
        shifted = m - shift * id;
    }
    const DirectSolver solver(shifted);
    return subspace_min_eig([&](const Vector& v) { return solver.solve(v); }, n, shift, tol, maxit);
}

/// Writes a matrix in Matrix Market coordinate format.
inline void write_matrix_market(const SparseMatrix& m, const std::string& path) {
    if (!Eigen::saveMarket(m, path)) throw Error("could not write matrix to " + path);
}

}  // namespace poroplate
