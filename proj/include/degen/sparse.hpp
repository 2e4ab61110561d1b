#pragma once

// Thin assembly/solve layer over Eigen's sparse LU.

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <cmath>
#include <memory>
#include <span>
#include <vector>

#include "degen/error.hpp"

namespace degen {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

class TripletBuilder {
public:
    explicit TripletBuilder(int n) : n_(n) {}

    void add(int row, int col, double value) {
        if (value != 0.0) triplets_.emplace_back(row, col, value);
    }
    int size() const { return n_; }

    SparseMatrix build() const {
        SparseMatrix a(n_, n_);
        a.setFromTriplets(triplets_.begin(), triplets_.end());
        a.makeCompressed();
        return a;
    }

private:
    int n_;
    std::vector<Eigen::Triplet<double, int>> triplets_;
};

/// Factorized square system with residual-checked solves.
class LinearSolver {
public:
    explicit LinearSolver(SparseMatrix a) : a_(std::move(a)), lu_(std::make_unique<Lu>()) {
        lu_->analyzePattern(a_);
        lu_->factorize(a_);
        if (lu_->info() != Eigen::Success)
            fail(ErrorCode::SingularSystem, "sparse LU factorization failed: " + lu_->lastErrorMessage());
    }

    const SparseMatrix& matrix() const { return a_; }

    /// Solves A x = rhs; relative residual must fall below tol.
    std::vector<double> solve(std::span<const double> rhs, double tol = 1e-10) const {
        Eigen::Map<const Eigen::VectorXd> b(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
        Eigen::VectorXd x = lu_->solve(b);
        check(a_ * x - b, b, tol);
        return {x.data(), x.data() + x.size()};
    }

    /// Solves A^T x = rhs.
    std::vector<double> solve_transpose(std::span<const double> rhs, double tol = 1e-10) const {
        Eigen::Map<const Eigen::VectorXd> b(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
        Eigen::VectorXd x = lu_->transpose().solve(b);
        check(a_.transpose() * x - b, b, tol);
        return {x.data(), x.data() + x.size()};
    }

private:
    using Lu = Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>>;

    static void check(const Eigen::VectorXd& r, const Eigen::VectorXd& b, double tol) {
        double scale = std::max(1.0, b.lpNorm<Eigen::Infinity>());
        double res = r.lpNorm<Eigen::Infinity>() / scale;
        if (!(res <= tol))
            fail(ErrorCode::NoConvergence, "linear solve residual " + std::to_string(res));
    }

    SparseMatrix a_;
    std::unique_ptr<Lu> lu_;
};

}  // namespace degen
