#pragma once

#include "maass/ball.hpp"

#include <cstddef>
#include <vector>

namespace maass {

using BallVector = std::vector<Ball>;
using RealVector = std::vector<Real>;

/// Dense row-major matrix of balls.
class BallMatrix {
public:
    BallMatrix() = default;
    BallMatrix(std::size_t rows, std::size_t cols, mpfr_prec_t prec = kDefaultPrecision);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    mpfr_prec_t precision() const { return prec_; }

    Ball& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const Ball& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    static BallMatrix identity(std::size_t n, mpfr_prec_t prec);

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    mpfr_prec_t prec_ = kDefaultPrecision;
    std::vector<Ball> data_;
};

BallMatrix operator*(const BallMatrix& a, const BallMatrix& b);
BallVector operator*(const BallMatrix& a, const BallVector& x);

/// Solves mid(A) x = mid(b) by LU with partial pivoting on the centers.
/// Throws SingularSystemError when a pivot falls below the relative threshold.
RealVector midpoint_solve(const BallMatrix& a, const BallVector& b);

/// Approximate inverse of mid(A), same failure mode as midpoint_solve.
BallMatrix approximate_inverse(const BallMatrix& a);

struct Enclosure {
    /// Per-coordinate enclosures of every solution of A x = b with A, b in the
    /// input balls. Only meaningful when `verified`.
    BallVector x;
    bool verified = false;
    /// Upper bound for ||I - R A||_inf after column scaling (>= 1 on failure).
    double contraction = 0.0;
};

/// A-posteriori enclosure around `approx` for a square system.
///
/// Columns are first scaled by exact powers of two. With R an approximate
/// inverse and C = I - R A evaluated in ball arithmetic, ||C|| < 1 gives
/// |x - approx|_i <= |R (b - A approx)|_i + ||C_i|| delta, where
/// delta = ||R (b - A approx)|| / (1 - ||C||). Never throws on singular input;
/// returns verified = false instead.
Enclosure enclose_linear(const BallMatrix& a, const BallVector& b, const RealVector& approx);

} // namespace maass
