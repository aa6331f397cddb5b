#pragma once

#include "maass/ball.hpp"

#include <vector>

namespace maass {

/// Point x + iy of the upper half-plane with ball coordinates.
struct UpperHalfPoint {
    Ball x;
    Ball y;

    /// Throws DomainError unless y is determinably positive.
    UpperHalfPoint(Ball x_, Ball y_);
};

/// Integer 2x2 matrix (a b; c d) acting by Moebius transformation.
struct GroupElement {
    long a = 1;
    long b = 0;
    long c = 0;
    long d = 1;

    static GroupElement identity() { return {}; }
    static GroupElement T(long n = 1) { return {1, n, 0, 1}; }
    static GroupElement S() { return {0, -1, 1, 0}; }

    long det() const { return a * d - b * c; }
    /// Adjugate (d -b; -c a); the inverse for determinant one.
    GroupElement adjugate() const { return {d, -b, -c, a}; }
    /// Representative of +-g with c > 0, or c = 0 and d > 0.
    GroupElement normalized() const;

    friend bool operator==(const GroupElement&, const GroupElement&) = default;
};

GroupElement operator*(const GroupElement& g, const GroupElement& h);

/// Result of reducing a point into the standard fundamental domain.
///
/// `map` is the SL(2,Z) element with map * z = point. For level N the
/// decomposition z = gamma0 * sigma * point holds, where gamma0 lies in
/// Gamma_0(N) and sigma = al_matrix(Q, N) * (1 shift; 0 Q). A form with
/// Atkin-Lehner signs eps then satisfies f(z) = eps_Q f(evaluation_point()).
struct PullbackResult {
    UpperHalfPoint point;
    GroupElement map;
    long al_divisor = 1;
    GroupElement gamma0;
    GroupElement sigma;
    long shift = 0;

    /// (point + shift) / al_divisor, whose height is at least sqrt(3)/(2N).
    UpperHalfPoint evaluation_point() const;
};

/// (az + b)/(cz + d) for any matrix of positive determinant.
/// Throws DomainError if cz + d cannot be bounded away from zero.
UpperHalfPoint moebius(const GroupElement& g, const UpperHalfPoint& z);

/// Reduces z into {|x| <= 1/2, |z| >= 1}. Throws PrecisionError when the
/// iteration cap is hit.
PullbackResult pullback_sl2z(const UpperHalfPoint& z);

/// c = 0 mod N. Throws DomainError unless det g = 1.
bool is_gamma0n(const GroupElement& g, long N);

bool is_squarefree(long n);
/// Prime divisors in increasing order.
std::vector<long> prime_divisors(long n);
/// Divisors of squarefree N in increasing order, one per Atkin-Lehner cusp class.
std::vector<long> cusp_classes(long N);

/// Atkin-Lehner representative (Qa b; Nc Qd) of determinant Q.
///
/// Q = 1 gives the identity and Q = N the Fricke matrix (0 -1; N 0);
/// otherwise a = c = 1 and b is the least nonnegative solution.
GroupElement al_matrix(long Q, long N);

/// Pullback for Gamma_0(N), N squarefree. The divisor Q = N / gcd(c, N)
/// comes from the bottom row of the inverse of the SL(2,Z) map.
PullbackResult pullback_gamma0n(const UpperHalfPoint& z, long N);

/// sqrt(3)/(2N): every evaluation point of pullback_gamma0n lies at or above it.
double exit_height(long N);

} // namespace maass
