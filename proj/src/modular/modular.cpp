#include "maass/modular.hpp"

#include "maass/error.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>

namespace maass {

namespace {

constexpr int kPullbackIterations = 10000;

long checked_mul(long x, long y) {
    long out = 0;
    if (__builtin_mul_overflow(x, y, &out)) {
        throw PrecisionError("matrix entry overflow");
    }
    return out;
}

long checked_add(long x, long y) {
    long out = 0;
    if (__builtin_add_overflow(x, y, &out)) {
        throw PrecisionError("matrix entry overflow");
    }
    return out;
}

// Returns (s, t) with a s + b t = gcd(a, b) >= 0.
std::pair<long, long> extended_gcd(long a, long b) {
    long old_r = a, r = b, old_s = 1, s = 0, old_t = 0, t = 1;
    while (r != 0) {
        const long q = old_r / r;
        old_r = std::exchange(r, old_r - q * r);
        old_s = std::exchange(s, old_s - q * s);
        old_t = std::exchange(t, old_t - q * t);
    }
    if (old_r < 0) {
        return {-old_s, -old_t};
    }
    return {old_s, old_t};
}

// Inverse of k modulo m, for gcd(k, m) = 1 and m >= 1.
long inverse_mod(long k, long m) {
    const long s = extended_gcd(((k % m) + m) % m, m).first;
    return ((s % m) + m) % m;
}

void require_level(long N) {
    if (N < 1) {
        throw DomainError("level must be positive, got " + std::to_string(N));
    }
    if (!is_squarefree(N)) {
        throw DomainError("level must be squarefree, got " + std::to_string(N));
    }
}

} // namespace

UpperHalfPoint::UpperHalfPoint(Ball x_, Ball y_) : x(std::move(x_)), y(std::move(y_)) {
    if (y.sign() != Sign::Positive) {
        throw DomainError("point is not determinably in the upper half-plane");
    }
}

GroupElement GroupElement::normalized() const {
    if (c < 0 || (c == 0 && d < 0)) {
        return {-a, -b, -c, -d};
    }
    return *this;
}

GroupElement operator*(const GroupElement& g, const GroupElement& h) {
    return {checked_add(checked_mul(g.a, h.a), checked_mul(g.b, h.c)),
            checked_add(checked_mul(g.a, h.b), checked_mul(g.b, h.d)),
            checked_add(checked_mul(g.c, h.a), checked_mul(g.d, h.c)),
            checked_add(checked_mul(g.c, h.b), checked_mul(g.d, h.d))};
}

UpperHalfPoint PullbackResult::evaluation_point() const {
    if (al_divisor == 1 && shift == 0) {
        return point;
    }
    return {(point.x + shift) / al_divisor, point.y / al_divisor};
}

UpperHalfPoint moebius(const GroupElement& g, const UpperHalfPoint& z) {
    const long det = g.det();
    if (det <= 0) {
        throw DomainError("Moebius action needs a positive determinant");
    }
    if (g.c == 0) {
        // Affine map (a z + b) / d.
        return {(z.x * g.a + g.b) / g.d, z.y * g.a / g.d};
    }
    const Ball cx_d = z.x * g.c + g.d;
    const Ball cy = z.y * g.c;
    const Ball denom = sqr(cx_d) + sqr(cy);
    if (denom.sign() != Sign::Positive) {
        throw DomainError("Moebius denominator contains zero");
    }
    // Re((az + b)(c conj(z) + d)) = ac|z|^2 + (ad + bc) x + bd.
    const Ball norm = sqr(z.x) + sqr(z.y);
    const Ball re = norm * checked_mul(g.a, g.c) + z.x * checked_add(checked_mul(g.a, g.d), checked_mul(g.b, g.c)) +
                    Ball::exact(checked_mul(g.b, g.d), z.x.precision());
    return {re / denom, z.y * det / denom};
}

PullbackResult pullback_sl2z(const UpperHalfPoint& z) {
    const mpfr_prec_t p = std::max(z.x.precision(), z.y.precision());
    Real x = z.x.mid();
    Real y = z.y.mid();
    Real n(p), r2(p), tmp(p);
    Real one_minus(1.0, p);
    // Points within a few ulps of |z| = 1 are accepted on either side.
    mpfr_set_ui_2exp(tmp.get(), 1, -static_cast<mpfr_exp_t>(p) + 8, MPFR_RNDN);
    mpfr_sub(one_minus.get(), one_minus.get(), tmp.get(), MPFR_RNDN);

    GroupElement g;
    bool reduced = false;
    for (int iter = 0; iter < kPullbackIterations; ++iter) {
        mpfr_rint(n.get(), x.get(), MPFR_RNDN);
        if (!n.is_zero()) {
            const long shift = mpfr_get_si(n.get(), MPFR_RNDN);
            mpfr_sub(x.get(), x.get(), n.get(), MPFR_RNDN);
            g = GroupElement::T(-shift) * g;
        }
        mpfr_sqr(r2.get(), x.get(), MPFR_RNDN);
        mpfr_sqr(tmp.get(), y.get(), MPFR_RNDN);
        mpfr_add(r2.get(), r2.get(), tmp.get(), MPFR_RNDN);
        if (!(r2 < one_minus)) {
            reduced = true;
            break;
        }
        // z <- -1/z = (-x + iy) / |z|^2
        mpfr_div(x.get(), x.get(), r2.get(), MPFR_RNDN);
        mpfr_neg(x.get(), x.get(), MPFR_RNDN);
        mpfr_div(y.get(), y.get(), r2.get(), MPFR_RNDN);
        g = GroupElement::S() * g;
    }
    if (!reduced) {
        throw PrecisionError("fundamental-domain reduction did not converge");
    }
    g = g.normalized();
    // Recompute from the input in one step to keep the radii tight.
    UpperHalfPoint point = moebius(g, z);
    return {point, g, 1, g.adjugate().normalized(), GroupElement::identity(), 0};
}

bool is_gamma0n(const GroupElement& g, long N) {
    if (g.det() != 1) {
        throw DomainError("matrix is not unimodular");
    }
    if (N < 1) {
        throw DomainError("level must be positive");
    }
    return g.c % N == 0;
}

bool is_squarefree(long n) {
    if (n < 1) {
        return false;
    }
    for (long p = 2; p * p <= n; ++p) {
        if (n % (p * p) == 0) {
            return false;
        }
        while (n % p == 0) {
            n /= p;
        }
    }
    return true;
}

std::vector<long> prime_divisors(long n) {
    std::vector<long> out;
    for (long p = 2; p * p <= n; ++p) {
        if (n % p == 0) {
            out.push_back(p);
            while (n % p == 0) {
                n /= p;
            }
        }
    }
    if (n > 1) {
        out.push_back(n);
    }
    return out;
}

std::vector<long> cusp_classes(long N) {
    require_level(N);
    std::vector<long> out;
    for (long q = 1; q <= N; ++q) {
        if (N % q == 0) {
            out.push_back(q);
        }
    }
    return out;
}

GroupElement al_matrix(long Q, long N) {
    require_level(N);
    if (Q < 1 || N % Q != 0) {
        throw DomainError("Atkin-Lehner divisor " + std::to_string(Q) + " does not divide " + std::to_string(N));
    }
    if (Q == 1) {
        return GroupElement::identity();
    }
    if (Q == N) {
        return {0, -1, N, 0};
    }
    // (Q b; N Qd) with Q d - (N/Q) b = 1.
    const long m = N / Q;
    const long b = (Q - inverse_mod(m, Q)) % Q;
    const long d = (1 + m * b) / Q;
    return {Q, b, N, Q * d};
}

PullbackResult pullback_gamma0n(const UpperHalfPoint& z, long N) {
    require_level(N);
    PullbackResult res = pullback_sl2z(z);
    // z = tau * z* with tau = map^{-1} = (a b; c d).
    const GroupElement tau = res.map.adjugate().normalized();
    const long v = std::gcd(tau.c, N);
    const long Q = N / v;
    // W = (Qa y; N c/v Qw) with Q a w - c y = 1 lies in the W_Q coset and
    // W^{-1} tau = (1 k; 0 Q) / Q.
    const auto [s, t] = extended_gcd(checked_mul(Q, tau.a), tau.c);
    const long w = s;
    const long y = -t;
    const GroupElement W{checked_mul(Q, tau.a), y, checked_mul(N, tau.c / v), checked_mul(Q, w)};
    const long k = checked_add(checked_mul(checked_mul(Q, w), tau.b), -checked_mul(y, tau.d));
    const GroupElement W_std = al_matrix(Q, N);
    const GroupElement prod = W * W_std.adjugate();
    if (prod.a % Q != 0 || prod.b % Q != 0 || prod.c % Q != 0 || prod.d % Q != 0) {
        throw std::logic_error("Atkin-Lehner decomposition failed");
    }
    const GroupElement delta{prod.a / Q, prod.b / Q, prod.c / Q, prod.d / Q};
    if (!is_gamma0n(delta, N)) {
        throw std::logic_error("Atkin-Lehner decomposition left Gamma_0(N)");
    }
    res.al_divisor = Q;
    res.gamma0 = delta.normalized();
    res.sigma = W_std * GroupElement{1, k, 0, Q};
    res.shift = k;
    return res;
}

double exit_height(long N) {
    require_level(N);
    return std::sqrt(3.0) / (2.0 * static_cast<double>(N));
}

} // namespace maass
