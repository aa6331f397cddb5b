#pragma once

// Reference computations used by the tests. None of them share code with the
// library: K-Bessel by plain trapezoid sums in Boost floats, reduction by
// exhaustive search, linear solves by textbook elimination in raw MPFR.

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <mpfr.h>

#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

namespace oracle {

using Float100 = boost::multiprecision::cpp_bin_float_100;

// K_{ir}(y) = int_0^inf e^{-y cosh t} cos(rt) dt. The integrand is even and
// entire, so the trapezoid rule converges geometrically; the aliasing error
// behaves like exp(-pi (2 pi / h - r) / 2).
inline Float100 kbessel(double r, double y) {
    const Float100 R(r);
    const Float100 Y(y);
    const Float100 h = 2 * boost::math::constants::pi<Float100>() / (std::fabs(r) + 110);
    Float100 sum = exp(-Y) / 2;
    for (long k = 1;; ++k) {
        const Float100 t = h * k;
        const Float100 c = cosh(t);
        if (Y * c > 300) {
            break;
        }
        sum += exp(-Y * c) * cos(R * t);
    }
    return sum * h;
}

struct Matrix2 {
    long a, b, c, d;
};

struct Reduction {
    double x;
    double y;
};

// Highest image of z over all (c, d) coprime with 0 <= c <= cmax, |d| <= dmax,
// then translated into [-1/2, 1/2). Ties on the boundary are left to the caller.
inline Reduction reduce_brute_force(double x, double y, long cmax = 50, long dmax = 250) {
    long best_c = 0, best_d = 1;
    double best = 1.0;
    for (long c = 0; c <= cmax; ++c) {
        for (long d = -dmax; d <= dmax; ++d) {
            if (std::gcd(c, d) != 1 || (c == 0 && d != 1)) {
                continue;
            }
            const double den = (c * x + d) * (c * x + d) + c * c * y * y;
            if (1.0 / den > best * (1.0 + 1e-12)) {
                best = 1.0 / den;
                best_c = c;
                best_d = d;
            }
        }
    }
    // Complete (c, d) to a matrix (a b; c d) and apply it.
    long a = 1, b = 0;
    if (best_c != 0) {
        // a d - b c = 1
        for (long aa = -1000; aa <= 1000; ++aa) {
            if ((aa * best_d - 1) % best_c == 0) {
                a = aa;
                b = (aa * best_d - 1) / best_c;
                break;
            }
        }
    }
    const double den = (best_c * x + best_d) * (best_c * x + best_d) + best_c * best_c * y * y;
    double nx = ((a * x + b) * (best_c * x + best_d) + a * best_c * y * y) / den;
    const double ny = y / den;
    nx -= std::floor(nx + 0.5);
    return {nx, ny};
}

// Raw MPFR dense matrix helper for the elimination oracles.
class MpMatrix {
public:
    MpMatrix(std::size_t n, std::size_t m, mpfr_prec_t prec) : n_(n), m_(m), v_(n * m) {
        for (auto& e : v_) {
            mpfr_init2(e.x, prec);
            mpfr_set_zero(e.x, 1);
        }
    }
    MpMatrix(const MpMatrix&) = delete;
    MpMatrix& operator=(const MpMatrix&) = delete;
    ~MpMatrix() {
        for (auto& e : v_) {
            mpfr_clear(e.x);
        }
    }
    mpfr_ptr at(std::size_t i, std::size_t j) { return v_[i * m_ + j].x; }
    std::size_t rows() const { return n_; }

private:
    struct Entry {
        mpfr_t x;
    };
    std::size_t n_, m_;
    std::vector<Entry> v_;
};

// Solves the augmented n x (n+1) system in place by Gaussian elimination with
// partial pivoting; the solution ends up in column n.
inline void gauss_solve(MpMatrix& A) {
    const std::size_t n = A.rows();
    mpfr_t f, t;
    mpfr_init2(f, mpfr_get_prec(A.at(0, 0)));
    mpfr_init2(t, mpfr_get_prec(A.at(0, 0)));
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i) {
            if (mpfr_cmpabs(A.at(i, k), A.at(piv, k)) > 0) {
                piv = i;
            }
        }
        for (std::size_t j = 0; j <= n; ++j) {
            mpfr_swap(A.at(k, j), A.at(piv, j));
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            mpfr_div(f, A.at(i, k), A.at(k, k), MPFR_RNDN);
            for (std::size_t j = k; j <= n; ++j) {
                mpfr_mul(t, f, A.at(k, j), MPFR_RNDN);
                mpfr_sub(A.at(i, j), A.at(i, j), t, MPFR_RNDN);
            }
        }
    }
    for (std::size_t k = n; k-- > 0;) {
        for (std::size_t j = k + 1; j < n; ++j) {
            mpfr_mul(t, A.at(k, j), A.at(j, n), MPFR_RNDN);
            mpfr_sub(A.at(k, n), A.at(k, n), t, MPFR_RNDN);
        }
        mpfr_div(A.at(k, n), A.at(k, n), A.at(k, k), MPFR_RNDN);
    }
    mpfr_clear(f);
    mpfr_clear(t);
}

// Determinant by full permutation expansion (Leibniz), for tiny matrices.
inline void leibniz_det(mpfr_ptr out, const std::vector<std::vector<double>>& A, mpfr_prec_t prec) {
    const std::size_t n = A.size();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    mpfr_t term;
    mpfr_init2(term, prec);
    mpfr_set_zero(out, 1);
    do {
        int inversions = 0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                inversions += perm[i] > perm[j];
            }
        }
        mpfr_set_si(term, inversions % 2 ? -1 : 1, MPFR_RNDN);
        for (std::size_t i = 0; i < n; ++i) {
            mpfr_mul_d(term, term, A[i][perm[i]], MPFR_RNDN);
        }
        mpfr_add(out, out, term, MPFR_RNDN);
    } while (std::next_permutation(perm.begin(), perm.end()));
    mpfr_clear(term);
}

} // namespace oracle
