#include "maass/error.hpp"
#include "maass/kbessel.hpp"

#include <cmath>
#include <numbers>

namespace maass {

namespace {

// P_n(x) and P_{n-1}(x) by the three-term recurrence, plain MPFR.
void legendre_pair(int n, const Real& x, Real& pn, Real& pn1) {
    const mpfr_prec_t p = x.precision();
    Real prev(1.0, p);
    Real cur = x;
    Real tmp(p), tmp2(p);
    for (int k = 1; k < n; ++k) {
        // P_{k+1} = ((2k+1) x P_k - k P_{k-1}) / (k+1)
        mpfr_mul(tmp.get(), x.get(), cur.get(), MPFR_RNDN);
        mpfr_mul_si(tmp.get(), tmp.get(), 2 * k + 1, MPFR_RNDN);
        mpfr_mul_si(tmp2.get(), prev.get(), k, MPFR_RNDN);
        mpfr_sub(tmp.get(), tmp.get(), tmp2.get(), MPFR_RNDN);
        mpfr_div_si(tmp.get(), tmp.get(), k + 1, MPFR_RNDN);
        prev.swap(cur);
        cur.swap(tmp);
    }
    pn = cur;
    pn1 = prev;
}

struct BallPair {
    Ball pn;
    Ball pn1;
};

BallPair legendre_pair(int n, const Ball& x) {
    Ball prev = Ball::exact(1L, x.precision());
    Ball cur = x;
    for (int k = 1; k < n; ++k) {
        Ball next = (x * cur * static_cast<long>(2 * k + 1) - prev * static_cast<long>(k)) / static_cast<long>(k + 1);
        prev = std::move(cur);
        cur = std::move(next);
    }
    return {cur, prev};
}

// Newton iteration for the root of P_n near `guess`.
Real newton_root(int n, double guess, mpfr_prec_t prec) {
    Real x(guess, prec);
    Real pn(prec), pn1(prec), deriv(prec), step(prec), tmp(prec);
    for (int iter = 0; iter < 200; ++iter) {
        legendre_pair(n, x, pn, pn1);
        // P_n'(x) = n (x P_n - P_{n-1}) / (x^2 - 1)
        mpfr_mul(deriv.get(), x.get(), pn.get(), MPFR_RNDN);
        mpfr_sub(deriv.get(), deriv.get(), pn1.get(), MPFR_RNDN);
        mpfr_mul_si(deriv.get(), deriv.get(), n, MPFR_RNDN);
        mpfr_sqr(tmp.get(), x.get(), MPFR_RNDN);
        mpfr_sub_ui(tmp.get(), tmp.get(), 1, MPFR_RNDN);
        mpfr_div(deriv.get(), deriv.get(), tmp.get(), MPFR_RNDN);
        mpfr_div(step.get(), pn.get(), deriv.get(), MPFR_RNDN);
        mpfr_sub(x.get(), x.get(), step.get(), MPFR_RNDN);
        if (mpfr_zero_p(step.get()) || mpfr_get_exp(step.get()) < -static_cast<mpfr_exp_t>(prec) + 2) {
            break;
        }
    }
    return x;
}

Sign sign_of_pn(int n, const Real& x, mpfr_prec_t prec) {
    Ball xb(x, 0.0);
    return legendre_pair(n, xb.with_precision(prec)).pn.sign();
}

} // namespace

GaussLegendreRule gauss_legendre_rule(int n, mpfr_prec_t prec) {
    if (n < 1) {
        throw DomainError("Gauss-Legendre rule needs n >= 1");
    }
    // Ball evaluation of the recurrence inflates radii by up to (1 + sqrt 2)^n,
    // about 1.28 n bits; the node radius and working precision absorb that.
    const mpfr_prec_t work = prec + 32 + 4 * n;
    GaussLegendreRule rule;
    rule.n = n;
    rule.nodes.resize(static_cast<std::size_t>(n), Ball(prec));
    rule.weights.resize(static_cast<std::size_t>(n), Ball(prec));

    // Roots in descending order; the positive half is computed and mirrored.
    for (int i = 0; i < (n + 1) / 2; ++i) {
        Ball node(work);
        if (n % 2 == 1 && i == n / 2) {
            node = Ball::exact(0L, work);
        } else {
            const double guess = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
            Real x = newton_root(n, guess, work);
            // Certify by a sign change on [x - delta, x + delta].
            long shift = static_cast<long>(prec) + 16 + 2L * n;
            bool certified = false;
            for (int attempt = 0; attempt < 24 && !certified; ++attempt, shift -= 4) {
                Real lo(work), hi(work);
                mpfr_set(lo.get(), x.get(), MPFR_RNDN);
                mpfr_set(hi.get(), x.get(), MPFR_RNDN);
                Real delta(1.0, work);
                mpfr_mul_2si(delta.get(), delta.get(), -shift, MPFR_RNDN);
                mpfr_sub(lo.get(), x.get(), delta.get(), MPFR_RNDD);
                mpfr_add(hi.get(), x.get(), delta.get(), MPFR_RNDU);
                Sign s_lo = sign_of_pn(n, lo, work);
                Sign s_hi = sign_of_pn(n, hi, work);
                if (s_lo != Sign::Undetermined && s_hi != Sign::Undetermined && s_lo != s_hi) {
                    node = Ball::from_interval(lo, hi);
                    certified = true;
                }
            }
            if (!certified) {
                throw PrecisionError("could not certify Gauss-Legendre node");
            }
        }
        // w = 2 (1 - x^2) / (n P_{n-1}(x))^2, valid at the roots of P_n.
        BallPair pair = legendre_pair(n, node);
        Ball one_minus = Ball::exact(1L, work) - sqr(node);
        Ball weight = ldexp(one_minus, 1) / sqr(pair.pn1 * static_cast<long>(n));

        rule.nodes[static_cast<std::size_t>(i)] = node.with_precision(prec);
        rule.weights[static_cast<std::size_t>(i)] = weight.with_precision(prec);
        rule.nodes[static_cast<std::size_t>(n - 1 - i)] = -rule.nodes[static_cast<std::size_t>(i)];
        rule.weights[static_cast<std::size_t>(n - 1 - i)] = rule.weights[static_cast<std::size_t>(i)];
    }
    return rule;
}

QuadratureRules::QuadratureRules(mpfr_prec_t prec) : prec_(prec) {}

const GaussLegendreRule& QuadratureRules::rule(std::size_t index) const {
    std::call_once(once_.at(index), [&] { rules_[index] = gauss_legendre_rule(kLadder[index], prec_); });
    return rules_[index];
}

} // namespace maass
