#pragma once

#include "maass/ball.hpp"

#include <array>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>
#include <vector>

namespace maass {

/// n-point Gauss-Legendre rule on [-1, 1] with verified node and weight balls.
///
/// Each node ball is certified to contain exactly one root of P_n by a sign
/// change of P_n evaluated in ball arithmetic; weights are evaluated on the
/// node balls, so they contain the exact weights.
struct GaussLegendreRule {
    int n = 0;
    std::vector<Ball> nodes;
    std::vector<Ball> weights;
};

GaussLegendreRule gauss_legendre_rule(int n, mpfr_prec_t prec);

/// Ladder of Gauss-Legendre rules at one precision, built on first use.
/// Safe to share between threads.
class QuadratureRules {
public:
    static constexpr std::array<int, 7> kLadder = {8, 12, 16, 24, 32, 48, 64};

    explicit QuadratureRules(mpfr_prec_t prec);

    mpfr_prec_t precision() const { return prec_; }
    /// Rule for ladder entry `index`.
    const GaussLegendreRule& rule(std::size_t index) const;

private:
    mpfr_prec_t prec_;
    mutable std::array<std::once_flag, kLadder.size()> once_;
    mutable std::array<GaussLegendreRule, kLadder.size()> rules_;
};

/// Upper bound for |K_{ir}(y)|, valid for every real r: K_0(y) <= sqrt(pi/(2y)) e^{-y}.
double kbessel_envelope(double y);
/// Upper bound for K_1(y) = integral of cosh(t) e^{-y cosh t}; bounds |d/dy K_{ir}(y)|.
double kbessel_k1_bound(double y);

/// Smallest practical y0 with kbessel_envelope(y) < eps for all y >= y0.
/// Throws DomainError if eps <= 0.
double kbessel_decay_point(double r, double eps);

/// Evaluates K_{ir}(y) for one spectral parameter r and many arguments y.
///
/// Uses K_{ir}(y) = int_0^inf e^{-y cosh t} cos(rt) dt, split into dyadic
/// pieces of [0, T] integrated by Gauss-Legendre with the Bernstein-ellipse
/// error bound, plus the tail bound e^{-y cosh T}/(y sinh T). When r or y
/// carry a radius, the result is widened by explicit derivative bounds.
///
/// Node data is cached per piece, so one evaluator should be reused for all
/// arguments at a given r. Not safe for concurrent use; create one per thread.
class KBesselEvaluator {
public:
    KBesselEvaluator(const Ball& r, std::shared_ptr<const QuadratureRules> rules);
    KBesselEvaluator(const Ball& r, mpfr_prec_t prec);

    const Ball& order() const { return r_; }
    mpfr_prec_t precision() const { return rules_->precision(); }

    /// Encloses K_{ir}(y) for every r in the order ball and y in `y`.
    /// If `abs_tol` > 0, errors below abs_tol are not worth resolving and a
    /// result of [0 +/- envelope] is returned when the envelope is below it.
    /// Throws DomainError unless y is determinably positive.
    Ball value(const Ball& y, double abs_tol = 0.0);

    /// Number of integrand evaluations performed so far.
    long evaluations() const { return evaluations_; }

private:
    struct PieceNodes {
        std::vector<Ball> cosh_t;
        std::vector<Ball> w_cos;  // half-length * weight * cos(r t)
        std::vector<Ball> w_tsin; // half-length * weight * t sin(r t)
    };
    struct Piece {
        int depth;
        long index;
        std::size_t rule;
    };
    struct PointValue {
        Ball value;
        Ball r_derivative;
    };

    PointValue at_point(const Real& y, double abs_tol, bool need_derivative);
    const PieceNodes& nodes_for(const Piece& piece);
    void plan(int depth, long index, double y, double log_budget, std::vector<Piece>& out, double& log_err_sum) const;
    double piece_log_error(double a, double b, int n, double y) const;

    Ball r_;
    double r_abs_up_;
    std::shared_ptr<const QuadratureRules> rules_;
    std::map<std::tuple<int, long, std::size_t>, PieceNodes> cache_;
    long evaluations_ = 0;
};

/// Encloses K_{ir}(y). Convenience wrapper that builds a temporary evaluator;
/// prefer KBesselEvaluator for repeated use.
Ball kbessel_ir(double r, const Ball& y);
Ball kbessel_ir(double r, double y, mpfr_prec_t prec = kDefaultPrecision);

} // namespace maass
