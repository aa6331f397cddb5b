#include "maass/kbessel.hpp"

#include "maass/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace maass {

namespace {

constexpr double kBasePiece = 0.5;
constexpr int kMaxDepth = 6;
constexpr double kLn2 = std::numbers::ln2;
// Relative slack applied to bounds computed in double precision; covers the
// libm error of the handful of operations involved with a wide margin.
constexpr double kBoundSlack = 1.0 + 0x1p-30;

double log_cosh(double x) {
    x = std::fabs(x);
    return x + std::log1p(std::exp(-2.0 * x)) - kLn2;
}

// Upper bound from a log-domain estimate, never rounding to zero.
double exp_up(double log_value) {
    double v = std::exp(log_value) * kBoundSlack;
    return std::max(rad::next_up(v), std::numeric_limits<double>::denorm_min());
}

// Grid of imaginary semi-axes for the Bernstein ellipse; all below pi/2 so
// that Re cosh(t) stays positive on the ellipse.
const std::array<double, 18> kSemiAxes = {0.02, 0.03, 0.045, 0.065, 0.09, 0.12, 0.16, 0.21, 0.27,
                                          0.34, 0.42, 0.52, 0.64, 0.78, 0.94, 1.12, 1.32, 1.54};

double piece_start(int depth, long index) { return std::ldexp(kBasePiece * static_cast<double>(index), -depth); }
double piece_end(int depth, long index) { return std::ldexp(kBasePiece * static_cast<double>(index + 1), -depth); }

double half_ulp(const Real& x, int ternary) {
    if (ternary == 0) {
        return 0.0;
    }
    if (!x.is_finite()) {
        return std::numeric_limits<double>::infinity();
    }
    if (x.is_zero()) {
        return std::numeric_limits<double>::denorm_min();
    }
    return rad::pow2_up(static_cast<long>(mpfr_get_exp(x.get())) - static_cast<long>(x.precision()) - 1);
}

// log of the tail bound int_T^inf e^{-y cosh t} dt <= e^{-y cosh T} / (y sinh T).
double log_tail(double y, double t) { return -y * std::cosh(t) - std::log(y * std::sinh(t)); }

} // namespace

double kbessel_envelope(double y) {
    if (!(y > 0.0)) {
        return std::numeric_limits<double>::infinity();
    }
    return exp_up(-y + 0.5 * std::log(std::numbers::pi / (2.0 * y)));
}

double kbessel_k1_bound(double y) {
    if (!(y > 0.0)) {
        return std::numeric_limits<double>::infinity();
    }
    return exp_up(-y + 0.5 * std::log(std::numbers::pi / (2.0 * y)) + std::log1p(0.5 / y));
}

double kbessel_decay_point(double /*r*/, double eps) {
    if (!(eps > 0.0)) {
        throw DomainError("kbessel_decay_point: eps must be positive");
    }
    // The envelope is strictly decreasing in y; bisect on log y.
    double lo = -700.0;
    double hi = 8.0;
    if (kbessel_envelope(std::exp(lo)) < eps) {
        return std::exp(lo);
    }
    while (kbessel_envelope(std::exp(hi)) >= eps) {
        hi += 1.0;
    }
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        if (kbessel_envelope(std::exp(mid)) < eps) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return std::exp(hi);
}

KBesselEvaluator::KBesselEvaluator(const Ball& r, std::shared_ptr<const QuadratureRules> rules)
    : r_(r), r_abs_up_(r.abs_upper()), rules_(std::move(rules)) {
    if (!rules_) {
        throw DomainError("KBesselEvaluator needs quadrature rules");
    }
    if (!r.is_finite()) {
        throw DomainError("K-Bessel order must be finite");
    }
}

KBesselEvaluator::KBesselEvaluator(const Ball& r, mpfr_prec_t prec)
    : KBesselEvaluator(r, std::make_shared<const QuadratureRules>(prec)) {}

double KBesselEvaluator::piece_log_error(double a, double b, int n, double y) const {
    const double hl = 0.5 * (b - a);
    const double m = 0.5 * (a + b);
    double best = std::numeric_limits<double>::infinity();
    for (double v0 : kSemiAxes) {
        const double semi_major = std::hypot(v0, hl);
        const double rho = (v0 + semi_major) / hl;
        const double umin = std::max(0.0, m - semi_major);
        // On the ellipse: |e^{-y cosh t}| <= e^{-y cos(v0) cosh(umin)},
        // |cos(rt)| <= cosh(r v0), |t sin(rt)| <= (m + semi_major + v0) cosh(r v0).
        double log_bound = -y * std::cos(v0) * std::cosh(umin) + log_cosh(r_abs_up_ * v0);
        log_bound += std::max(0.0, std::log(m + semi_major + v0));
        const double le = std::log(hl) + std::log(64.0 / 15.0) + log_bound - 2.0 * n * std::log(rho) -
                          std::log((rho - 1.0) * (rho + 1.0));
        best = std::min(best, le);
    }
    return best;
}

void KBesselEvaluator::plan(int depth, long index, double y, double log_budget, std::vector<Piece>& out,
                            double& err_sum) const {
    const double a = piece_start(depth, index);
    const double b = piece_end(depth, index);
    const auto& ladder = QuadratureRules::kLadder;
    std::size_t chosen = ladder.size();
    double chosen_err = 0.0;
    for (std::size_t s = 0; s < ladder.size(); ++s) {
        double le = piece_log_error(a, b, ladder[s], y);
        if (le <= log_budget) {
            chosen = s;
            chosen_err = le;
            break;
        }
    }
    const bool can_split = depth < kMaxDepth;
    if (chosen < ladder.size() && (ladder[chosen] <= 24 || !can_split)) {
        out.push_back({depth, index, chosen});
        err_sum = rad::add_up(err_sum, exp_up(chosen_err));
        return;
    }
    if (!can_split) {
        // Budget unreachable even at the finest level: take the largest rule and
        // report its honest error bound.
        const std::size_t last = ladder.size() - 1;
        out.push_back({depth, index, last});
        err_sum = rad::add_up(err_sum, exp_up(piece_log_error(a, b, ladder[last], y)));
        return;
    }
    std::vector<Piece> split;
    double split_err = 0.0;
    plan(depth + 1, 2 * index, y, log_budget - kLn2, split, split_err);
    plan(depth + 1, 2 * index + 1, y, log_budget - kLn2, split, split_err);
    long split_nodes = 0;
    for (const Piece& p : split) {
        split_nodes += ladder[p.rule];
    }
    if (chosen < ladder.size() && split_nodes >= ladder[chosen]) {
        out.push_back({depth, index, chosen});
        err_sum = rad::add_up(err_sum, exp_up(chosen_err));
        return;
    }
    out.insert(out.end(), split.begin(), split.end());
    err_sum = rad::add_up(err_sum, split_err);
}

const KBesselEvaluator::PieceNodes& KBesselEvaluator::nodes_for(const Piece& piece) {
    auto key = std::make_tuple(piece.depth, piece.index, piece.rule);
    auto it = cache_.find(key);
    if (it != cache_.end()) {
        return it->second;
    }
    const mpfr_prec_t p = precision();
    const GaussLegendreRule& rule = rules_->rule(piece.rule);
    // Piece endpoints are dyadic, so the center and half-length are exact.
    const Ball half = Ball::exact(std::ldexp(0.5 * kBasePiece, -piece.depth), p);
    const Ball center = Ball::exact(std::ldexp(kBasePiece * (static_cast<double>(piece.index) + 0.5), -piece.depth), p);
    const Ball r_mid(r_.mid(), 0.0);
    PieceNodes nodes;
    nodes.cosh_t.reserve(rule.nodes.size());
    nodes.w_cos.reserve(rule.nodes.size());
    nodes.w_tsin.reserve(rule.nodes.size());
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        Ball t = center + half * rule.nodes[i];
        Ball w = half * rule.weights[i];
        Ball rt = r_mid * t;
        nodes.cosh_t.push_back(cosh(t));
        nodes.w_cos.push_back(w * cos(rt));
        nodes.w_tsin.push_back(w * t * sin(rt));
    }
    return cache_.emplace(key, std::move(nodes)).first->second;
}

KBesselEvaluator::PointValue KBesselEvaluator::at_point(const Real& y, double abs_tol, bool need_derivative) {
    const mpfr_prec_t p = precision();
    const double y_lo = y.to_double(MPFR_RNDD);
    double log_target = -static_cast<double>(p + 4) * kLn2 - y_lo - 0.5 * std::log1p(y_lo);
    if (abs_tol > 0.0) {
        log_target = std::max(log_target, std::log(abs_tol));
    }

    // Truncation point T: a whole number of base pieces with tail <= target/4.
    long base_pieces = 1;
    while (log_tail(y_lo, kBasePiece * static_cast<double>(base_pieces)) > log_target - 2.0 * kLn2) {
        ++base_pieces;
        if (base_pieces > 100000) {
            throw PrecisionError("K-Bessel: argument too small for the integration range");
        }
    }
    const double t_max = kBasePiece * static_cast<double>(base_pieces);

    std::vector<Piece> pieces;
    double quad_err = 0.0;
    const double log_budget = log_target - std::log(2.0 * static_cast<double>(base_pieces));
    for (long k = 0; k < base_pieces; ++k) {
        plan(0, k, y_lo, log_budget, pieces, quad_err);
    }

    // Fused accumulation on raw MPFR values; radii are tracked in doubles
    // rounded upward exactly as the Ball operations would.
    Real u(p), e(p), term(p), sum(p), dsum(p);
    double sum_err = 0.0;
    double dsum_err = 0.0;
    const double y_abs = y.abs_upper();
    const double exp_scale = 1.0 + std::ldexp(1.0, 2 - static_cast<int>(p));
    for (const Piece& piece : pieces) {
        const PieceNodes& nodes = nodes_for(piece);
        for (std::size_t i = 0; i < nodes.cosh_t.size(); ++i) {
            const Ball& c = nodes.cosh_t[i];
            int t = mpfr_mul(u.get(), y.get(), c.mid().get(), MPFR_RNDN);
            const double u_err = rad::add_up(rad::mul_up(y_abs, c.rad()), half_ulp(u, t));
            mpfr_neg(u.get(), u.get(), MPFR_RNDN);
            t = mpfr_exp(e.get(), u.get(), MPFR_RNDN);
            double e_err = half_ulp(e, t);
            if (u_err != 0.0) {
                const double growth = rad::next_up(rad::next_up(std::expm1(u_err)));
                e_err = rad::add_up(e_err, rad::mul_up(rad::next_up(e.abs_upper() * exp_scale), growth));
            }
            const double e_abs = rad::add_up(e.abs_upper(), e_err);
            const Ball& wc = nodes.w_cos[i];
            t = mpfr_mul(term.get(), wc.mid().get(), e.get(), MPFR_RNDN);
            double term_err = rad::add_up(rad::mul_up(wc.mid().abs_upper(), e_err), rad::mul_up(wc.rad(), e_abs));
            term_err = rad::add_up(term_err, half_ulp(term, t));
            t = mpfr_add(sum.get(), sum.get(), term.get(), MPFR_RNDN);
            sum_err = rad::add_up(sum_err, rad::add_up(term_err, half_ulp(sum, t)));
            if (need_derivative) {
                const Ball& ws = nodes.w_tsin[i];
                t = mpfr_mul(term.get(), ws.mid().get(), e.get(), MPFR_RNDN);
                term_err = rad::add_up(rad::mul_up(ws.mid().abs_upper(), e_err), rad::mul_up(ws.rad(), e_abs));
                term_err = rad::add_up(term_err, half_ulp(term, t));
                t = mpfr_sub(dsum.get(), dsum.get(), term.get(), MPFR_RNDN);
                dsum_err = rad::add_up(dsum_err, rad::add_up(term_err, half_ulp(dsum, t)));
            }
        }
        evaluations_ += static_cast<long>(nodes.cosh_t.size());
    }

    const double tail = exp_up(log_tail(y_lo, t_max));
    PointValue out{Ball(std::move(sum), rad::add_up(sum_err, rad::add_up(quad_err, tail))), Ball(p)};
    if (need_derivative) {
        // Same pieces; error bounds already include the |t| factor of the
        // derivative integrand. Tail: t <= (T / sinh T) sinh t for t >= T.
        const double dtail = exp_up(log_tail(y_lo, t_max) + std::log(t_max));
        out.r_derivative = Ball(std::move(dsum), rad::add_up(dsum_err, rad::add_up(quad_err, dtail)));
    }
    return out;
}

Ball KBesselEvaluator::value(const Ball& y, double abs_tol) {
    const mpfr_prec_t p = precision();
    if (y.sign() != Sign::Positive) {
        throw DomainError("K-Bessel argument must be positive");
    }
    const double y_lo = y.lower_double();
    const double envelope = kbessel_envelope(y_lo);
    if (abs_tol > 0.0 && envelope <= abs_tol) {
        return Ball(Real(p), envelope);
    }
    const bool need_derivative = r_.rad() > 0.0;
    PointValue pv = at_point(y.mid(), abs_tol, need_derivative);
    Ball out = pv.value.with_precision(p);
    if (y.rad() > 0.0) {
        // |d/dy K_{ir}(y)| <= K_1(y), decreasing in y.
        out = out.widened(rad::mul_up(y.rad(), kbessel_k1_bound(y_lo)));
    }
    if (need_derivative) {
        // |d^2/dr^2 K_{ir}(y)| <= int t^2 e^{-y cosh t} dt <= 2 K_1(y), as t^2 <= 2 cosh t.
        const double rho = r_.rad();
        const double y_mid_lo = y.mid().to_double(MPFR_RNDD);
        double err = rad::mul_up(rho, pv.r_derivative.abs_upper());
        err = rad::add_up(err, rad::mul_up(rad::mul_up(rho, rho), kbessel_k1_bound(y_mid_lo)));
        out = out.widened(err);
    }
    if (!(out.rad() <= envelope)) {
        return Ball(Real(p), envelope);
    }
    return out;
}

Ball kbessel_ir(double r, const Ball& y) {
    KBesselEvaluator eval(Ball::exact(r, y.precision()), y.precision());
    return eval.value(y);
}

Ball kbessel_ir(double r, double y, mpfr_prec_t prec) { return kbessel_ir(r, Ball::exact(y, prec)); }

} // namespace maass
