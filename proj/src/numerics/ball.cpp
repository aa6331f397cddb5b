#include "maass/ball.hpp"

#include "maass/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace maass {

namespace rad {

double next_up(double x) {
    if (std::isinf(x)) {
        return x;
    }
    return std::nextafter(x, std::numeric_limits<double>::infinity());
}

double add_up(double a, double b) {
    double s = a + b;
    return (a == 0.0 || b == 0.0) ? s : next_up(s);
}

double mul_up(double a, double b) {
    if (a == 0.0 || b == 0.0) {
        return 0.0;
    }
    return next_up(a * b);
}

double pow2_up(long e) {
    if (e < -1074) {
        return std::numeric_limits<double>::denorm_min();
    }
    if (e > 1023) {
        return std::numeric_limits<double>::infinity();
    }
    return std::ldexp(1.0, static_cast<int>(e));
}

} // namespace rad

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double next_down(double x) {
    if (x <= 0.0) {
        return 0.0;
    }
    return std::nextafter(x, 0.0);
}

// Bound on |exact - x| for a result rounded to nearest with ternary value t.
double rounding_error(mpfr_srcptr x, int ternary) {
    if (ternary == 0) {
        return 0.0;
    }
    if (!mpfr_number_p(x)) {
        return kInf;
    }
    if (mpfr_zero_p(x)) {
        return std::numeric_limits<double>::denorm_min();
    }
    return rad::pow2_up(static_cast<long>(mpfr_get_exp(x)) - static_cast<long>(mpfr_get_prec(x)) - 1);
}

mpfr_prec_t join(const Ball& a, const Ball& b) { return std::max(a.precision(), b.precision()); }

Real endpoint(const Real& mid, double r, bool upper) {
    Real out(mid.precision());
    if (upper) {
        mpfr_add_d(out.get(), mid.get(), r, MPFR_RNDU);
    } else {
        mpfr_sub_d(out.get(), mid.get(), r, MPFR_RNDD);
    }
    return out;
}

using MpfrFn = int (*)(mpfr_ptr, mpfr_srcptr, mpfr_rnd_t);

Real apply(MpfrFn fn, const Real& x, mpfr_rnd_t rnd) {
    Real out(x.precision());
    fn(out.get(), x.get(), rnd);
    return out;
}

const Real& min_of(const Real& a, const Real& b) { return b < a ? b : a; }
const Real& max_of(const Real& a, const Real& b) { return a < b ? b : a; }

// Range of cos(x - shift*pi/2) over [lo, hi], i.e. cos for shift 0 and sin
// for shift 1, including interior critical points.
Ball trig_range(const Real& lo, const Real& hi, bool is_sin) {
    const mpfr_prec_t p = lo.precision();
    Real width(p);
    mpfr_sub(width.get(), hi.get(), lo.get(), MPFR_RNDU);
    if (mpfr_cmp_d(width.get(), 6.0) >= 0) {
        return Ball::from_interval(Real(-1.0, p), Real(1.0, p));
    }
    MpfrFn fn = is_sin ? &mpfr_sin : &mpfr_cos;
    Real low = min_of(apply(fn, lo, MPFR_RNDD), apply(fn, hi, MPFR_RNDD));
    Real high = max_of(apply(fn, lo, MPFR_RNDU), apply(fn, hi, MPFR_RNDU));

    // Critical points sit at x = k*pi (cos) or x = (k + 1/2)*pi (sin); find the
    // integers k whose critical point may lie in [lo, hi]. The quotient is
    // rounded outward so the candidate set is never too small.
    Real pi_lo(p), pi_hi(p);
    mpfr_const_pi(pi_lo.get(), MPFR_RNDD);
    mpfr_const_pi(pi_hi.get(), MPFR_RNDU);
    Real q_lo(p + 16), q_hi(p + 16);
    mpfr_div(q_lo.get(), lo.get(), lo.sign() >= 0 ? pi_hi.get() : pi_lo.get(), MPFR_RNDD);
    mpfr_div(q_hi.get(), hi.get(), hi.sign() >= 0 ? pi_lo.get() : pi_hi.get(), MPFR_RNDU);
    if (is_sin) {
        mpfr_sub_d(q_lo.get(), q_lo.get(), 0.5, MPFR_RNDD);
        mpfr_sub_d(q_hi.get(), q_hi.get(), 0.5, MPFR_RNDU);
    }
    mpfr_ceil(q_lo.get(), q_lo.get());
    mpfr_floor(q_hi.get(), q_hi.get());
    const long k_first = mpfr_get_si(q_lo.get(), MPFR_RNDN);
    const long k_last = mpfr_get_si(q_hi.get(), MPFR_RNDN);
    for (long k = k_first; k <= k_last; ++k) {
        // cos(k pi) = (-1)^k; sin((k + 1/2) pi) = (-1)^k.
        if (k % 2 == 0) {
            high = Real(1.0, p);
        } else {
            low = Real(-1.0, p);
        }
    }
    return Ball::from_interval(low, high);
}

} // namespace

std::string to_string(Sign s) {
    switch (s) {
    case Sign::Positive:
        return "positive";
    case Sign::Negative:
        return "negative";
    case Sign::Undetermined:
        return "undetermined";
    }
    return "undetermined";
}

Ball::Ball(mpfr_prec_t prec) : mid_(prec) {}

Ball::Ball(Real mid, double rad) : mid_(std::move(mid)), rad_(rad) {
    if (!(rad >= 0.0)) {
        throw DomainError("ball radius must be nonnegative");
    }
    if (!mid_.is_finite()) {
        mpfr_set_zero(mid_.get(), 1);
        rad_ = kInf;
    }
}

Ball Ball::exact(double value, mpfr_prec_t prec) {
    Real m(prec);
    int t = mpfr_set_d(m.get(), value, MPFR_RNDN);
    double e = rounding_error(m.get(), t);
    return Ball(std::move(m), e);
}

Ball Ball::exact(long value, mpfr_prec_t prec) {
    Real m(prec);
    int t = mpfr_set_si(m.get(), value, MPFR_RNDN);
    double e = rounding_error(m.get(), t);
    return Ball(std::move(m), e);
}

Ball Ball::whole(mpfr_prec_t prec) { return Ball(Real(prec), kInf); }

Ball Ball::from_interval(const Real& lo, const Real& hi) {
    const mpfr_prec_t p = std::max(lo.precision(), hi.precision());
    if (!lo.is_finite() || !hi.is_finite()) {
        return whole(p);
    }
    Real m(p);
    mpfr_add(m.get(), lo.get(), hi.get(), MPFR_RNDN);
    mpfr_div_2ui(m.get(), m.get(), 1, MPFR_RNDN);
    Real d1(p), d2(p);
    mpfr_sub(d1.get(), hi.get(), m.get(), MPFR_RNDU);
    mpfr_sub(d2.get(), m.get(), lo.get(), MPFR_RNDU);
    double r = std::max(mpfr_get_d(d1.get(), MPFR_RNDU), mpfr_get_d(d2.get(), MPFR_RNDU));
    return Ball(std::move(m), std::max(r, 0.0));
}

Ball Ball::pi(mpfr_prec_t prec) {
    Real m(prec);
    int t = mpfr_const_pi(m.get(), MPFR_RNDN);
    double e = rounding_error(m.get(), t);
    return Ball(std::move(m), e);
}

Ball Ball::parse(const std::string& center, double rad, mpfr_prec_t prec) {
    Real m(prec);
    char* end = nullptr;
    int t = mpfr_strtofr(m.get(), center.c_str(), &end, 10, MPFR_RNDN);
    if (center.empty() || end != center.c_str() + center.size() || !m.is_finite()) {
        throw DomainError("not a decimal number: '" + center + "'");
    }
    double e = rounding_error(m.get(), t);
    return Ball(std::move(m), rad::add_up(rad, e));
}

bool Ball::is_finite() const { return std::isfinite(rad_) && mid_.is_finite(); }

Real Ball::lower() const { return endpoint(mid_, rad_, false); }
Real Ball::upper() const { return endpoint(mid_, rad_, true); }

double Ball::lower_double() const { return mpfr_get_d(lower().get(), MPFR_RNDD); }
double Ball::upper_double() const { return mpfr_get_d(upper().get(), MPFR_RNDU); }

double Ball::abs_upper() const { return rad::add_up(mid_.abs_upper(), rad_); }

double Ball::abs_lower() const {
    double m = mid_.abs_lower();
    if (!(m > rad_)) {
        return 0.0;
    }
    return next_down(m - rad_);
}

bool Ball::contains(const Real& x) const {
    if (std::isinf(rad_)) {
        return true;
    }
    Real d(std::max(x.precision(), precision()) + 64);
    mpfr_sub(d.get(), x.get(), mid_.get(), MPFR_RNDA);
    return std::fabs(mpfr_get_d(d.get(), MPFR_RNDA)) <= rad_;
}

bool Ball::contains(double x) const { return contains(Real(x, 64)); }

bool Ball::contains(const Ball& other) const {
    if (std::isinf(rad_)) {
        return true;
    }
    Real d(std::max(other.precision(), precision()) + 64);
    mpfr_sub(d.get(), other.mid_.get(), mid_.get(), MPFR_RNDA);
    return rad::add_up(std::fabs(mpfr_get_d(d.get(), MPFR_RNDA)), other.rad_) <= rad_;
}

bool Ball::overlaps(const Ball& other) const {
    if (std::isinf(rad_) || std::isinf(other.rad_)) {
        return true;
    }
    Real d(std::max(other.precision(), precision()) + 64);
    mpfr_sub(d.get(), other.mid_.get(), mid_.get(), MPFR_RNDA);
    return std::fabs(mpfr_get_d(d.get(), MPFR_RNDA)) <= rad_ + other.rad_;
}

Ball Ball::intersection(const Ball& other) const {
    if (!overlaps(other)) {
        throw DomainError("intersection of disjoint balls");
    }
    if (std::isinf(rad_)) {
        return other;
    }
    if (std::isinf(other.rad_)) {
        return *this;
    }
    const Real a = lower(), b = other.lower(), c = upper(), d = other.upper();
    const Real& lo = a < b ? b : a;
    const Real& hi = c < d ? c : d;
    if (hi < lo) {
        // touching endpoints after outward rounding
        return rad_ <= other.rad_ ? *this : other;
    }
    Ball out = from_interval(lo, hi);
    return out.rad_ < std::min(rad_, other.rad_) ? out : (rad_ <= other.rad_ ? *this : other);
}

Sign Ball::sign() const {
    if (std::isinf(rad_)) {
        return Sign::Undetermined;
    }
    if (lower().sign() > 0) {
        return Sign::Positive;
    }
    if (upper().sign() < 0) {
        return Sign::Negative;
    }
    return Sign::Undetermined;
}

Ball Ball::widened(double err) const {
    Ball out = *this;
    out.rad_ = rad::add_up(rad_, err);
    return out;
}

Ball Ball::with_precision(mpfr_prec_t prec) const {
    Real m(prec);
    int t = mpfr_set(m.get(), mid_.get(), MPFR_RNDN);
    double e = rounding_error(m.get(), t);
    return Ball(std::move(m), rad::add_up(rad_, e));
}

Ball Ball::operator-() const {
    Ball out = *this;
    mpfr_neg(out.mid_.get(), out.mid_.get(), MPFR_RNDN);
    return out;
}

Ball& Ball::operator+=(const Ball& b) { return *this = *this + b; }
Ball& Ball::operator-=(const Ball& b) { return *this = *this - b; }
Ball& Ball::operator*=(const Ball& b) { return *this = *this * b; }

std::ostream& operator<<(std::ostream& os, const Ball& b) {
    return os << '[' << b.mid().to_scientific(20) << " +/- " << b.rad() << ']';
}

Ball ball_make(double center, double radius, mpfr_prec_t prec) {
    if (!(radius >= 0.0)) {
        throw DomainError("ball_make: negative radius");
    }
    return Ball::exact(center, prec).widened(radius);
}

Ball operator+(const Ball& a, const Ball& b) {
    Real m(join(a, b));
    int t = mpfr_add(m.get(), a.mid().get(), b.mid().get(), MPFR_RNDN);
    double r = rad::add_up(rad::add_up(a.rad(), b.rad()), rounding_error(m.get(), t));
    return Ball(std::move(m), r);
}

Ball operator-(const Ball& a, const Ball& b) {
    Real m(join(a, b));
    int t = mpfr_sub(m.get(), a.mid().get(), b.mid().get(), MPFR_RNDN);
    double r = rad::add_up(rad::add_up(a.rad(), b.rad()), rounding_error(m.get(), t));
    return Ball(std::move(m), r);
}

Ball operator*(const Ball& a, const Ball& b) {
    const mpfr_prec_t p = join(a, b);
    if (!a.is_finite() || !b.is_finite()) {
        return Ball::whole(p);
    }
    Real m(p);
    int t = mpfr_mul(m.get(), a.mid().get(), b.mid().get(), MPFR_RNDN);
    double r = rad::mul_up(a.mid().abs_upper(), b.rad());
    r = rad::add_up(r, rad::mul_up(b.mid().abs_upper(), a.rad()));
    r = rad::add_up(r, rad::mul_up(a.rad(), b.rad()));
    r = rad::add_up(r, rounding_error(m.get(), t));
    return Ball(std::move(m), r);
}

Ball operator/(const Ball& a, const Ball& b) {
    const mpfr_prec_t p = join(a, b);
    const double lb = b.mid().abs_lower();
    if (!(lb > b.rad())) {
        throw DomainError("division by a ball containing zero");
    }
    if (!a.is_finite()) {
        return Ball::whole(p);
    }
    Real m(p);
    int t = mpfr_div(m.get(), a.mid().get(), b.mid().get(), MPFR_RNDN);
    double r = 0.0;
    if (a.rad() != 0.0 || b.rad() != 0.0) {
        double num = rad::add_up(rad::mul_up(a.rad(), b.mid().abs_upper()),
                                 rad::mul_up(a.mid().abs_upper(), b.rad()));
        double den = next_down(lb * next_down(lb - b.rad()));
        r = den > 0.0 ? rad::next_up(num / den) : kInf;
    }
    r = rad::add_up(r, rounding_error(m.get(), t));
    return Ball(std::move(m), r);
}

Ball operator+(const Ball& a, long b) {
    Real m(a.precision());
    int t = mpfr_add_si(m.get(), a.mid().get(), b, MPFR_RNDN);
    return Ball(std::move(m), rad::add_up(a.rad(), rounding_error(m.get(), t)));
}

Ball operator-(const Ball& a, long b) {
    Real m(a.precision());
    int t = mpfr_sub_si(m.get(), a.mid().get(), b, MPFR_RNDN);
    return Ball(std::move(m), rad::add_up(a.rad(), rounding_error(m.get(), t)));
}

Ball operator*(const Ball& a, long b) {
    Real m(a.precision());
    int t = mpfr_mul_si(m.get(), a.mid().get(), b, MPFR_RNDN);
    double r = rad::mul_up(a.rad(), std::fabs(static_cast<double>(b)));
    return Ball(std::move(m), rad::add_up(r, rounding_error(m.get(), t)));
}

Ball operator*(long a, const Ball& b) { return b * a; }

Ball operator/(const Ball& a, long b) {
    if (b == 0) {
        throw DomainError("division by zero");
    }
    Real m(a.precision());
    int t = mpfr_div_si(m.get(), a.mid().get(), b, MPFR_RNDN);
    double r = a.rad() == 0.0 ? 0.0 : rad::next_up(a.rad() / std::fabs(static_cast<double>(b)));
    return Ball(std::move(m), rad::add_up(r, rounding_error(m.get(), t)));
}

Ball ball_op(BallOp kind, const Ball& a, const Ball& b) {
    switch (kind) {
    case BallOp::Add:
        return a + b;
    case BallOp::Sub:
        return a - b;
    case BallOp::Mul:
        return a * b;
    case BallOp::Div:
        return a / b;
    }
    throw DomainError("unknown ball operation");
}

Sign ball_sign(const Ball& a) { return a.sign(); }

Ball sqr(const Ball& x) {
    if (!x.is_finite()) {
        return Ball::whole(x.precision());
    }
    Real m(x.precision());
    int t = mpfr_sqr(m.get(), x.mid().get(), MPFR_RNDN);
    double r = rad::mul_up(2.0 * x.mid().abs_upper(), x.rad());
    r = rad::add_up(r, rad::mul_up(x.rad(), x.rad()));
    return Ball(std::move(m), rad::add_up(r, rounding_error(m.get(), t)));
}

Ball ldexp(const Ball& x, long e) {
    Real m(x.precision());
    mpfr_mul_2si(m.get(), x.mid().get(), e, MPFR_RNDN);
    double r = x.rad() == 0.0 ? 0.0 : rad::next_up(std::ldexp(x.rad(), static_cast<int>(e)));
    return Ball(std::move(m), r);
}

Ball exp(const Ball& x) {
    const mpfr_prec_t p = x.precision();
    if (!x.is_finite()) {
        return Ball::whole(p);
    }
    Real m(p);
    int t = mpfr_exp(m.get(), x.mid().get(), MPFR_RNDN);
    if (!m.is_finite()) {
        return Ball::whole(p);
    }
    double r = rounding_error(m.get(), t);
    if (x.rad() != 0.0) {
        // |exp(c + d) - exp(c)| <= exp(c) * expm1(|d|); libm expm1 is within
        // one ulp, two steps upward cover it.
        double growth = rad::next_up(rad::next_up(std::expm1(x.rad())));
        double scale = rad::next_up(m.abs_upper() * (1.0 + std::ldexp(1.0, 2 - static_cast<int>(p))));
        r = rad::add_up(r, rad::mul_up(scale, growth));
    }
    return Ball(std::move(m), r);
}

Ball cosh(const Ball& x) {
    const mpfr_prec_t p = x.precision();
    if (!x.is_finite()) {
        return Ball::whole(p);
    }
    Real lo = x.lower();
    Real hi = x.upper();
    Real top = max_of(apply(&mpfr_cosh, lo, MPFR_RNDU), apply(&mpfr_cosh, hi, MPFR_RNDU));
    Real bottom(1.0, p);
    if (lo.sign() > 0 || hi.sign() < 0) {
        bottom = min_of(apply(&mpfr_cosh, lo, MPFR_RNDD), apply(&mpfr_cosh, hi, MPFR_RNDD));
    }
    return Ball::from_interval(bottom, top);
}

Ball sinh(const Ball& x) {
    if (!x.is_finite()) {
        return Ball::whole(x.precision());
    }
    return Ball::from_interval(apply(&mpfr_sinh, x.lower(), MPFR_RNDD), apply(&mpfr_sinh, x.upper(), MPFR_RNDU));
}

Ball sqrt(const Ball& x) {
    Real lo = x.lower();
    if (!x.is_finite() || lo.sign() < 0) {
        throw DomainError("sqrt of a ball that is not entirely nonnegative");
    }
    return Ball::from_interval(apply(&mpfr_sqrt, lo, MPFR_RNDD), apply(&mpfr_sqrt, x.upper(), MPFR_RNDU));
}

Ball cos(const Ball& x) {
    if (!x.is_finite()) {
        return Ball::from_interval(Real(-1.0, x.precision()), Real(1.0, x.precision()));
    }
    return trig_range(x.lower(), x.upper(), false);
}

Ball sin(const Ball& x) {
    if (!x.is_finite()) {
        return Ball::from_interval(Real(-1.0, x.precision()), Real(1.0, x.precision()));
    }
    return trig_range(x.lower(), x.upper(), true);
}

Ball elem_fn(ElemFn kind, const Ball& x) {
    switch (kind) {
    case ElemFn::Exp:
        return exp(x);
    case ElemFn::Cos:
        return cos(x);
    case ElemFn::Sin:
        return sin(x);
    case ElemFn::Sqrt:
        return sqrt(x);
    case ElemFn::Cosh:
        return cosh(x);
    }
    throw DomainError("unknown elementary function");
}

Ball ComplexBall::norm() const { return sqr(re) + sqr(im); }

ComplexBall operator+(const ComplexBall& a, const ComplexBall& b) { return {a.re + b.re, a.im + b.im}; }
ComplexBall operator-(const ComplexBall& a, const ComplexBall& b) { return {a.re - b.re, a.im - b.im}; }

ComplexBall operator*(const ComplexBall& a, const ComplexBall& b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}

ComplexBall operator*(const ComplexBall& a, const Ball& b) { return {a.re * b, a.im * b}; }

ComplexBall e_unit(const Ball& x) {
    const mpfr_prec_t p = x.precision();
    Real n(p);
    mpfr_round(n.get(), x.mid().get());
    Ball reduced = x - Ball(std::move(n), 0.0);
    Ball theta = ldexp(Ball::pi(p) * reduced, 1);
    return {cos(theta), sin(theta)};
}

} // namespace maass
