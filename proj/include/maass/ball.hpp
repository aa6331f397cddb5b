#pragma once

#include "maass/real.hpp"

#include <iosfwd>
#include <string>

namespace maass {

enum class Sign { Positive, Negative, Undetermined };

std::string to_string(Sign s);

/// Midpoint-radius enclosure of a real number.
///
/// The midpoint is a `Real` at the ball's working precision; the radius is a
/// double kept rounded upward. Every operation returns a ball containing the
/// exact image of every point of its inputs. A radius of +inf is the
/// whole-line enclosure.
class Ball {
public:
    explicit Ball(mpfr_prec_t prec = kDefaultPrecision);
    /// Throws DomainError on a negative or NaN radius.
    Ball(Real mid, double rad);

    static Ball exact(double value, mpfr_prec_t prec);
    static Ball exact(long value, mpfr_prec_t prec);
    static Ball whole(mpfr_prec_t prec);
    /// Smallest practical ball containing [lo, hi]; requires lo <= hi.
    static Ball from_interval(const Real& lo, const Real& hi);
    static Ball pi(mpfr_prec_t prec);
    /// Parses a decimal center exactly rounded, widening by the conversion error.
    static Ball parse(const std::string& center, double rad, mpfr_prec_t prec);

    const Real& mid() const { return mid_; }
    double rad() const { return rad_; }
    mpfr_prec_t precision() const { return mid_.precision(); }

    bool is_exact() const { return rad_ == 0.0; }
    bool is_finite() const;

    /// Lower / upper endpoints, rounded outward.
    Real lower() const;
    Real upper() const;
    double lower_double() const;
    double upper_double() const;
    /// Upper bound of |x| over the ball.
    double abs_upper() const;
    /// Lower bound of |x| over the ball (0 if the ball contains zero).
    double abs_lower() const;

    bool contains(const Real& x) const;
    bool contains(double x) const;
    /// True if every point of `other` lies in this ball.
    bool contains(const Ball& other) const;
    bool overlaps(const Ball& other) const;
    bool contains_zero() const { return sign() == Sign::Undetermined; }

    Sign sign() const;

    /// Returns a copy with the radius increased by `err` (rounded up).
    Ball widened(double err) const;
    /// Returns the ball rounded to a new precision (radius absorbs the rounding).
    Ball with_precision(mpfr_prec_t prec) const;
    /// Ball covering the common part of both; throws DomainError if disjoint.
    Ball intersection(const Ball& other) const;

    double mid_double() const { return mid_.to_double(); }

    Ball operator-() const;
    Ball& operator+=(const Ball& b);
    Ball& operator-=(const Ball& b);
    Ball& operator*=(const Ball& b);

private:
    Real mid_;
    double rad_ = 0.0;

    friend class BallAccess;
};

std::ostream& operator<<(std::ostream& os, const Ball& b);

/// Ball with the given center and radius. Throws DomainError if radius < 0.
Ball ball_make(double center, double radius, mpfr_prec_t prec = kDefaultPrecision);

enum class BallOp { Add, Sub, Mul, Div };
/// Throws DomainError for division by a ball containing zero.
Ball ball_op(BallOp kind, const Ball& a, const Ball& b);
Sign ball_sign(const Ball& a);

Ball operator+(const Ball& a, const Ball& b);
Ball operator-(const Ball& a, const Ball& b);
Ball operator*(const Ball& a, const Ball& b);
Ball operator/(const Ball& a, const Ball& b);
Ball operator+(const Ball& a, long b);
Ball operator-(const Ball& a, long b);
Ball operator*(const Ball& a, long b);
Ball operator/(const Ball& a, long b);
Ball operator*(long a, const Ball& b);

Ball sqr(const Ball& x);
/// Multiplies by 2^e exactly.
Ball ldexp(const Ball& x, long e);

enum class ElemFn { Exp, Cos, Sin, Sqrt, Cosh };
/// Throws DomainError if `Sqrt` is applied to a ball not entirely >= 0.
Ball elem_fn(ElemFn kind, const Ball& x);

Ball exp(const Ball& x);
Ball cos(const Ball& x);
Ball sin(const Ball& x);
Ball sqrt(const Ball& x);
Ball cosh(const Ball& x);
Ball sinh(const Ball& x);

/// Complex enclosure as a pair of real balls.
struct ComplexBall {
    Ball re;
    Ball im;

    ComplexBall conj() const { return {re, -im}; }
    /// |z|^2 as a ball.
    Ball norm() const;
};

ComplexBall operator+(const ComplexBall& a, const ComplexBall& b);
ComplexBall operator-(const ComplexBall& a, const ComplexBall& b);
ComplexBall operator*(const ComplexBall& a, const ComplexBall& b);
ComplexBall operator*(const ComplexBall& a, const Ball& b);

/// Encloses e^{2 pi i x}. The center is reduced modulo 1 first.
ComplexBall e_unit(const Ball& x);

namespace rad {

/// Smallest double strictly greater than x (x >= 0), or x if infinite.
double next_up(double x);
double add_up(double a, double b);
double mul_up(double a, double b);
/// Upper bound for 2^e, saturating to the smallest subnormal or +inf.
double pow2_up(long e);

} // namespace rad

} // namespace maass
