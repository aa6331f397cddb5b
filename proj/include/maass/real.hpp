#pragma once

#include <mpfr.h>

#include <string>
#include <string_view>

namespace maass {

/// Default working precision in bits of mantissa.
inline constexpr mpfr_prec_t kDefaultPrecision = 128;

/// Owning wrapper around an `mpfr_t`.
///
/// A `Real` carries its own precision. Arithmetic lives in `Ball`; this type
/// only manages storage, conversion and formatting.
class Real {
public:
    explicit Real(mpfr_prec_t prec = kDefaultPrecision);
    Real(double value, mpfr_prec_t prec);
    Real(long value, mpfr_prec_t prec);

    Real(const Real& other);
    Real(Real&& other) noexcept;
    Real& operator=(const Real& other);
    Real& operator=(Real&& other) noexcept;
    ~Real();

    /// Parses a decimal string, rounding to nearest. Throws on malformed input.
    static Real parse(std::string_view text, mpfr_prec_t prec);

    mpfr_ptr get() { return value_; }
    mpfr_srcptr get() const { return value_; }
    mpfr_prec_t precision() const { return mpfr_get_prec(value_); }

    double to_double(mpfr_rnd_t rnd = MPFR_RNDN) const { return mpfr_get_d(value_, rnd); }
    bool is_zero() const { return mpfr_zero_p(value_) != 0; }
    bool is_finite() const { return mpfr_number_p(value_) != 0; }
    int sign() const { return mpfr_sgn(value_); }

    /// Upper bound on |x| as a double (may be +inf).
    double abs_upper() const;
    /// Lower bound on |x| as a double.
    double abs_lower() const;

    /// Scientific notation with `digits` significant digits, round to nearest,
    /// e.g. `9.533695e+00`.
    std::string to_scientific(int digits) const;

    void swap(Real& other) noexcept { mpfr_swap(value_, other.value_); }

    friend bool operator<(const Real& a, const Real& b) { return mpfr_less_p(a.value_, b.value_) != 0; }
    friend bool operator>(const Real& a, const Real& b) { return mpfr_greater_p(a.value_, b.value_) != 0; }
    friend bool operator==(const Real& a, const Real& b) { return mpfr_equal_p(a.value_, b.value_) != 0; }

private:
    mpfr_t value_;
};

} // namespace maass
