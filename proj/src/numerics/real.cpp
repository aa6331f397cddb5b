#include "maass/real.hpp"

#include "maass/error.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace maass {

Real::Real(mpfr_prec_t prec) {
    mpfr_init2(value_, prec);
    mpfr_set_zero(value_, 1);
}

Real::Real(double value, mpfr_prec_t prec) {
    mpfr_init2(value_, prec);
    mpfr_set_d(value_, value, MPFR_RNDN);
}

Real::Real(long value, mpfr_prec_t prec) {
    mpfr_init2(value_, prec);
    mpfr_set_si(value_, value, MPFR_RNDN);
}

Real::Real(const Real& other) {
    mpfr_init2(value_, other.precision());
    mpfr_set(value_, other.value_, MPFR_RNDN);
}

Real::Real(Real&& other) noexcept {
    mpfr_init2(value_, MPFR_PREC_MIN);
    mpfr_swap(value_, other.value_);
}

Real& Real::operator=(const Real& other) {
    if (this != &other) {
        mpfr_set_prec(value_, other.precision());
        mpfr_set(value_, other.value_, MPFR_RNDN);
    }
    return *this;
}

Real& Real::operator=(Real&& other) noexcept {
    mpfr_swap(value_, other.value_);
    return *this;
}

Real::~Real() { mpfr_clear(value_); }

Real Real::parse(std::string_view text, mpfr_prec_t prec) {
    Real out(prec);
    std::string buf(text);
    char* end = nullptr;
    if (!buf.empty()) {
        mpfr_strtofr(out.value_, buf.c_str(), &end, 10, MPFR_RNDN);
    }
    if (buf.empty() || end != buf.c_str() + buf.size()) {
        throw DomainError("not a decimal number: '" + buf + "'");
    }
    if (!out.is_finite()) {
        throw DomainError("not a finite number: '" + buf + "'");
    }
    return out;
}

double Real::abs_upper() const {
    return std::fabs(mpfr_get_d(value_, MPFR_RNDA));
}

double Real::abs_lower() const {
    return std::fabs(mpfr_get_d(value_, MPFR_RNDZ));
}

std::string Real::to_scientific(int digits) const {
    std::vector<char> buf(static_cast<std::size_t>(digits) + 32);
    mpfr_snprintf(buf.data(), buf.size(), "%.*RNe", digits - 1, value_);
    return std::string(buf.data());
}

} // namespace maass
