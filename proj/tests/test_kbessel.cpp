#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"

#include "maass/error.hpp"
#include "maass/kbessel.hpp"

#include <boost/math/special_functions/bessel.hpp>

#include <cmath>

using namespace maass;
using oracle::Float100;

namespace {

Real to_real(const Float100& v, mpfr_prec_t prec) {
    return Real::parse(v.str(95, std::ios_base::scientific), prec);
}

// |oracle - mid| <= rad + slack, evaluated at 512 bits.
bool agrees(const Ball& b, const Float100& v, double slack = 1e-60) {
    return b.widened(slack).contains(to_real(v, 512));
}

} // namespace

TEST_CASE("trapezoid oracle reproduces K_0(1)") {
    // Boost's K_0 is an independent implementation of the same function.
    const Float100 k0 = boost::math::cyl_bessel_k(0, Float100(1));
    CHECK(abs(oracle::kbessel(0.0, 1.0) - k0) < Float100("1e-60"));
}

TEST_CASE("r = 0, y = 1 encloses K_0(1)") {
    const Ball k = kbessel_ir(0.0, 1.0);
    CHECK(agrees(k, boost::math::cyl_bessel_k(0, Float100(1))));
    CHECK(k.rad() < 1e-30);
}

TEST_CASE("order sign does not matter") {
    for (double y : {0.3, 2.0, 17.0}) {
        const Ball a = kbessel_ir(7.25, y);
        const Ball b = kbessel_ir(-7.25, y);
        CHECK(a.mid() == b.mid());
        CHECK(a.rad() == b.rad());
    }
}

TEST_CASE("r = 5, y = 100 is below 1e-40") {
    const Ball k = kbessel_ir(5.0, 100.0);
    CHECK(k.abs_upper() < 1e-40);
    CHECK(agrees(k, oracle::kbessel(5.0, 100.0)));
}

TEST_CASE("non-positive arguments are rejected") {
    CHECK_THROWS_AS(kbessel_ir(1.0, 0.0), DomainError);
    CHECK_THROWS_AS(kbessel_ir(1.0, -2.0), DomainError);
}

TEST_CASE("200-point grid against the trapezoid oracle") {
    int disagreements = 0;
    int wide = 0;
    double worst_rad = 0.0;
    for (int i = 0; i < 20; ++i) {
        const double r = 30.0 * i / 19.0;
        KBesselEvaluator k(Ball::exact(r, kDefaultPrecision), kDefaultPrecision);
        for (int j = 0; j < 10; ++j) {
            const double y = 0.1 * std::pow(500.0, j / 9.0);
            const Ball v = k.value(Ball::exact(y, kDefaultPrecision));
            if (!agrees(v, oracle::kbessel(r, y))) {
                ++disagreements;
                MESSAGE("disagreement at r = " << r << ", y = " << y);
            }
            if (y >= 1.0) {
                worst_rad = std::max(worst_rad, v.rad());
                wide += v.rad() > 1e-20;
            }
        }
    }
    CHECK(disagreements == 0);
    CHECK(wide == 0);
    MESSAGE("largest radius for y >= 1: " << worst_rad);
}

TEST_CASE("ball-valued order and argument stay enclosing") {
    const Ball r = Ball::exact(9.5, kDefaultPrecision).widened(1e-12);
    KBesselEvaluator k(r, kDefaultPrecision);
    for (double y : {0.5, 3.0, 12.0}) {
        const Ball yb = Ball::exact(y, kDefaultPrecision).widened(1e-15);
        const Ball v = k.value(yb);
        for (double dr : {-1e-12, 0.0, 1e-12}) {
            for (double dy : {-1e-15, 1e-15}) {
                CHECK(agrees(v, oracle::kbessel(9.5 + dr, y + dy), 0.0));
            }
        }
    }
}

TEST_CASE("precision p and 2p agree, 2p no wider") {
    for (double r : {0.0, 9.5, 25.0}) {
        for (double y : {0.2, 1.5, 40.0}) {
            const Ball a = kbessel_ir(r, y, 128);
            const Ball b = kbessel_ir(r, y, 256);
            CHECK(a.overlaps(b));
            CHECK(b.rad() <= a.rad());
        }
    }
}

TEST_CASE("decay point") {
    const double y0 = kbessel_decay_point(9.5, 1e-30);
    CHECK(kbessel_envelope(y0) < 1e-30);
    CHECK(kbessel_envelope(y0 * 0.99) >= 1e-30);
    CHECK(kbessel_decay_point(9.5, 1e300) < 1e-100);
    CHECK(kbessel_decay_point(9.5, 1e-60) > y0);
    CHECK_THROWS_AS(kbessel_decay_point(9.5, 0.0), DomainError);
    // The envelope really bounds the function past the decay point.
    CHECK(kbessel_ir(9.5, y0).abs_upper() < 1e-30);
}
