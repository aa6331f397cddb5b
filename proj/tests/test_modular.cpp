#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"

#include "maass/error.hpp"
#include "maass/modular.hpp"

#include <cmath>
#include <random>

using namespace maass;

namespace {

constexpr mpfr_prec_t P = kDefaultPrecision;

UpperHalfPoint point(double x, double y) { return {Ball::exact(x, P), Ball::exact(y, P)}; }

bool same_point(const UpperHalfPoint& a, const UpperHalfPoint& b) { return a.x.overlaps(b.x) && a.y.overlaps(b.y); }

bool in_fundamental_domain(const UpperHalfPoint& z) {
    const Ball norm = sqr(z.x) + sqr(z.y);
    return z.x.abs_lower() <= 0.5 && norm.upper_double() >= 1.0;
}

GroupElement random_sl2z(std::mt19937_64& rng) {
    std::uniform_int_distribution<long> e(-4, 4);
    GroupElement g = GroupElement::identity();
    for (int i = 0; i < 4; ++i) {
        g = g * GroupElement::T(e(rng)) * GroupElement::S();
    }
    return g;
}

} // namespace

TEST_CASE("moebius examples") {
    const UpperHalfPoint z = point(0.25, 0.5);
    CHECK(same_point(moebius(GroupElement::identity(), z), z));
    CHECK(same_point(moebius(GroupElement::S(), point(0.0, 1.0)), point(0.0, 1.0)));
    const UpperHalfPoint t = moebius(GroupElement::T(), z);
    CHECK(t.x.contains(1.25));
    CHECK(t.y.contains(0.5));
}

TEST_CASE("moebius composition and imaginary-part identity") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ux(-2.0, 2.0), uy(0.05, 3.0);
    for (int i = 0; i < 1000; ++i) {
        const GroupElement g = random_sl2z(rng);
        const GroupElement h = random_sl2z(rng);
        const UpperHalfPoint z = point(ux(rng), uy(rng));
        const UpperHalfPoint direct = moebius(g * h, z);
        const UpperHalfPoint nested = moebius(g, moebius(h, z));
        CHECK(same_point(direct, nested));
        // Im(h z) |c z + d|^2 = Im z
        const Ball cx = z.x * h.c + h.d;
        const Ball den = sqr(cx) + sqr(z.y * h.c);
        CHECK((moebius(h, z).y * den).overlaps(z.y));
    }
}

TEST_CASE("pullback_sl2z examples") {
    const PullbackResult a = pullback_sl2z(point(0.1, 2.0));
    CHECK(a.map == GroupElement::identity());
    CHECK(same_point(a.point, point(0.1, 2.0)));

    const PullbackResult b = pullback_sl2z(point(2.3, 0.8));
    const oracle::Reduction ref = oracle::reduce_brute_force(2.3, 0.8);
    CHECK(std::fabs(b.point.x.mid_double() - ref.x) < 1e-12);
    CHECK(std::fabs(b.point.y.mid_double() - ref.y) < 1e-12);

    const PullbackResult c = pullback_sl2z(point(0.4, 0.01));
    CHECK(c.point.y.lower_double() >= 0.01);
}

TEST_CASE("pullback_sl2z matches exhaustive search on 1000 points") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> ux(-3.0, 3.0), ly(std::log(0.005), std::log(3.0));
    int outside = 0, mismatched = 0, roundtrip = 0;
    for (int i = 0; i < 1000; ++i) {
        const double x = ux(rng);
        const double y = std::exp(ly(rng));
        const UpperHalfPoint z = point(x, y);
        const PullbackResult res = pullback_sl2z(z);
        outside += !in_fundamental_domain(res.point);
        roundtrip += !same_point(moebius(res.map.adjugate(), res.point), z);
        const oracle::Reduction ref = oracle::reduce_brute_force(x, y);
        const double px = res.point.x.mid_double();
        const double py = res.point.y.mid_double();
        // Boundary points are identified with their mirror image.
        const bool match = std::fabs(py - ref.y) < 1e-9 &&
                           (std::fabs(px - ref.x) < 1e-9 || std::fabs(std::fabs(px) - std::fabs(ref.x)) < 1e-9);
        if (!match) {
            ++mismatched;
            MESSAGE("z = " << x << " + " << y << "i: got " << px << " + " << py << "i, oracle " << ref.x << " + "
                           << ref.y << "i");
        }
    }
    CHECK(outside == 0);
    CHECK(mismatched == 0);
    CHECK(roundtrip == 0);
}

TEST_CASE("pullback of a reduced point is the identity") {
    for (const auto& [x, y] : std::vector<std::pair<double, double>>{{0.0, 1.5}, {0.49, 0.9}, {-0.3, 1.0}}) {
        CHECK(pullback_sl2z(point(x, y)).map == GroupElement::identity());
    }
}

TEST_CASE("is_gamma0n") {
    CHECK(is_gamma0n(GroupElement::identity(), 7));
    CHECK_FALSE(is_gamma0n({1, 0, 1, 1}, 2));
    CHECK(is_gamma0n({1, 0, 6, 1}, 3));
    CHECK_THROWS_AS(is_gamma0n({2, 0, 0, 1}, 3), DomainError);
}

TEST_CASE("cusp_classes") {
    CHECK(cusp_classes(1) == std::vector<long>{1});
    CHECK(cusp_classes(6) == std::vector<long>{1, 2, 3, 6});
    CHECK_THROWS_AS(cusp_classes(4), DomainError);
}

TEST_CASE("al_matrix") {
    CHECK(al_matrix(1, 6) == GroupElement::identity());
    CHECK(al_matrix(7, 7) == GroupElement{0, -1, 7, 0});
    for (long N : {2L, 6L, 10L, 30L, 105L}) {
        for (long Q : cusp_classes(N)) {
            const GroupElement W = al_matrix(Q, N);
            CHECK(W.det() == Q);
            CHECK(W.a % Q == 0);
            CHECK(W.d % Q == 0);
            CHECK(W.c % N == 0);
            CHECK(W.b >= (Q == N ? -1 : 0));
        }
    }
    CHECK_THROWS_AS(al_matrix(4, 6), DomainError);
}

TEST_CASE("pullback_gamma0n at level 1 uses the cusp at infinity") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ux(-1.0, 1.0), uy(0.02, 1.0);
    for (int i = 0; i < 50; ++i) {
        CHECK(pullback_gamma0n(point(ux(rng), uy(rng)), 1).al_divisor == 1);
    }
}

TEST_CASE("pullback_gamma0n at level 5") {
    // tau = (1 0; 5 1) lies in Gamma_0(5): the image of a reduced point.
    const UpperHalfPoint w = moebius({1, 0, 5, 1}, point(0.1, 1.3));
    CHECK(pullback_gamma0n(w, 5).al_divisor == 1);

    const UpperHalfPoint z = point(0.2, 0.05);
    const PullbackResult res = pullback_gamma0n(z, 5);
    CHECK(is_gamma0n(res.gamma0, 5));
    CHECK(same_point(moebius(res.gamma0 * res.sigma, res.point), z));
    CHECK(res.evaluation_point().y.upper_double() >= exit_height(5) * (1 - 1e-9));
}

TEST_CASE("pullback_gamma0n decomposition round trip") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> ux(-0.5, 0.5), ly(std::log(0.001), std::log(0.5));
    for (long N : {2L, 3L, 5L, 6L, 7L, 10L, 15L, 30L}) {
        std::vector<int> seen(static_cast<std::size_t>(N) + 1, 0);
        for (int i = 0; i < 200; ++i) {
            const UpperHalfPoint z = point(ux(rng), std::exp(ly(rng)));
            const PullbackResult res = pullback_gamma0n(z, N);
            CHECK(N % res.al_divisor == 0);
            CHECK(is_gamma0n(res.gamma0, N));
            CHECK(same_point(moebius(res.gamma0 * res.sigma, res.point), z));
            CHECK(same_point(moebius(res.sigma, res.point), moebius(al_matrix(res.al_divisor, N),
                                                                    res.evaluation_point())));
            CHECK(res.evaluation_point().y.upper_double() >= exit_height(N) * (1 - 1e-9));
            seen[static_cast<std::size_t>(res.al_divisor)] = 1;
        }
        // Every Atkin-Lehner class shows up; the horoballs at cusps of large
        // denominator are too small to hit reliably for composite levels.
        if (N <= 7) {
            for (long Q : cusp_classes(N)) {
                INFO("N = " << N << ", Q = " << Q);
                CHECK(seen[static_cast<std::size_t>(Q)] == 1);
            }
        }
    }
}

TEST_CASE("exit height") {
    CHECK(exit_height(1) == doctest::Approx(std::sqrt(3.0) / 2));
    CHECK(exit_height(6) == doctest::Approx(std::sqrt(3.0) / 12));
    CHECK_THROWS_AS(exit_height(12), DomainError);
}
