#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"

#include "maass/error.hpp"
#include "maass/hejhal.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

using namespace maass;
using oracle::Float100;

namespace {

constexpr mpfr_prec_t P = kDefaultPrecision;

// Published spectral parameter of the first odd level-1 form.
const char* const kOddR1 = "9.53369526135355755434423523592877032";

double envelope_oracle(double Y, long M) {
    const Float100 tpY = 2 * boost::math::constants::pi<Float100>() * Y;
    const Float100 v = 20 * exp(-tpY * (M + 1)) / (1 - exp(-tpY));
    return v.convert_to<double>();
}

UpperHalfPoint point(double x, double y) { return {Ball::exact(x, P), Ball::exact(y, P)}; }

SolverContext small_context(Parity parity, long Q, long M) {
    SolverContext ctx = SolverContext::defaults(1, parity);
    ctx.Q = Q;
    ctx.M = M;
    return ctx;
}

} // namespace

TEST_CASE("horocycle_points") {
    CHECK(horocycle_points(1) == std::vector<double>{-0.25, 0.25});
    CHECK(horocycle_points(2) == std::vector<double>{-0.375, -0.125, 0.125, 0.375});
    CHECK_THROWS_AS(horocycle_points(0), DomainError);
    const long Q = 7;
    const std::vector<double> x = horocycle_points(Q);
    for (long n = 1; n < 2 * Q; ++n) {
        std::complex<double> s = 0.0;
        for (double xj : x) {
            s += std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(n) * xj);
        }
        CHECK(std::abs(s) < 1e-12);
    }
}

TEST_CASE("truncation_M") {
    CHECK(truncation_M(9.5, 0.5, 1e300) == 1);
    CHECK_THROWS_AS(truncation_M(9.5, 0.5, 0.0), DomainError);
    CHECK_THROWS_AS(truncation_M(9.5, -1.0, 1e-10), DomainError);
    CHECK_THROWS_AS(truncation_M(9.5, 1e-9, 1e-300), PrecisionError);

    long previous = truncation_M(9.5, 0.05, 1e-30);
    for (double Y = 0.1; Y < 2.0; Y += 0.05) {
        const long M = truncation_M(9.5, Y, 1e-30);
        CHECK(M <= previous);
        previous = M;
    }

    // Linear scan of the closed-form envelope in 100-digit arithmetic.
    long expected = 1;
    while (envelope_oracle(0.2, expected) >= 1e-20) {
        ++expected;
    }
    CHECK(truncation_M(9.5337, 0.2, 1e-20) == expected);
    CHECK(truncation_envelope(0.2, expected) < 1e-20);
    CHECK(truncation_envelope(0.2, expected - 1) >= 1e-20);
}

TEST_CASE("truncation envelope bounds the worst-case tail") {
    // sum_{|n| > M} C sqrt(n) sqrt(y) |K_{ir}(2 pi n y)| with the trapezoid oracle.
    for (double r : {0.0, 9.5, 20.0}) {
        for (double y : {0.3, 0.7}) {
            const long M = 6;
            Float100 tail = 0;
            for (long n = M + 1; n < M + 80; ++n) {
                const double arg = 2 * std::numbers::pi * static_cast<double>(n) * y;
                if (arg > 290) {
                    break;
                }
                tail += 2 * kCoefficientBound * sqrt(Float100(n) * y) * abs(oracle::kbessel(r, arg));
            }
            INFO("r = " << r << ", y = " << y);
            CHECK(tail.convert_to<double>() <= truncation_envelope(y, M));
        }
    }
}

TEST_CASE("context validation") {
    SolverContext ctx = SolverContext::defaults(1);
    CHECK_NOTHROW(ctx.validate());
    CHECK(ctx.Q == ctx.M + 20);
    CHECK(ctx.Y1 == doctest::Approx(0.8 * std::sqrt(3.0) / 2));

    SolverContext high = ctx;
    high.Y1 = 1.0;
    CHECK_THROWS_AS(high.validate(), DomainError);
    CHECK_THROWS_AS(assemble_system(Ball::exact(9.5, P), 1.0, ctx), DomainError);

    SolverContext same = ctx;
    same.Y2 = same.Y1;
    CHECK_THROWS_AS(eigenvalue_functional(9.5, same), DomainError);

    SolverContext few = ctx;
    few.Q = few.M;
    CHECK_THROWS_AS(few.validate(), DomainError);

    CHECK_THROWS_AS(SolverContext::defaults(4).validate(), DomainError);
    SolverContext six = SolverContext::defaults(6);
    CHECK_NOTHROW(six.validate());
    six.al_signs.erase(3);
    CHECK_THROWS_AS(six.validate(), DomainError);
    CHECK(all_sign_vectors(6).size() == 4);
    CHECK(al_sign_for({{2, -1}, {3, -1}}, 6) == 1);
    CHECK(al_sign_for({{2, -1}, {3, -1}}, 3) == -1);
}

TEST_CASE("assembly matches an unfolded termwise sum (N = 1, Q = 4, M = 3, r = 9.5)") {
    for (Parity parity : {Parity::Even, Parity::Odd}) {
        const SolverContext ctx = small_context(parity, 4, 3);
        const double Y = ctx.Y1;
        const LinearSystem sys = assemble_system(Ball::exact(9.5, P), Y, ctx);
        REQUIRE(sys.V.rows() == 3);
        REQUIRE(sys.V.cols() == 3);
        const double s = parity == Parity::Even ? 1.0 : -1.0;
        const double tp = 2 * std::numbers::pi;
        for (long n = 1; n <= 3; ++n) {
            for (long k = 1; k <= 3; ++k) {
                // (1/2Q) sum_j phi_k(z_j*) e(-n x_j), phi_k = sqrt(y) K(2 pi k y) (e(kx) + s e(-kx)).
                std::complex<double> acc = 0.0;
                for (double xj : horocycle_points(ctx.Q)) {
                    const oracle::Reduction w = oracle::reduce_brute_force(xj, Y);
                    const double kb = oracle::kbessel(9.5, tp * static_cast<double>(k) * w.y).convert_to<double>();
                    const std::complex<double> phi =
                        std::sqrt(w.y) * kb * (std::polar(1.0, tp * k * w.x) + s * std::polar(1.0, -tp * k * w.x));
                    acc += phi * std::polar(1.0, -tp * static_cast<double>(n) * xj);
                }
                acc /= 2.0 * static_cast<double>(ctx.Q);
                // Mirror symmetry of the samples makes the sum real for both
                // parities: cos cos for even, (2i sin)(-i sin) for odd.
                CHECK(std::fabs(acc.imag()) < 1e-14);
                double expected = acc.real();
                if (n == k) {
                    expected -= std::sqrt(Y) * oracle::kbessel(9.5, tp * static_cast<double>(n) * Y).convert_to<double>();
                }
                INFO(to_string(parity) << " n = " << n << ", k = " << k);
                CHECK(std::fabs(sys.V(n - 1, k - 1).mid_double() - expected) < 1e-13);
                CHECK(sys.V(n - 1, k - 1).rad() < 1e-25);
            }
        }
    }
}

TEST_CASE("normalized solve") {
    SolverContext ctx = small_context(Parity::Even, 6, 4);
    LinearSystem sys = assemble_system(Ball::exact(9.5, P), ctx.Y1, ctx);
    // Submatrix on 2..M is the identity and column 1 is -v: the solution is v.
    const double v[] = {0.5, -1.25, 3.0};
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
            sys.V(i, j) = Ball::exact(i == j ? 1.0 : 0.0, P);
        }
    }
    for (std::size_t i = 1; i < 4; ++i) {
        sys.V(i, 0) = Ball::exact(-v[i - 1], P);
    }
    const CoefficientVector a = solve_normalized(sys);
    REQUIRE(a.size() == 4);
    CHECK(a(1).contains(1.0));
    CHECK(a(1).is_exact());
    for (long n = 2; n <= 4; ++n) {
        CHECK(a(n).contains(v[n - 2]));
    }
    CHECK_THROWS_AS(a(5), DomainError);

    for (std::size_t j = 0; j < 4; ++j) {
        sys.V(2, j) = sys.V(1, j);
    }
    CHECK_THROWS_AS(solve_normalized(sys), SingularSystemError);
}

TEST_CASE("parity flip keeps the system shape") {
    const LinearSystem even = assemble_system(9.5, small_context(Parity::Even, 10, 6));
    const LinearSystem odd = assemble_system(9.5, small_context(Parity::Odd, 10, 6));
    CHECK(even.V.rows() == odd.V.rows());
    CHECK(even.V.cols() == odd.V.cols());
    CHECK_FALSE(even.V(1, 2).overlaps(odd.V(1, 2)));
}

TEST_CASE("known coefficients satisfy a smaller system within its truncation error") {
    const Ball r = Ball::parse(kOddR1, 0.0, P);
    const SolverContext big = SolverContext::defaults(1, Parity::Odd);
    const CoefficientVector a = solve_normalized(assemble_system(r, big.Y2, big));
    const SolverContext ctx = small_context(Parity::Odd, 28, 8);
    for (double Y : {ctx.Y1, ctx.Y2}) {
        const LinearSystem sys = assemble_system(r, Y, ctx);
        for (std::size_t n = 0; n < 8; ++n) {
            Ball row = Ball::exact(0.0, P);
            for (std::size_t k = 0; k < 8; ++k) {
                row += sys.V(n, k) * a(static_cast<long>(k) + 1);
            }
            INFO("Y = " << Y << ", n = " << n + 1 << ", residual " << row.abs_upper() << ", declared "
                        << sys.truncation_error);
            CHECK(row.abs_lower() <= sys.truncation_error);
            CHECK(row.abs_upper() <= 2 * sys.truncation_error);
        }
    }
}

TEST_CASE("functional at precision p and 2p on a 50-point grid") {
    // p = 64 keeps the run short on a single core.
    SolverContext lo = SolverContext::defaults(1, Parity::Even, {}, 64, 1e-20);
    SolverContext hi = lo;
    hi.precision = 128;
    const auto rules_lo = std::make_shared<const QuadratureRules>(lo.precision);
    const auto rules_hi = std::make_shared<const QuadratureRules>(hi.precision);
    int disagreements = 0;
    for (int i = 0; i < 50; ++i) {
        const double r = 9.0 + i / 49.0;
        const Ball a = eigenvalue_functional(r, lo, rules_lo).g;
        const Ball b = eigenvalue_functional(r, hi, rules_hi).g;
        if (!a.overlaps(b)) {
            ++disagreements;
            MESSAGE("r = " << r << ": " << a.mid_double() << " vs " << b.mid_double());
        }
    }
    CHECK(disagreements == 0);
}

TEST_CASE("scan") {
    const SolverContext ctx = SolverContext::defaults(1, Parity::Odd);
    CHECK(scan(10.0, 9.0, 0.05, ctx).empty());
    CHECK(scan(9.0, 9.0, 0.05, ctx).empty());
    CHECK_THROWS_AS(scan(9.0, 10.0, 0.0, ctx), DomainError);

    ScanOptions one;
    ScanOptions four;
    four.threads = 4;
    const std::vector<Bracket> a = scan(9.3, 9.7, 0.05, ctx, one);
    const std::vector<Bracket> b = scan(9.3, 9.7, 0.05, ctx, four);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].lo == b[i].lo);
        CHECK(a[i].hi == b[i].hi);
        CHECK(a[i].g_lo == b[i].g_lo);
        CHECK(a[i].g_hi == b[i].g_hi);
    }
    REQUIRE(a.size() == 1);
    CHECK(a[0].lo < 9.5337);
    CHECK(a[0].hi > 9.5337);
    CHECK(a[0].g_lo * a[0].g_hi < 0);
    for (std::size_t i = 1; i < a.size(); ++i) {
        CHECK(a[i - 1].hi <= a[i].lo);
    }
}

TEST_CASE("refine the first odd form") {
    const SolverContext ctx = SolverContext::defaults(1, Parity::Odd);
    Bracket br;
    br.lo = 9.5;
    br.hi = 9.55;
    br.parity = Parity::Odd;
    const SpectralCandidate c = refine(br, ctx, 1e-8);
    CHECK(c.r.contains(Real::parse(kOddR1, 256)));
    CHECK(std::fabs(c.r.mid_double() - 9.5336952613535575) < 1e-12);
    CHECK(c.lambda.contains(lambda_of(Ball(c.r.mid(), 0.0))));
    CHECK(c.coefficients(1).contains(1.0));
    // a(2) a(3) = a(6) for a Hecke eigenform.
    CHECK(std::fabs((c.coefficients(2) * c.coefficients(3) - c.coefficients(6)).mid_double()) < 1e-8);
}

TEST_CASE("a bracket without a sign change is spurious") {
    const SolverContext ctx = SolverContext::defaults(1, Parity::Odd);
    Bracket br;
    br.lo = 9.6;
    br.hi = 9.7;
    br.parity = Parity::Odd;
    CHECK_THROWS_AS(refine(br, ctx, 1e-8), SpuriousBracketError);
}

TEST_CASE("lambda ball contains 1/4 + t^2 over the r ball") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        const Ball r = Ball::exact(10.0 * std::fabs(u(rng)), P).widened(std::pow(10.0, -5 - 20 * std::fabs(u(rng))));
        const Ball lam = lambda_of(r);
        for (double t : {-1.0, 0.0, 1.0, u(rng)}) {
            Real s(512);
            mpfr_set_d(s.get(), r.rad() * t, MPFR_RNDN);
            mpfr_add(s.get(), s.get(), r.mid().get(), MPFR_RNDN);
            mpfr_sqr(s.get(), s.get(), MPFR_RNDN);
            mpfr_add_d(s.get(), s.get(), 0.25, MPFR_RNDN);
            CHECK(lam.contains(s));
        }
    }
}

TEST_CASE("evaluate_form") {
    SpectralCandidate zero;
    zero.r = Ball::exact(9.5, P);
    zero.context = SolverContext::defaults(1, Parity::Even);
    zero.coefficients.a.assign(static_cast<std::size_t>(zero.context.M), Ball::exact(0.0, P));
    const Ball z0 = evaluate_form(zero, point(0.1, 0.9));
    CHECK(z0.contains(0.0));
    CHECK(z0.rad() == doctest::Approx(truncation_envelope(0.9, zero.context.M)).epsilon(1e-6));
    CHECK_THROWS_AS(evaluate_form(zero, point(0.1, 0.0)), DomainError);

    SpectralCandidate odd = zero;
    odd.context.parity = Parity::Odd;
    odd.coefficients.a.assign(static_cast<std::size_t>(odd.context.M), Ball::exact(0.3, P));
    odd.coefficients.a[0] = Ball::exact(1.0, P);
    CHECK(evaluate_form(odd, point(0.0, 0.5)).contains(0.0));
    const Ball f = evaluate_form(odd, point(0.25, 0.5));
    const Ball g = evaluate_form(odd, point(1.25, 0.5));
    const Ball mirror = evaluate_form(odd, point(-0.25, 0.5));
    CHECK(f.overlaps(g));
    CHECK(f.rad() == doctest::Approx(g.rad()).epsilon(1e-6));
    CHECK(f.overlaps(-mirror));
    CHECK_FALSE(f.contains(0.0));
}
