#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "maass/certification.hpp"
#include "maass/error.hpp"

#include <cmath>
#include <random>

using namespace maass;

namespace {

constexpr mpfr_prec_t P = kDefaultPrecision;

const SpectralCandidate& first_odd() {
    static const SpectralCandidate cand = [] {
        Bracket br;
        br.lo = 9.5;
        br.hi = 9.55;
        br.parity = Parity::Odd;
        return refine(br, SolverContext::defaults(1, Parity::Odd), 1e-8);
    }();
    return cand;
}

const CertifiedForm& first_odd_certified() {
    static const CertifiedForm form = certify(first_odd(), SolverContext::defaults(1, Parity::Odd));
    return form;
}

CoefficientVector from_doubles(const std::vector<double>& v, double rad = 0.0) {
    CoefficientVector c;
    for (double x : v) {
        c.a.push_back(Ball::exact(x, P).widened(rad));
    }
    return c;
}

// a(n) = prod a(p)^k over n = prod p^k: completely multiplicative.
CoefficientVector multiplicative(long count) {
    const std::map<long, double> ap{{2, -0.7}, {3, 0.4}, {5, 1.1}, {7, -0.2}, {11, 0.9}, {13, 0.3}};
    std::vector<double> v;
    for (long n = 1; n <= count; ++n) {
        double a = 1.0;
        long m = n;
        for (const auto& [p, x] : ap) {
            while (m % p == 0) {
                a *= x;
                m /= p;
            }
        }
        v.push_back(a);
    }
    return from_doubles(v);
}

} // namespace

TEST_CASE("tail_bound is monotone") {
    for (long M = 2; M < 40; ++M) {
        CHECK(tail_bound(9.5, 0.5, M + 1) <= tail_bound(9.5, 0.5, M));
    }
    for (double Y = 0.1; Y < 1.5; Y += 0.1) {
        CHECK(tail_bound(9.5, Y + 0.1, 10) <= tail_bound(9.5, Y, 10));
    }
    for (double eps : {1e-10, 1e-20, 1e-40}) {
        CHECK(tail_bound(9.5, 0.4, truncation_M(9.5, 0.4, eps)) < eps);
    }
}

TEST_CASE("hecke_residual") {
    const CoefficientVector mult = multiplicative(30);
    const std::vector<std::pair<long, long>> pairs{{2, 3}, {2, 5}, {3, 5}, {2, 7}, {5, 6}};
    CHECK(hecke_residual(mult, pairs) < 1e-15);

    CoefficientVector bumped = mult;
    bumped.a[5] = bumped.a[5] + Ball::exact(0.5, P);
    CHECK(hecke_residual(bumped, {{2, 3}}) >= 0.5 - 1e-15);

    CHECK_THROWS_AS(hecke_residual(mult, {{5, 7}}), DomainError);
    CHECK_THROWS_AS(hecke_residual(mult, {{2, 4}}), DomainError);
}

TEST_CASE("fricke_sign") {
    CHECK(fricke_sign({}, 1) == Sign::Positive);
    CHECK(fricke_sign({{2, Sign::Negative}, {3, Sign::Negative}}, 6) == Sign::Positive);
    CHECK(fricke_sign({{2, Sign::Negative}, {3, Sign::Positive}}, 6) == Sign::Negative);
    CHECK(fricke_sign({{2, Sign::Undetermined}, {3, Sign::Negative}}, 6) == Sign::Undetermined);
    CHECK_THROWS_AS(fricke_sign({{2, Sign::Negative}}, 6), DomainError);
}

TEST_CASE("Atkin-Lehner signs from a(p)") {
    // a(p) = -eps_p / sqrt(p)
    const CoefficientVector c = from_doubles({1.0, -1 / std::sqrt(2.0), 1 / std::sqrt(3.0), 0.2, 0.1, 0.0});
    const std::map<long, Sign> s = determine_al_signs(c, 6);
    CHECK(s.at(2) == Sign::Positive);
    CHECK(s.at(3) == Sign::Negative);
    CHECK(determine_al_signs(c, 7).at(7) == Sign::Undetermined);
    CHECK(determine_al_signs(c, 1).empty());
}

TEST_CASE("fricke sign is undetermined iff some witness ball contains zero") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> w(0.0, 0.3);
    for (int i = 0; i < 500; ++i) {
        CoefficientVector c;
        c.a.push_back(Ball::exact(1.0, P));
        for (int n = 2; n <= 6; ++n) {
            c.a.push_back(Ball::exact(u(rng), P).widened(w(rng)));
        }
        const bool straddles = c(2).contains_zero() || c(3).contains_zero() || c(5).contains_zero();
        CHECK((fricke_sign(determine_al_signs(c, 30), 30) == Sign::Undetermined) == straddles);
    }
}

TEST_CASE("enclose_solution on a 2x2 integer system") {
    SolverContext ctx = SolverContext::defaults(1, Parity::Even);
    ctx.M = 3;
    ctx.Q = 8;
    LinearSystem sys = assemble_system(Ball::exact(9.5, P), ctx.Y1, ctx);
    sys.truncation_error = 0.0;
    // 3 a2 + 2 a3 = 7, a2 - 4 a3 = -7 with the a(1) column moved across.
    const double m[3][3] = {{1, 0, 0}, {-7, 3, 2}, {7, 1, -4}};
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            sys.V(i, j) = Ball::exact(m[i][j], P);
        }
    }
    const CoefficientVector approx = solve_normalized(sys);
    const EnclosedCoefficients e = enclose_solution(sys, approx);
    CHECK(e.status == EnclosureStatus::Verified);
    CHECK(e.coefficients(1).contains(1.0));
    CHECK(e.coefficients(2).contains(1.0));
    CHECK(e.coefficients(3).contains(2.0));

    // A singular midpoint matrix falls back to the heuristic path.
    sys.V(2, 1) = Ball::exact(1.5, P);
    sys.V(2, 2) = Ball::exact(1.0, P);
    const EnclosedCoefficients h = enclose_solution(sys, approx);
    CHECK(h.status == EnclosureStatus::Heuristic);
    CHECK(h.contraction >= 1.0);
    CHECK(h.coefficients.size() == 3);
    CHECK_THROWS_AS(enclose_solution(sys, from_doubles({1, 2})), DomainError);
}

TEST_CASE("automorphy defect is zero where every pairing is the identity") {
    // Above height 1 every sample lies in the fundamental domain already.
    CHECK(automorphy_defect(first_odd(), 1, 16, 1.1) == 0.0);
}

TEST_CASE("certify the first odd level-1 form") {
    const CertifiedForm& f = first_odd_certified();
    const Diagnostics& d = f.diagnostics;
    CHECK(d.enclosure_status == EnclosureStatus::Verified);
    CHECK(d.contraction < 1.0);
    CHECK(d.hecke_ok());
    CHECK(d.hecke_residual < 1e-6);
    CHECK(d.defect_ok());
    MESSAGE("defect " << d.automorphy_defect << " threshold " << d.defect_threshold << " hecke " << d.hecke_residual
                      << " contraction " << d.contraction);

    const Ball& r = f.candidate.r;
    CHECK(DecimalPair::from_ball(lambda_of(Ball(r.mid(), 0.0))).to_ball(P).overlaps(f.record.lambda.to_ball(P)));
    CHECK(f.record.lambda.to_ball(P).contains(lambda_of(Ball(r.mid(), 0.0))));
    CHECK(f.record.parity == Parity::Odd);
    CHECK(f.record.fricke == Sign::Positive);
    CHECK(f.record.coefficients.size() == static_cast<std::size_t>(f.candidate.context.M));

    // Certified balls contain the midpoint solution.
    for (long n = 1; n <= first_odd().coefficients.size(); ++n) {
        CHECK(f.candidate.coefficients(n).contains(first_odd().coefficients(n).mid()));
    }

    const Diagnostics again = recheck(f.record, P);
    CHECK(again.defect_ok());
    CHECK(again.hecke_ok());
    CHECK(again.automorphy_defect <= d.automorphy_defect);
}

TEST_CASE("perturbing a(2) raises the defect by more than 10x") {
    const double base = automorphy_defect(first_odd(), 1, 16);
    SpectralCandidate bad = first_odd();
    bad.coefficients.a[1] = bad.coefficients.a[1] + Ball::exact(0.1, P);
    const double perturbed = automorphy_defect(bad, 1, 16);
    MESSAGE("converged " << base << ", perturbed " << perturbed);
    CHECK(perturbed >= 10 * base);
}

TEST_CASE("a wide r ball forces the heuristic path and still yields a record") {
    // Even 32-bit precision still contracts; r +- 0.1 does not.
    SpectralCandidate wide = first_odd();
    wide.r = wide.r.widened(0.1);
    const CertifiedForm f = certify(wide, SolverContext::defaults(1, Parity::Odd));
    CHECK(f.diagnostics.enclosure_status == EnclosureStatus::Heuristic);
    CHECK(f.record.diagnostics.at("enclosure") == "heuristic");
    CHECK_NOTHROW(f.record.validate());
}
