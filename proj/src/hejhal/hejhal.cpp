#include "maass/hejhal.hpp"

#include "maass/error.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <thread>

namespace maass {

namespace {

constexpr long kMaxTruncation = 100000;
constexpr std::array<long, 3> kTestSet = {2, 3, 5};
constexpr int kMaxRefineIterations = 200;
constexpr double kSpuriousShrink = 0.01;
constexpr double kSpuriousRatio = 0.1;
constexpr int kPolishSteps = 8;
// Evaluation points sit at or above the exit height up to the tie tolerance
// of the fundamental-domain reduction.
constexpr double kExitSlack = 1.0 - 1e-9;

double up(double v) { return std::nextafter(v * (1.0 + 0x1p-40), std::numeric_limits<double>::infinity()); }

Ball cs(Parity parity, const Ball& x) { return parity == Parity::Even ? cos(x) : sin(x); }

Ball two_pi(mpfr_prec_t p) { return ldexp(Ball::pi(p), 1); }

LinearSystem assemble_with(KBesselEvaluator& K, double Y, const SolverContext& ctx) {
    ctx.validate();
    const double h = exit_height(ctx.level);
    if (!(Y > 0.0 && Y < h)) {
        throw DomainError("height Y = " + std::to_string(Y) + " is not below the exit height " + std::to_string(h));
    }
    const mpfr_prec_t p = ctx.precision;
    const auto M = static_cast<std::size_t>(ctx.M);
    const Ball tp = two_pi(p);
    const Ball Yb = Ball::exact(Y, p);

    LinearSystem sys{BallMatrix(M, M, p), ctx.equation_error(Y), K.order(), Y, ctx};
    std::vector<Ball> term(M, Ball(p));
    std::vector<Ball> row_factor(M, Ball(p));
    for (long j = 1; j <= ctx.Q; ++j) {
        // x_j = (2j - 1) / (4Q)
        const Ball x = Ball::exact(2 * j - 1, p) / (4 * ctx.Q);
        const PullbackResult pb = pullback_gamma0n(UpperHalfPoint(x, Yb), ctx.level);
        const UpperHalfPoint w = pb.evaluation_point();
        const long eps = al_sign_for(ctx.al_signs, pb.al_divisor);
        const Ball sqrt_v = sqrt(w.y) * eps;
        const Ball tpy = tp * w.y;
        const Ball tpx = tp * w.x;
        const Ball tpxj = tp * x;
        for (std::size_t k = 0; k < M; ++k) {
            const long kk = static_cast<long>(k) + 1;
            term[k] = sqrt_v * K.value(tpy * kk) * cs(ctx.parity, tpx * kk);
            row_factor[k] = cs(ctx.parity, tpxj * kk);
        }
        for (std::size_t n = 0; n < M; ++n) {
            for (std::size_t k = 0; k < M; ++k) {
                sys.V(n, k) += row_factor[n] * term[k];
            }
        }
    }
    const Ball sqrt_Y = sqrt(Yb);
    for (std::size_t n = 0; n < M; ++n) {
        for (std::size_t k = 0; k < M; ++k) {
            sys.V(n, k) = ldexp(sys.V(n, k), 1) / ctx.Q;
        }
        sys.V(n, n) -= sqrt_Y * K.value(tp * Yb * static_cast<long>(n + 1));
    }
    return sys;
}

struct SolvedHeight {
    CoefficientVector coeffs;
    // noise estimate for a(n), n in the test set
    std::array<double, kTestSet.size()> noise{};
};

SolvedHeight solve_height(const LinearSystem& sys) {
    BallMatrix A;
    BallVector b;
    sys.normalized(A, b, false);
    const mpfr_prec_t p = A.precision();
    const RealVector x = midpoint_solve(A, b);
    SolvedHeight out;
    out.coeffs.a.reserve(x.size() + 1);
    out.coeffs.a.push_back(Ball::exact(1L, p));
    for (const Real& v : x) {
        out.coeffs.a.emplace_back(v, 0.0);
    }
    // Per-equation budget: truncation plus a rounding allowance, pushed
    // through an approximate inverse.
    const std::size_t n = A.rows();
    std::vector<double> budget(n, 0.0);
    const double rounding = std::ldexp(1.0, 8 - static_cast<int>(p));
    for (std::size_t i = 0; i < n; ++i) {
        double scale = b[i].abs_upper();
        for (std::size_t j = 0; j < n; ++j) {
            scale += A(i, j).abs_upper() * x[j].abs_upper();
        }
        budget[i] = sys.truncation_error + rounding * scale;
    }
    const BallMatrix R = approximate_inverse(A);
    for (std::size_t t = 0; t < kTestSet.size(); ++t) {
        const auto row = static_cast<std::size_t>(kTestSet[t] - 2);
        if (row >= n) {
            break;
        }
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            s += R(row, k).abs_upper() * budget[k];
        }
        out.noise[t] = up(s);
    }
    return out;
}

FunctionalValue functional_with(KBesselEvaluator& K, const SolverContext& ctx) {
    if (ctx.Y1 == ctx.Y2) {
        throw DomainError("eigenvalue functional needs two distinct heights");
    }
    if (ctx.M < kTestSet.back()) {
        throw DomainError("eigenvalue functional needs M >= 5");
    }
    const SolvedHeight s1 = solve_height(assemble_with(K, ctx.Y1, ctx));
    const SolvedHeight s2 = solve_height(assemble_with(K, ctx.Y2, ctx));
    const mpfr_prec_t p = ctx.precision;
    Ball g(p);
    double noise = 0.0;
    for (std::size_t t = 0; t < kTestSet.size(); ++t) {
        g += s1.coeffs(kTestSet[t]) - s2.coeffs(kTestSet[t]);
        noise = up(noise + s1.noise[t] + s2.noise[t]);
    }
    return {g.widened(noise), s1.coeffs, s2.coeffs};
}

std::shared_ptr<const QuadratureRules> rules_for(std::shared_ptr<const QuadratureRules> rules, mpfr_prec_t p) {
    if (rules && rules->precision() == p) {
        return rules;
    }
    return std::make_shared<const QuadratureRules>(p);
}

// max_n |a^{Y1}(n) - a^{Y2}(n)| over the test set.
double delta_norm(const FunctionalValue& v) {
    double out = 0.0;
    for (long n : kTestSet) {
        out = std::max(out, std::fabs((v.at_Y1(n) - v.at_Y2(n)).mid_double()));
    }
    return out;
}

struct Sample {
    double g = 0.0;
    double delta = 0.0;
};

Sample functional_sample(double r, const SolverContext& ctx, const std::shared_ptr<const QuadratureRules>& rules) {
    KBesselEvaluator K(Ball::exact(r, ctx.precision), rules);
    const FunctionalValue v = functional_with(K, ctx);
    return {v.g.mid_double(), delta_norm(v)};
}

} // namespace

std::string to_string(Parity p) { return p == Parity::Even ? "even" : "odd"; }

Parity parse_parity(const std::string& text) {
    if (text == "even") {
        return Parity::Even;
    }
    if (text == "odd") {
        return Parity::Odd;
    }
    throw DomainError("parity must be 'even' or 'odd', got '" + text + "'");
}

int al_sign_for(const SignVector& signs, long Q) {
    int out = 1;
    for (long p : prime_divisors(Q)) {
        const auto it = signs.find(p);
        if (it == signs.end()) {
            throw DomainError("no Atkin-Lehner sign for prime " + std::to_string(p));
        }
        out *= it->second;
    }
    return out;
}

std::vector<SignVector> all_sign_vectors(long N) {
    if (!is_squarefree(N)) {
        throw DomainError("level must be squarefree, got " + std::to_string(N));
    }
    const std::vector<long> primes = prime_divisors(N);
    std::vector<SignVector> out;
    const unsigned long count = 1UL << primes.size();
    for (unsigned long mask = 0; mask < count; ++mask) {
        SignVector v;
        for (std::size_t i = 0; i < primes.size(); ++i) {
            v[primes[i]] = (mask >> i) & 1UL ? -1 : 1;
        }
        out.push_back(std::move(v));
    }
    return out;
}

double truncation_envelope(double Y, long M) {
    if (!(Y > 0.0)) {
        return std::numeric_limits<double>::infinity();
    }
    const double tpY = 2.0 * std::numbers::pi * Y;
    const double log_bound =
        std::log(kCoefficientBound) - tpY * static_cast<double>(M + 1) - std::log(-std::expm1(-tpY));
    return std::max(up(std::exp(log_bound)), std::numeric_limits<double>::denorm_min());
}

long truncation_M(double /*r*/, double Y, double eps) {
    if (!(eps > 0.0)) {
        throw DomainError("truncation target eps must be positive");
    }
    if (!(Y > 0.0)) {
        throw DomainError("truncation height must be positive");
    }
    // The envelope is uniform in r.
    for (long M = 1; M <= kMaxTruncation; ++M) {
        if (truncation_envelope(Y, M) < eps) {
            return M;
        }
    }
    throw PrecisionError("truncation target unreachable");
}

SolverContext SolverContext::defaults(long level, Parity parity, SignVector signs, mpfr_prec_t precision, double eps) {
    SolverContext ctx;
    const double h = exit_height(level);
    ctx.level = level;
    ctx.Y1 = 0.8 * h;
    ctx.Y2 = 0.7 * h;
    ctx.M = std::max(truncation_M(0.0, h * kExitSlack, eps), 6L);
    ctx.Q = ctx.M + 20;
    ctx.parity = parity;
    if (signs.empty()) {
        for (long p : prime_divisors(level)) {
            signs[p] = 1;
        }
    }
    ctx.al_signs = std::move(signs);
    ctx.precision = precision;
    ctx.eps = eps;
    return ctx;
}

void SolverContext::validate() const {
    const double h = exit_height(level);
    if (!(Y1 > 0.0 && Y1 < h && Y2 > 0.0 && Y2 < h)) {
        throw DomainError("heights must lie strictly between 0 and the exit height " + std::to_string(h));
    }
    if (M < 2) {
        throw DomainError("truncation M must be at least 2");
    }
    if (Q <= M) {
        throw DomainError("sample count Q must exceed M");
    }
    if (precision < 32) {
        throw DomainError("precision must be at least 32 bits");
    }
    const std::vector<long> primes = prime_divisors(level);
    if (al_signs.size() != primes.size()) {
        throw DomainError("sign vector must give one sign per prime divisor of the level");
    }
    for (long p : primes) {
        const auto it = al_signs.find(p);
        if (it == al_signs.end() || (it->second != 1 && it->second != -1)) {
            throw DomainError("missing or invalid Atkin-Lehner sign for prime " + std::to_string(p));
        }
    }
}

double SolverContext::equation_error(double Y) const {
    const double h = exit_height(level) * kExitSlack;
    return up(truncation_envelope(h, M) + truncation_envelope(Y, 2 * Q - M - 1));
}

std::vector<double> horocycle_points(long Q) {
    if (Q < 1) {
        throw DomainError("horocycle sample count must be positive");
    }
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(2 * Q));
    for (long j = 1 - Q; j <= Q; ++j) {
        out.push_back((static_cast<double>(j) - 0.5) / (2.0 * static_cast<double>(Q)));
    }
    return out;
}

const Ball& CoefficientVector::operator()(long n) const {
    if (n < 1 || n > size()) {
        throw DomainError("coefficient index " + std::to_string(n) + " out of range 1.." + std::to_string(size()));
    }
    return a[static_cast<std::size_t>(n - 1)];
}

void LinearSystem::normalized(BallMatrix& A, BallVector& b, bool widen) const {
    const std::size_t m = V.rows() - 1;
    A = BallMatrix(m, m, V.precision());
    b.assign(m, Ball(V.precision()));
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            A(i, j) = V(i + 1, j + 1);
        }
        b[i] = -V(i + 1, 0);
        if (widen) {
            b[i] = b[i].widened(truncation_error);
        }
    }
}

LinearSystem assemble_system(const Ball& r, double Y, const SolverContext& ctx,
                             std::shared_ptr<const QuadratureRules> rules) {
    KBesselEvaluator K(r, rules_for(std::move(rules), ctx.precision));
    return assemble_with(K, Y, ctx);
}

LinearSystem assemble_system(double r, const SolverContext& ctx) {
    return assemble_system(Ball::exact(r, ctx.precision), ctx.Y1, ctx);
}

CoefficientVector solve_normalized(const LinearSystem& sys) { return solve_height(sys).coeffs; }

FunctionalValue eigenvalue_functional(double r, const SolverContext& ctx,
                                      std::shared_ptr<const QuadratureRules> rules) {
    KBesselEvaluator K(Ball::exact(r, ctx.precision), rules_for(std::move(rules), ctx.precision));
    return functional_with(K, ctx);
}

std::vector<Bracket> scan(double r_lo, double r_hi, double step, const SolverContext& ctx, const ScanOptions& options) {
    if (!(step > 0.0)) {
        throw DomainError("scan step must be positive");
    }
    ctx.validate();
    if (!(r_lo < r_hi)) {
        return {};
    }
    std::vector<Parity> parities = options.parities;
    if (parities.empty()) {
        parities.push_back(ctx.parity);
    }
    std::vector<SignVector> signs = options.sign_vectors;
    if (signs.empty()) {
        signs.push_back(ctx.al_signs);
    }
    std::vector<double> grid;
    const auto steps = static_cast<long>(std::ceil((r_hi - r_lo) / step - 1e-9));
    for (long i = 0; i <= steps; ++i) {
        grid.push_back(std::min(r_lo + static_cast<double>(i) * step, r_hi));
    }

    struct Combo {
        SolverContext ctx;
    };
    std::vector<Combo> combos;
    for (Parity par : parities) {
        for (const SignVector& s : signs) {
            SolverContext c = ctx;
            c.parity = par;
            c.al_signs = s;
            c.validate();
            combos.push_back({c});
        }
    }

    const std::size_t total = combos.size() * grid.size();
    std::vector<double> values(total, 0.0);
    std::vector<char> valid(total, 0);
    auto rules = std::make_shared<const QuadratureRules>(ctx.precision);
    std::atomic<std::size_t> next{0};
    std::atomic<long> done{0};
    auto worker = [&] {
        for (std::size_t task = next++; task < total; task = next++) {
            const SolverContext& c = combos[task / grid.size()].ctx;
            try {
                values[task] = functional_sample(grid[task % grid.size()], c, rules).g;
                valid[task] = std::isfinite(values[task]) ? 1 : 0;
            } catch (const SingularSystemError&) {
                valid[task] = 0;
            }
            const long d = ++done;
            if (options.progress) {
                options.progress(d, static_cast<long>(total));
            }
        }
    };
    const int threads = std::max(1, options.threads);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
        for (std::thread& t : pool) {
            t.join();
        }
    }

    std::vector<Bracket> out;
    for (std::size_t c = 0; c < combos.size(); ++c) {
        for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
            const std::size_t a = c * grid.size() + i;
            if (!valid[a] || !valid[a + 1]) {
                continue;
            }
            if ((values[a] < 0.0) != (values[a + 1] < 0.0)) {
                out.push_back({grid[i], grid[i + 1], values[a], values[a + 1], combos[c].ctx.parity, combos[c].ctx.al_signs});
            }
        }
    }
    return out;
}

SpectralCandidate refine(const Bracket& bracket, const SolverContext& base, double tol,
                         std::shared_ptr<const QuadratureRules> rules) {
    if (!(tol > 0.0)) {
        throw DomainError("refine tolerance must be positive");
    }
    if (!(bracket.lo < bracket.hi)) {
        throw DomainError("bracket must satisfy lo < hi");
    }
    SolverContext ctx = base;
    ctx.parity = bracket.parity;
    ctx.al_signs = bracket.al_signs;
    ctx.validate();
    rules = rules_for(std::move(rules), ctx.precision);

    // Brent's method, after the classic zbrent formulation.
    double a = bracket.lo;
    double b = bracket.hi;
    const Sample sa = functional_sample(a, ctx, rules);
    const Sample sb = functional_sample(b, ctx, rules);
    double fa = sa.g;
    double fb = sb.g;
    if ((fa < 0.0) == (fb < 0.0) && fa != 0.0 && fb != 0.0) {
        throw SpuriousBracketError("no sign change across the bracket");
    }
    const double initial = std::max(std::fabs(fa), std::fabs(fb));
    double c = b;
    double fc = fb;
    double d = 0.0;
    double e = 0.0;
    int iter = 0;
    for (; iter < kMaxRefineIterations; ++iter) {
        if ((fb > 0.0 && fc > 0.0) || (fb < 0.0 && fc < 0.0)) {
            c = a;
            fc = fa;
            e = d = b - a;
        }
        if (std::fabs(fc) < std::fabs(fb)) {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        const double tol1 = 2.0 * std::numeric_limits<double>::epsilon() * std::fabs(b) + 0.5 * tol;
        const double xm = 0.5 * (c - b);
        if (std::fabs(xm) <= tol1 || fb == 0.0) {
            break;
        }
        if (std::fabs(e) >= tol1 && std::fabs(fa) > std::fabs(fb)) {
            double p;
            double q;
            const double s = fb / fa;
            if (a == c) {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                const double qq = fa / fc;
                const double rr = fb / fc;
                p = s * (2.0 * xm * qq * (qq - rr) - (b - a) * (rr - 1.0));
                q = (qq - 1.0) * (rr - 1.0) * (s - 1.0);
            }
            if (p > 0.0) {
                q = -q;
            }
            p = std::fabs(p);
            const double min1 = 3.0 * xm * q - std::fabs(tol1 * q);
            const double min2 = std::fabs(e * q);
            if (2.0 * p < std::min(min1, min2)) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += std::fabs(d) > tol1 ? d : std::copysign(tol1, xm);
        fb = functional_sample(b, ctx, rules).g;
    }
    if (std::fabs(fb) > initial) {
        throw SpuriousBracketError("functional grows under refinement; sign change is a pole");
    }
    const double lo = std::min(b, c);
    const double hi = std::max(b, c);
    const double center = 0.5 * (lo + hi);

    KBesselEvaluator K(Ball::exact(center, ctx.precision), rules);
    const FunctionalValue v = functional_with(K, ctx);
    // Convert the functional's noise into an r uncertainty through the
    // secant slope of g across the final bracket.
    double slope = (fc - fb) / (c - b);
    if (!std::isfinite(slope) || slope == 0.0) {
        slope = (fa - fb) / (a - b);
    }
    double r_rad = up(0.5 * (hi - lo));
    if (std::isfinite(slope) && slope != 0.0) {
        r_rad = up(r_rad + v.g.rad() / std::fabs(slope));
    }
    if (std::fabs(v.g.mid_double()) > initial) {
        throw SpuriousBracketError("functional at the refined point exceeds its bracket values");
    }
    // At a genuine eigenvalue every coefficient difference vanishes, not just
    // their sum. Only decidable once the bracket has shrunk substantially.
    if (hi - lo < kSpuriousShrink * (bracket.hi - bracket.lo) &&
        delta_norm(v) > kSpuriousRatio * std::min(sa.delta, sb.delta)) {
        throw SpuriousBracketError("coefficient differences do not vanish at the zero of the functional");
    }

    // Secant polish at full precision, starting from the Brent iterate and
    // the bracket center. Keeps the Brent result if a step leaves the bracket.
    const mpfr_prec_t p = ctx.precision;
    const double noise_to_r = std::isfinite(slope) && slope != 0.0 ? v.g.rad() / std::fabs(slope) : 0.0;
    Real x_prev(b, p);
    Real g_prev(fb, p);
    Real x_cur(center, p);
    FunctionalValue best = v;
    Real step(p), diff(p), next(p);
    bool polished = false;
    for (int k = 0; k < kPolishSteps; ++k) {
        const Real& g_cur = best.g.mid();
        mpfr_sub(diff.get(), g_cur.get(), g_prev.get(), MPFR_RNDN);
        if (diff.is_zero() || g_cur.is_zero()) {
            break;
        }
        mpfr_sub(step.get(), x_cur.get(), x_prev.get(), MPFR_RNDN);
        mpfr_mul(step.get(), step.get(), g_cur.get(), MPFR_RNDN);
        mpfr_div(step.get(), step.get(), diff.get(), MPFR_RNDN);
        mpfr_sub(next.get(), x_cur.get(), step.get(), MPFR_RNDN);
        if (!(step.abs_upper() < hi - lo) || next.to_double() < lo || next.to_double() > hi) {
            break;
        }
        KBesselEvaluator Kn(Ball(next, 0.0), rules);
        FunctionalValue vn = functional_with(Kn, ctx);
        x_prev = x_cur;
        g_prev = best.g.mid();
        x_cur = next;
        best = std::move(vn);
        polished = true;
        const double floor = std::ldexp(std::fabs(x_cur.to_double()), 8 - static_cast<int>(p));
        if (step.abs_upper() <= floor || best.g.abs_upper() <= 2.0 * best.g.rad()) {
            break;
        }
    }
    double final_rad = r_rad;
    double final_lo = lo;
    double final_hi = hi;
    if (polished) {
        mpfr_sub(diff.get(), x_cur.get(), x_prev.get(), MPFR_RNDN);
        final_rad = up(diff.abs_upper() + noise_to_r);
        final_lo = std::min(x_cur.to_double(MPFR_RNDD), x_prev.to_double(MPFR_RNDD));
        final_hi = std::max(x_cur.to_double(MPFR_RNDU), x_prev.to_double(MPFR_RNDU));
    }

    SpectralCandidate cand{Ball(x_cur, final_rad), Ball(p), best.at_Y1, ctx, final_lo, final_hi, best.g.rad(), iter};
    cand.lambda = lambda_of(cand.r);
    return cand;
}

Ball lambda_of(const Ball& r) { return sqr(r) + ldexp(Ball::exact(1L, r.precision()), -2); }

Ball evaluate_expansion(const CoefficientVector& coeffs, Parity parity, KBesselEvaluator& k, const UpperHalfPoint& z,
                        bool widen_tail) {
    const mpfr_prec_t p = k.precision();
    const Ball tp = two_pi(p);
    const Ball tpy = tp * z.y;
    const Ball tpx = tp * z.x;
    Ball sum(p);
    for (long n = 1; n <= coeffs.size(); ++n) {
        const Ball& an = coeffs(n);
        if (an.is_exact() && an.mid().is_zero()) {
            continue;
        }
        sum += an * k.value(tpy * n) * cs(parity, tpx * n);
    }
    sum = ldexp(sum * sqrt(z.y), 1);
    if (!widen_tail) {
        return sum;
    }
    return sum.widened(truncation_envelope(z.y.lower_double(), coeffs.size()));
}

Ball evaluate_form(const SpectralCandidate& cand, const UpperHalfPoint& z) {
    KBesselEvaluator k(cand.r, cand.context.precision);
    return evaluate_expansion(cand.coefficients, cand.context.parity, k, z);
}

} // namespace maass
