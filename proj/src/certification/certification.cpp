#include "maass/certification.hpp"

#include "maass/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

namespace maass {

namespace {

constexpr double kDefectHeightFactor = 0.65;
constexpr const char* kToolVersion = "maass-0.1.0";

double up(double v) { return std::nextafter(v, std::numeric_limits<double>::infinity()); }

std::string format_exact(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string format_signs(const SignVector& signs) {
    if (signs.empty()) {
        return "none";
    }
    std::string out;
    for (const auto& [p, s] : signs) {
        if (!out.empty()) {
            out += ',';
        }
        out += std::to_string(p) + (s > 0 ? ":+1" : ":-1");
    }
    return out;
}

std::vector<std::pair<long, long>> usable_pairs(const std::vector<std::pair<long, long>>& pairs, long M) {
    std::vector<std::pair<long, long>> out;
    for (const auto& pr : pairs) {
        if (pr.first * pr.second <= M) {
            out.push_back(pr);
        }
    }
    return out;
}

} // namespace

double tail_bound(double /*r*/, double Y, long M) { return truncation_envelope(Y, M); }

std::string to_string(EnclosureStatus s) { return s == EnclosureStatus::Verified ? "verified" : "heuristic"; }

EnclosedCoefficients enclose_solution(const LinearSystem& sys, const CoefficientVector& approx) {
    BallMatrix A;
    BallVector b;
    sys.normalized(A, b, true);
    if (approx.size() != static_cast<long>(A.rows()) + 1) {
        throw DomainError("approximate solution does not match the system size");
    }
    const mpfr_prec_t p = A.precision();
    RealVector mid;
    for (long n = 2; n <= approx.size(); ++n) {
        mid.push_back(approx(n).mid());
    }
    const Enclosure enc = enclose_linear(A, b, mid);

    EnclosedCoefficients out;
    out.contraction = enc.contraction;
    out.coefficients.a.push_back(Ball::exact(1L, p));
    if (enc.verified) {
        out.status = EnclosureStatus::Verified;
        for (const Ball& v : enc.x) {
            out.coefficients.a.push_back(v);
        }
        return out;
    }

    // Heuristic radii from a re-solve with doubled sample count.
    out.status = EnclosureStatus::Heuristic;
    SolverContext doubled = sys.context;
    doubled.Q *= 2;
    CoefficientVector other;
    try {
        other = solve_normalized(assemble_system(sys.r, sys.Y, doubled));
    } catch (const Error&) {
        other.a.clear();
    }
    for (long n = 2; n <= approx.size(); ++n) {
        const Real& c = approx(n).mid();
        double radius = std::max(1.0, c.abs_upper());
        if (other.size() == approx.size()) {
            const Ball delta = Ball(c, 0.0) - Ball(other(n).mid(), 0.0);
            radius = up(delta.abs_upper() + std::ldexp(c.abs_upper(), 8 - static_cast<int>(p)));
        }
        out.coefficients.a.emplace_back(c, radius);
    }
    return out;
}

double defect_height(long level) { return kDefectHeightFactor * exit_height(level); }

double automorphy_defect(const SpectralCandidate& cand, long N, int samples, double height) {
    if (samples < 1) {
        throw DomainError("automorphy defect needs at least one sample");
    }
    if (height == 0.0) {
        height = defect_height(N);
    }
    if (!(height > 0.0)) {
        throw DomainError("defect height must be positive");
    }
    // The defect is a property of the approximate function itself: the
    // expansion at the midpoints of r and of the coefficients.
    const mpfr_prec_t p = cand.context.precision;
    KBesselEvaluator k(Ball(cand.r.mid(), 0.0), p);
    CoefficientVector coeffs;
    for (const Ball& a : cand.coefficients.a) {
        coeffs.a.emplace_back(a.mid(), 0.0);
    }
    const Ball Y = Ball::exact(height, p);
    double worst = 0.0;
    for (int i = 0; i < samples; ++i) {
        const Ball x = Ball::exact(2L * i + 1 - samples, p) / (2L * samples);
        const UpperHalfPoint z(x, Y);
        const PullbackResult pb = pullback_gamma0n(z, N);
        if (pb.map == GroupElement::identity()) {
            continue;
        }
        const long eps = al_sign_for(cand.context.al_signs, pb.al_divisor);
        const Ball direct = evaluate_expansion(coeffs, cand.context.parity, k, z, false);
        const Ball pulled = evaluate_expansion(coeffs, cand.context.parity, k, pb.evaluation_point(), false);
        worst = std::max(worst, (direct - pulled * eps).abs_upper());
    }
    return worst;
}

double hecke_residual(const CoefficientVector& coeffs, const std::vector<std::pair<long, long>>& pairs) {
    double worst = 0.0;
    for (const auto& [m, n] : pairs) {
        if (m < 1 || n < 1 || std::gcd(m, n) != 1) {
            throw DomainError("Hecke pair (" + std::to_string(m) + ", " + std::to_string(n) + ") is not coprime");
        }
        if (m * n > coeffs.size()) {
            throw DomainError("Hecke pair index " + std::to_string(m * n) + " exceeds the coefficient count");
        }
        worst = std::max(worst, (coeffs(m) * coeffs(n) - coeffs(m * n)).abs_upper());
    }
    return worst;
}

Sign fricke_sign(const std::map<long, Sign>& al_signs, long N) {
    int product = 1;
    bool undetermined = false;
    for (long p : prime_divisors(N)) {
        const auto it = al_signs.find(p);
        if (it == al_signs.end()) {
            throw DomainError("no Atkin-Lehner sign for prime " + std::to_string(p));
        }
        if (it->second == Sign::Undetermined) {
            undetermined = true;
        } else if (it->second == Sign::Negative) {
            product = -product;
        }
    }
    if (undetermined) {
        return Sign::Undetermined;
    }
    return product > 0 ? Sign::Positive : Sign::Negative;
}

std::map<long, Sign> determine_al_signs(const CoefficientVector& coeffs, long N) {
    std::map<long, Sign> out;
    for (long p : prime_divisors(N)) {
        if (p > coeffs.size()) {
            out[p] = Sign::Undetermined;
            continue;
        }
        switch (coeffs(p).sign()) {
        case Sign::Positive:
            out[p] = Sign::Negative;
            break;
        case Sign::Negative:
            out[p] = Sign::Positive;
            break;
        case Sign::Undetermined:
            out[p] = Sign::Undetermined;
            break;
        }
    }
    return out;
}

CertifiedForm certify(const SpectralCandidate& cand, const SolverContext& base, const CertifyOptions& options) {
    SolverContext ctx = base;
    ctx.parity = cand.context.parity;
    ctx.al_signs = cand.context.al_signs;
    ctx.validate();
    if (cand.coefficients.size() != ctx.M) {
        throw DomainError("candidate coefficient count does not match the context");
    }

    // Both heights give valid enclosures; the lower one pins the high
    // coefficients much tighter, so keep the intersection.
    EnclosedCoefficients enc = enclose_solution(assemble_system(cand.r, ctx.Y1, ctx), cand.coefficients);
    if (enc.status == EnclosureStatus::Verified) {
        const EnclosedCoefficients low = enclose_solution(assemble_system(cand.r, ctx.Y2, ctx), cand.coefficients);
        if (low.status == EnclosureStatus::Verified) {
            for (long n = 2; n <= ctx.M; ++n) {
                enc.coefficients.a[n - 1] = enc.coefficients(n).intersection(low.coefficients(n));
            }
            enc.contraction = std::max(enc.contraction, low.contraction);
        }
    }

    CertifiedForm out;
    out.candidate = cand;
    out.candidate.context = ctx;
    out.candidate.coefficients = enc.coefficients;

    MaassFormRecord& rec = out.record;
    rec.level = ctx.level;
    rec.r = DecimalPair::from_ball(cand.r);
    rec.lambda = DecimalPair::from_ball(lambda_of(cand.r));
    rec.parity = ctx.parity;
    rec.al_signs = determine_al_signs(enc.coefficients, ctx.level);
    rec.fricke = fricke_sign(rec.al_signs, ctx.level);
    const long count = std::min(options.coefficient_count, enc.coefficients.size());
    for (long n = 1; n <= count; ++n) {
        rec.coefficients.push_back(DecimalPair::from_ball(enc.coefficients(n)));
    }
    const double height = defect_height(ctx.level);
    rec.provenance["Y1"] = format_exact(ctx.Y1);
    rec.provenance["Y2"] = format_exact(ctx.Y2);
    rec.provenance["M"] = std::to_string(ctx.M);
    rec.provenance["Q"] = std::to_string(ctx.Q);
    rec.provenance["precision"] = std::to_string(ctx.precision);
    rec.provenance["eps"] = format_exact(ctx.eps);
    rec.provenance["solver_signs"] = format_signs(ctx.al_signs);
    rec.provenance["defect_samples"] = std::to_string(options.defect_samples);
    rec.provenance["defect_height"] = format_exact(height);
    rec.provenance["tool"] = kToolVersion;

    Diagnostics& d = out.diagnostics;
    d.enclosure_status = enc.status;
    d.contraction = enc.contraction;
    // The stored centers are rounded to 25 digits; report the worse of the
    // computed function and the one the record describes, so that verify
    // reproduces a value no larger than the stored one.
    const double computed = automorphy_defect(out.candidate, ctx.level, options.defect_samples, height);
    const double stored =
        automorphy_defect(candidate_from_record(rec, ctx.precision), ctx.level, options.defect_samples, height);
    d.automorphy_defect = std::max(computed, stored);
    d.defect_threshold = up(options.defect_factor * tail_bound(cand.r.mid_double(), height, ctx.M));
    d.hecke_residual = hecke_residual(enc.coefficients, usable_pairs(options.hecke_pairs, ctx.M));
    d.hecke_threshold = options.hecke_threshold;

    rec.diagnostics["automorphy_defect"] = format_error(d.automorphy_defect);
    rec.diagnostics["defect_threshold"] = format_error(d.defect_threshold);
    rec.diagnostics["hecke_residual"] = format_error(d.hecke_residual);
    rec.diagnostics["hecke_threshold"] = format_error(d.hecke_threshold);
    rec.diagnostics["enclosure"] = to_string(d.enclosure_status);
    rec.diagnostics["contraction"] = format_error(d.contraction);
    rec.validate();
    return out;
}

Diagnostics recheck(const MaassFormRecord& rec, mpfr_prec_t prec) {
    rec.validate();
    const SpectralCandidate cand = candidate_from_record(rec, prec);
    const auto get = [&](const std::map<std::string, std::string>& m, const std::string& key) -> const std::string& {
        const auto it = m.find(key);
        if (it == m.end()) {
            throw FormatError("record has no '" + key + "' entry", 0);
        }
        return it->second;
    };
    Diagnostics d;
    const int samples = std::stoi(get(rec.provenance, "defect_samples"));
    const auto height = rec.provenance.find("defect_height");
    d.automorphy_defect = automorphy_defect(cand, rec.level, samples,
                                            height == rec.provenance.end() ? 0.0 : std::stod(height->second));
    d.defect_threshold = parse_error(get(rec.diagnostics, "defect_threshold"));
    d.hecke_residual = hecke_residual(cand.coefficients, usable_pairs(CertifyOptions{}.hecke_pairs, cand.coefficients.size()));
    d.hecke_threshold = parse_error(get(rec.diagnostics, "hecke_threshold"));
    d.enclosure_status = get(rec.diagnostics, "enclosure") == "verified" ? EnclosureStatus::Verified
                                                                         : EnclosureStatus::Heuristic;
    d.contraction = parse_error(get(rec.diagnostics, "contraction"));
    return d;
}

} // namespace maass
