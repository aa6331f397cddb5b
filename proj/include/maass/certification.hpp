#pragma once

#include "maass/dataset.hpp"
#include "maass/hejhal.hpp"

#include <map>
#include <utility>
#include <vector>

namespace maass {

/// Truncation error of the expansion cut at M, uniform over y >= Y and r.
double tail_bound(double r, double Y, long M);

enum class EnclosureStatus { Verified, Heuristic };

std::string to_string(EnclosureStatus s);

struct EnclosedCoefficients {
    CoefficientVector coefficients;
    EnclosureStatus status = EnclosureStatus::Heuristic;
    /// ||I - R A|| bound of the contraction check (>= 1 when it failed).
    double contraction = 0.0;
};

/// Encloses the coefficients solving the normalized system, with the
/// right-hand side widened by the system's truncation error. When the
/// contraction check fails, radii are |approx - a'| from a re-solve with
/// doubled Q, and the status is heuristic.
EnclosedCoefficients enclose_solution(const LinearSystem& sys, const CoefficientVector& approx);

/// Default height where the automorphy defect is sampled: 0.65 times the
/// exit height. Low enough that the threshold sits above the resolution of
/// 25-digit stored centers.
double defect_height(long level);

/// max over sample points of an upper bound for |f(z) - eps_Q f(w)|, where
/// w is the evaluation point of the pullback of z and f the truncated
/// expansion at the midpoints of r and the coefficients. Samples are
/// x_k = (k + 1/2)/samples - 1/2 at height `height` (0 means defect_height).
/// Points whose pullback is the identity contribute 0.
double automorphy_defect(const SpectralCandidate& cand, long N, int samples, double height = 0.0);

/// max over pairs of an upper bound for |a(m) a(n) - a(mn)|.
/// Throws DomainError if mn exceeds the coefficient count or gcd(m, n) != 1.
double hecke_residual(const CoefficientVector& coeffs, const std::vector<std::pair<long, long>>& pairs);

/// Product of the Atkin-Lehner signs; undetermined if any factor is.
/// Throws DomainError if a prime divisor of N is missing.
Sign fricke_sign(const std::map<long, Sign>& al_signs, long N);

/// Sign at each prime p | N from a(p) = -eps_p / sqrt(p); undetermined when
/// the ball of a(p) contains zero or p exceeds the coefficient count.
std::map<long, Sign> determine_al_signs(const CoefficientVector& coeffs, long N);

struct CertifyOptions {
    int defect_samples = 16;
    /// Defect threshold = defect_factor * tail_bound at the defect height.
    double defect_factor = 10.0;
    double hecke_threshold = 1e-6;
    std::vector<std::pair<long, long>> hecke_pairs = {{2, 3}, {2, 5}, {3, 5}};
    long coefficient_count = MaassFormRecord::kDefaultCoefficientCount;
};

struct Diagnostics {
    double automorphy_defect = 0.0;
    double defect_threshold = 0.0;
    double hecke_residual = 0.0;
    double hecke_threshold = 0.0;
    EnclosureStatus enclosure_status = EnclosureStatus::Heuristic;
    double contraction = 0.0;

    bool defect_ok() const { return automorphy_defect <= defect_threshold; }
    bool hecke_ok() const { return hecke_residual <= hecke_threshold; }
};

struct CertifiedForm {
    MaassFormRecord record;
    Diagnostics diagnostics;
    /// The candidate with certified coefficient balls.
    SpectralCandidate candidate;
};

/// Encloses the coefficients at Y1 with the r-ball, evaluates diagnostics and
/// builds the exportable record.
CertifiedForm certify(const SpectralCandidate& cand, const SolverContext& ctx, const CertifyOptions& options = {});

/// Recomputes the defect and Hecke residual of a stored record and compares
/// them with the thresholds stored in it.
Diagnostics recheck(const MaassFormRecord& rec, mpfr_prec_t prec);

} // namespace maass
