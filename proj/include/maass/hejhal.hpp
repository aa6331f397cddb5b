#pragma once

#include "maass/ball.hpp"
#include "maass/kbessel.hpp"
#include "maass/linalg.hpp"
#include "maass/modular.hpp"

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace maass {

enum class Parity { Even, Odd };

std::string to_string(Parity p);
/// Accepts "even" or "odd"; throws DomainError otherwise.
Parity parse_parity(const std::string& text);

/// Atkin-Lehner eigenvalues by prime divisor of the level, each +1 or -1.
using SignVector = std::map<long, int>;

/// Product of the signs of the primes dividing Q.
int al_sign_for(const SignVector& signs, long Q);

/// All 2^omega(N) sign vectors for a squarefree level, in a fixed order.
std::vector<SignVector> all_sign_vectors(long N);

/// Coefficient bound |a(n)| <= C sqrt(n) assumed by every tail estimate.
inline constexpr double kCoefficientBound = 20.0;

/// Upper bound for |sum_{|n| > M} a(n) sqrt(y) K_{ir}(2 pi |n| y) e(nx)|,
/// uniform in r and in y >= Y: C e^{-2 pi (M+1) Y} / (1 - e^{-2 pi Y}).
double truncation_envelope(double Y, long M);

/// Smallest M >= 1 with truncation_envelope(Y, M) < eps.
/// Throws DomainError for eps <= 0 or Y <= 0, PrecisionError if M would
/// exceed 100000.
long truncation_M(double r, double Y, double eps);

/// Hejhal parameters for one level, parity and sign vector.
struct SolverContext {
    long level = 1;
    double Y1 = 0.0;
    double Y2 = 0.0;
    long Q = 0;
    long M = 0;
    Parity parity = Parity::Even;
    SignVector al_signs;
    mpfr_prec_t precision = kDefaultPrecision;
    double eps = 1e-40;

    /// Defaults: M = truncation_M at the exit height, Q = M + 20,
    /// Y1 = 0.8 and Y2 = 0.7 times the exit height.
    static SolverContext defaults(long level, Parity parity = Parity::Even, SignVector signs = {},
                                  mpfr_prec_t precision = kDefaultPrecision, double eps = 1e-40);

    /// Throws DomainError when a parameter is out of range: non-squarefree
    /// level, heights not in (0, exit height), Y1 = Y2, Q <= M, M < 2, or a
    /// sign vector that does not cover exactly the primes of the level.
    void validate() const;

    /// Bound on the error of each equation at height Y: truncation at the
    /// exit height plus aliasing of frequencies >= 2Q - M.
    double equation_error(double Y) const;
};

/// x_j = (j - 1/2)/(2Q) for j = 1 - Q .. Q.
std::vector<double> horocycle_points(long Q);

/// Coefficients a(1..M); entry 0 holds a(1) = 1.
struct CoefficientVector {
    std::vector<Ball> a;

    long size() const { return static_cast<long>(a.size()); }
    /// a(n) for 1 <= n <= size(); throws DomainError otherwise.
    const Ball& operator()(long n) const;
};

/// Hejhal system V a = xi at one height, folded by parity.
///
/// V(n, k) = (2/Q) sum_{j=1..Q} eps_j sqrt(v_j) K_{ir}(2 pi k v_j) cs(2 pi k u_j) cs(2 pi n x_j)
///           - [n = k] sqrt(Y) K_{ir}(2 pi n Y)
/// with cs = cos for even and sin for odd forms, (u_j, v_j) the evaluation
/// point of the pullback of x_j + iY and |xi_n| <= truncation_error.
struct LinearSystem {
    BallMatrix V;
    double truncation_error = 0.0;
    Ball r;
    double Y = 0.0;
    SolverContext context;

    /// Rows and columns 2..M, with column 1 moved to the right-hand side.
    /// The right-hand side is widened by truncation_error when `widen`.
    void normalized(BallMatrix& A, BallVector& b, bool widen) const;
};

/// Assembles the system at height Y for every r in the ball. Uses `rules`
/// when given, otherwise builds quadrature rules at the context precision.
LinearSystem assemble_system(const Ball& r, double Y, const SolverContext& ctx,
                             std::shared_ptr<const QuadratureRules> rules = nullptr);
LinearSystem assemble_system(double r, const SolverContext& ctx);

/// Midpoint solve of the normalized system; the returned balls are exact.
CoefficientVector solve_normalized(const LinearSystem& sys);

struct FunctionalValue {
    Ball g;
    CoefficientVector at_Y1;
    CoefficientVector at_Y2;
};

/// g(r) = sum_{n in {2,3,5}} (a^{Y1}(n) - a^{Y2}(n)). The radius of g is an
/// estimate of the truncation noise, not a rigorous bound.
FunctionalValue eigenvalue_functional(double r, const SolverContext& ctx,
                                      std::shared_ptr<const QuadratureRules> rules = nullptr);

struct Bracket {
    double lo = 0.0;
    double hi = 0.0;
    double g_lo = 0.0;
    double g_hi = 0.0;
    Parity parity = Parity::Even;
    SignVector al_signs;
};

struct ScanOptions {
    /// Parities and sign vectors to try; empty means the context's own.
    std::vector<Parity> parities;
    std::vector<SignVector> sign_vectors;
    int threads = 1;
    /// Called with (done, total) after each grid evaluation, from any thread.
    std::function<void(long, long)> progress;
};

/// Evaluates g on the grid r_lo, r_lo + step, ..., r_hi and returns the
/// intervals where its sign changes, ordered by (parity, signs, r).
/// An empty range gives an empty list. Results do not depend on `threads`.
std::vector<Bracket> scan(double r_lo, double r_hi, double step, const SolverContext& ctx,
                          const ScanOptions& options = {});

struct SpectralCandidate {
    Ball r;
    Ball lambda;
    CoefficientVector coefficients;
    SolverContext context;
    /// Final bracket and the functional's noise estimate there.
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
    double functional_noise = 0.0;
    int iterations = 0;
};

/// Brent's method on g within the bracket, stopping at width < tol.
/// Throws SpuriousBracketError if the endpoints do not differ in sign or
/// |g| grows while the bracket shrinks (a pole rather than a zero).
SpectralCandidate refine(const Bracket& bracket, const SolverContext& ctx, double tol,
                         std::shared_ptr<const QuadratureRules> rules = nullptr);

/// 1/4 + r^2 in ball arithmetic.
Ball lambda_of(const Ball& r);

/// Truncated expansion at z, real-valued: 2 sum a(n) sqrt(y) K cs(2 pi n x),
/// widened by truncation_envelope(y, M). Odd forms are divided by i.
Ball evaluate_form(const SpectralCandidate& cand, const UpperHalfPoint& z);

/// Same expansion with a caller-owned evaluator, for repeated use. Without
/// `widen_tail` the result encloses the truncated sum only.
Ball evaluate_expansion(const CoefficientVector& coeffs, Parity parity, KBesselEvaluator& k, const UpperHalfPoint& z,
                        bool widen_tail = true);

} // namespace maass
