#pragma once

#include "maass/ball.hpp"
#include "maass/hejhal.hpp"

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace maass {

/// A (center, error) pair as stored on disk: decimal center with 25
/// significant digits and a 3-digit error rounded upward.
struct DecimalPair {
    std::string center = "0";
    std::string error = "0";

    /// Encloses b; the error also covers the rounding of the center.
    static DecimalPair from_ball(const Ball& b);
    /// Ball containing every value the pair denotes.
    Ball to_ball(mpfr_prec_t prec) const;

    friend bool operator==(const DecimalPair&, const DecimalPair&) = default;
};

/// Nonnegative value as 3 significant digits rounded upward, e.g. `1.24e-31`;
/// zero is written `0`.
std::string format_error(double v);
/// Parses an error field; throws DomainError on malformed or negative input.
/// The result is rounded upward.
double parse_error(const std::string& text);

/// Exportable Maass form. Weight is always 0 and the character trivial.
struct MaassFormRecord {
    static constexpr int kFormatVersion = 1;
    static constexpr long kDefaultCoefficientCount = 1000;

    long level = 1;
    DecimalPair r;
    DecimalPair lambda;
    Parity parity = Parity::Even;
    std::map<long, Sign> al_signs;
    Sign fricke = Sign::Positive;
    /// a(1), a(2), ...; a(1) must be (1, 0).
    std::vector<DecimalPair> coefficients;
    /// Named diagnostic values, written as `DIAG key value`.
    std::map<std::string, std::string> diagnostics;
    /// Named provenance values, written as `PROV key value`.
    std::map<std::string, std::string> provenance;

    /// Throws FormatError (line 0) when an invariant fails.
    void validate() const;

    friend bool operator==(const MaassFormRecord&, const MaassFormRecord&) = default;
};

/// Serializes the record in the MAASS/1 text format.
std::string export_form(const MaassFormRecord& rec);

/// Parses MAASS/1 text. Throws FormatError with the offending line number.
MaassFormRecord import_form(const std::string& data);

/// Palette and window for render_portrait.
struct PortraitConfig {
    double x_min = -0.5;
    double x_max = 0.5;
    double y_min = 0.1;
    double y_max = 1.5;
    int width = 64;
    int height = 48;
    /// Values are mapped through tanh(v / scale).
    double scale = 1.0;
    std::string palette = "diverging";
    int threads = 1;
    mpfr_prec_t precision = kDefaultPrecision;

    /// Throws DomainError on an empty or lower-half-plane window, a
    /// non-positive size or scale, or an unknown palette.
    void validate() const;
};

/// Binary PPM (P6) portrait of the truncated expansion: header
/// `P6 w h 255\n`, then w*h RGB triples, row-major from the top-left.
/// Pixel (i, j) samples x = x_c + (i + 1/2 - w/2) dx, y = y_max - (j + 1/2) dy.
/// t = tanh(v / scale) blends the midpoint (245,245,245) toward
/// (180,30,60) for t > 0 and (60,30,180) for t < 0.
std::string render_portrait(const MaassFormRecord& rec, const PortraitConfig& cfg);

/// Candidate rebuilt from a record for evaluation: r and coefficients as
/// balls; context from provenance where available.
SpectralCandidate candidate_from_record(const MaassFormRecord& rec, mpfr_prec_t prec);

} // namespace maass
