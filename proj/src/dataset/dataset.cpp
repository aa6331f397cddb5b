#include "maass/dataset.hpp"

#include "maass/error.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <thread>

namespace maass {

namespace {

constexpr int kCenterDigits = 25;
constexpr std::array<int, 3> kMidColor = {245, 245, 245};
constexpr std::array<int, 3> kPositiveColor = {180, 30, 60};
constexpr std::array<int, 3> kNegativeColor = {60, 30, 180};

std::string sign_token(Sign s) {
    switch (s) {
    case Sign::Positive:
        return "+1";
    case Sign::Negative:
        return "-1";
    case Sign::Undetermined:
        break;
    }
    return "undetermined";
}

Sign parse_sign_token(const std::string& token, int line) {
    if (token == "+1") {
        return Sign::Positive;
    }
    if (token == "-1") {
        return Sign::Negative;
    }
    if (token == "undetermined") {
        return Sign::Undetermined;
    }
    throw FormatError("expected +1, -1 or undetermined, got '" + token + "'", line);
}

long parse_long(const std::string& token, int line) {
    char* end = nullptr;
    errno = 0;
    const long v = std::strtol(token.c_str(), &end, 10);
    if (token.empty() || end != token.c_str() + token.size() || errno != 0) {
        throw FormatError("expected an integer, got '" + token + "'", line);
    }
    return v;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= line.size()) {
        const std::size_t next = line.find(' ', pos);
        const std::size_t stop = next == std::string::npos ? line.size() : next;
        out.push_back(line.substr(pos, stop - pos));
        if (next == std::string::npos) {
            break;
        }
        pos = next + 1;
    }
    return out;
}

DecimalPair parse_pair(const std::vector<std::string>& f, std::size_t at, int line) {
    DecimalPair p{f[at], f[at + 1]};
    try {
        (void)Ball::parse(p.center, 0.0, 64);
        (void)parse_error(p.error);
    } catch (const DomainError& e) {
        throw FormatError(e.what(), line);
    }
    return p;
}

void expect_fields(const std::vector<std::string>& f, std::size_t n, int line) {
    if (f.size() != n) {
        throw FormatError("'" + f[0] + "' expects " + std::to_string(n - 1) + " fields", line);
    }
}

bool valid_key(const std::string& key) {
    return !key.empty() && std::all_of(key.begin(), key.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
    });
}

bool valid_value(const std::string& v) {
    return !v.empty() && std::all_of(v.begin(), v.end(), [](char c) { return c > ' ' && c < 127; });
}

std::array<unsigned char, 3> color_for(double v, double scale) {
    const double t = std::tanh(v / scale);
    const std::array<int, 3>& target = t > 0.0 ? kPositiveColor : kNegativeColor;
    const double w = std::fabs(t);
    std::array<unsigned char, 3> out{};
    for (std::size_t c = 0; c < 3; ++c) {
        const double value = kMidColor[c] + w * (target[c] - kMidColor[c]);
        out[c] = static_cast<unsigned char>(std::lround(value));
    }
    return out;
}

} // namespace

std::string format_error(double v) {
    if (!(v >= 0.0) || std::isinf(v)) {
        throw DomainError("error field must be finite and nonnegative");
    }
    if (v == 0.0) {
        return "0";
    }
    const Real x(v, 53);
    char buf[64];
    mpfr_snprintf(buf, sizeof buf, "%.2RUe", x.get());
    return buf;
}

double parse_error(const std::string& text) {
    if (text == "0") {
        return 0.0;
    }
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (text.empty() || end != text.c_str() + text.size() || !std::isfinite(v)) {
        throw DomainError("malformed error field '" + text + "'");
    }
    if (v < 0.0 || text[0] == '-') {
        throw DomainError("negative error field '" + text + "'");
    }
    return v == 0.0 ? 0.0 : rad::next_up(v);
}

DecimalPair DecimalPair::from_ball(const Ball& b) {
    if (!b.is_finite()) {
        throw DomainError("cannot store a non-finite ball");
    }
    DecimalPair p;
    p.center = b.mid().to_scientific(kCenterDigits);
    // The stored center differs from the ball center; add that distance.
    const Ball stored = Ball::parse(p.center, 0.0, b.precision() + 64);
    const Ball shift = stored - Ball(b.mid(), 0.0);
    p.error = format_error(rad::add_up(b.rad(), shift.abs_upper()));
    return p;
}

Ball DecimalPair::to_ball(mpfr_prec_t prec) const { return Ball::parse(center, parse_error(error), prec); }

void MaassFormRecord::validate() const {
    const auto fail = [](const std::string& what) { throw FormatError(what, 0); };
    if (level < 1 || !is_squarefree(level)) {
        fail("level must be a squarefree positive integer");
    }
    if (coefficients.empty()) {
        fail("record needs at least one coefficient");
    }
    try {
        const Ball a1 = coefficients.front().to_ball(64);
        if (!(a1.is_exact() && a1.mid() == Real(1L, 64))) {
            fail("a(1) must be stored as (1, 0)");
        }
        for (const DecimalPair& c : coefficients) {
            (void)c.to_ball(64);
        }
        const Ball rb = r.to_ball(kDefaultPrecision);
        const Ball lb = lambda.to_ball(kDefaultPrecision);
        if (!lb.overlaps(lambda_of(rb))) {
            fail("lambda is inconsistent with 1/4 + r^2");
        }
    } catch (const DomainError& e) {
        fail(e.what());
    }
    const std::vector<long> primes = prime_divisors(level);
    if (al_signs.size() != primes.size()) {
        fail("Atkin-Lehner signs must cover exactly the primes of the level");
    }
    for (long p : primes) {
        if (al_signs.find(p) == al_signs.end()) {
            fail("missing Atkin-Lehner sign for prime " + std::to_string(p));
        }
    }
    Sign product = Sign::Positive;
    for (const auto& [p, s] : al_signs) {
        if (s == Sign::Undetermined || product == Sign::Undetermined) {
            product = Sign::Undetermined;
        } else if (s == Sign::Negative) {
            product = product == Sign::Positive ? Sign::Negative : Sign::Positive;
        }
    }
    if (product != fricke) {
        fail("Fricke sign is not the product of the Atkin-Lehner signs");
    }
    for (const auto& [k, v] : diagnostics) {
        if (!valid_key(k) || !valid_value(v)) {
            fail("malformed diagnostic entry '" + k + "'");
        }
    }
    for (const auto& [k, v] : provenance) {
        if (!valid_key(k) || !valid_value(v)) {
            fail("malformed provenance entry '" + k + "'");
        }
    }
}

std::string export_form(const MaassFormRecord& rec) {
    rec.validate();
    std::ostringstream out;
    out << "MAASS/" << MaassFormRecord::kFormatVersion << '\n';
    out << "LEVEL " << rec.level << '\n';
    out << "WEIGHT 0\n";
    out << "CHARACTER trivial\n";
    out << "SPECTRAL_R " << rec.r.center << ' ' << rec.r.error << '\n';
    out << "LAMBDA " << rec.lambda.center << ' ' << rec.lambda.error << '\n';
    out << "PARITY " << to_string(rec.parity) << '\n';
    for (const auto& [p, s] : rec.al_signs) {
        out << "ALSIGN " << p << ' ' << sign_token(s) << '\n';
    }
    out << "FRICKE " << sign_token(rec.fricke) << '\n';
    for (const auto& [k, v] : rec.diagnostics) {
        out << "DIAG " << k << ' ' << v << '\n';
    }
    for (const auto& [k, v] : rec.provenance) {
        out << "PROV " << k << ' ' << v << '\n';
    }
    for (std::size_t n = 0; n < rec.coefficients.size(); ++n) {
        out << "COEFF " << n + 1 << ' ' << rec.coefficients[n].center << ' ' << rec.coefficients[n].error << '\n';
    }
    return out.str();
}

MaassFormRecord import_form(const std::string& data) {
    std::vector<std::string> lines;
    std::size_t pos = 0;
    while (pos < data.size()) {
        const std::size_t nl = data.find('\n', pos);
        if (nl == std::string::npos) {
            throw FormatError("missing final newline", static_cast<int>(lines.size()) + 1);
        }
        lines.push_back(data.substr(pos, nl - pos));
        pos = nl + 1;
    }
    if (lines.empty()) {
        throw FormatError("empty document", 1);
    }
    if (lines[0] != "MAASS/1") {
        if (lines[0].rfind("MAASS/", 0) == 0) {
            throw FormatError("unsupported format version '" + lines[0] + "'", 1);
        }
        throw FormatError("missing MAASS/1 header", 1);
    }

    // Sections in the order they must appear.
    enum Stage { Level, Weight, Character, SpectralR, Lambda, ParityLine, AlSign, Fricke, Diag, Prov, Coeff };
    const std::map<std::string, Stage> keywords = {
        {"LEVEL", Level},        {"WEIGHT", Weight}, {"CHARACTER", Character}, {"SPECTRAL_R", SpectralR},
        {"LAMBDA", Lambda},      {"PARITY", ParityLine}, {"ALSIGN", AlSign},   {"FRICKE", Fricke},
        {"DIAG", Diag},          {"PROV", Prov},     {"COEFF", Coeff}};
    const std::array<bool, 11> repeatable = {false, false, false, false, false, false, true, false, true, true, true};

    MaassFormRecord rec;
    int stage = -1;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const int ln = static_cast<int>(i) + 1;
        const std::vector<std::string> f = split(lines[i]);
        const auto kw = keywords.find(f[0]);
        if (kw == keywords.end()) {
            throw FormatError("unknown keyword '" + f[0] + "'", ln);
        }
        const int s = kw->second;
        if (s < stage || (s == stage && !repeatable[static_cast<std::size_t>(s)])) {
            throw FormatError("'" + f[0] + "' out of order", ln);
        }
        for (int skipped = stage + 1; skipped < s; ++skipped) {
            if (!repeatable[static_cast<std::size_t>(skipped)]) {
                throw FormatError("missing line before '" + f[0] + "'", ln);
            }
        }
        stage = s;
        switch (kw->second) {
        case Level:
            expect_fields(f, 2, ln);
            rec.level = parse_long(f[1], ln);
            break;
        case Weight:
            expect_fields(f, 2, ln);
            if (f[1] != "0") {
                throw FormatError("only weight 0 is supported", ln);
            }
            break;
        case Character:
            expect_fields(f, 2, ln);
            if (f[1] != "trivial") {
                throw FormatError("only the trivial character is supported", ln);
            }
            break;
        case SpectralR:
            expect_fields(f, 3, ln);
            rec.r = parse_pair(f, 1, ln);
            break;
        case Lambda:
            expect_fields(f, 3, ln);
            rec.lambda = parse_pair(f, 1, ln);
            break;
        case ParityLine:
            expect_fields(f, 2, ln);
            try {
                rec.parity = parse_parity(f[1]);
            } catch (const DomainError& e) {
                throw FormatError(e.what(), ln);
            }
            break;
        case AlSign: {
            expect_fields(f, 3, ln);
            const long p = parse_long(f[1], ln);
            if (!rec.al_signs.emplace(p, parse_sign_token(f[2], ln)).second) {
                throw FormatError("duplicate ALSIGN for prime " + f[1], ln);
            }
            break;
        }
        case Fricke:
            expect_fields(f, 2, ln);
            rec.fricke = parse_sign_token(f[1], ln);
            break;
        case Diag:
        case Prov: {
            expect_fields(f, 3, ln);
            if (!valid_key(f[1]) || !valid_value(f[2])) {
                throw FormatError("malformed entry", ln);
            }
            auto& target = kw->second == Diag ? rec.diagnostics : rec.provenance;
            if (!target.emplace(f[1], f[2]).second) {
                throw FormatError("duplicate key '" + f[1] + "'", ln);
            }
            break;
        }
        case Coeff: {
            expect_fields(f, 4, ln);
            const long n = parse_long(f[1], ln);
            if (n != static_cast<long>(rec.coefficients.size()) + 1) {
                throw FormatError("coefficients must be listed as 1, 2, 3, ...", ln);
            }
            rec.coefficients.push_back(parse_pair(f, 2, ln));
            break;
        }
        }
    }
    if (stage < Fricke) {
        throw FormatError("document ends before the FRICKE line", static_cast<int>(lines.size()));
    }
    rec.validate();
    return rec;
}

void PortraitConfig::validate() const {
    if (!(y_min > 0.0)) {
        throw DomainError("portrait window must lie in the upper half-plane");
    }
    if (!(x_min < x_max && y_min < y_max) || !std::isfinite(x_max) || !std::isfinite(y_max)) {
        throw DomainError("portrait window is empty");
    }
    if (width < 1 || height < 1) {
        throw DomainError("portrait size must be at least 1x1");
    }
    if (!(scale > 0.0)) {
        throw DomainError("portrait scale must be positive");
    }
    if (palette != "diverging") {
        throw DomainError("unknown palette '" + palette + "'");
    }
}

SpectralCandidate candidate_from_record(const MaassFormRecord& rec, mpfr_prec_t prec) {
    rec.validate();
    SpectralCandidate cand;
    cand.r = rec.r.to_ball(prec);
    cand.lambda = lambda_of(cand.r);
    for (const DecimalPair& c : rec.coefficients) {
        cand.coefficients.a.push_back(c.to_ball(prec));
    }
    SolverContext ctx = SolverContext::defaults(rec.level, rec.parity, {}, prec);
    const auto prov = [&](const char* key) -> const std::string* {
        const auto it = rec.provenance.find(key);
        return it == rec.provenance.end() ? nullptr : &it->second;
    };
    if (const std::string* v = prov("Y1")) {
        ctx.Y1 = std::strtod(v->c_str(), nullptr);
    }
    if (const std::string* v = prov("Y2")) {
        ctx.Y2 = std::strtod(v->c_str(), nullptr);
    }
    if (const std::string* v = prov("Q")) {
        ctx.Q = std::strtol(v->c_str(), nullptr, 10);
    }
    if (const std::string* v = prov("eps")) {
        ctx.eps = std::strtod(v->c_str(), nullptr);
    }
    ctx.M = cand.coefficients.size();
    ctx.Q = std::max(ctx.Q, ctx.M + 1);
    for (const auto& [p, s] : rec.al_signs) {
        ctx.al_signs[p] = s == Sign::Negative ? -1 : 1;
    }
    if (const std::string* v = prov("solver_signs"); v != nullptr && *v != "none") {
        std::istringstream in(*v);
        std::string item;
        while (std::getline(in, item, ',')) {
            const std::size_t colon = item.find(':');
            if (colon == std::string::npos) {
                throw FormatError("malformed solver_signs entry '" + item + "'", 0);
            }
            ctx.al_signs[std::strtol(item.substr(0, colon).c_str(), nullptr, 10)] =
                item.substr(colon + 1) == "-1" ? -1 : 1;
        }
    }
    cand.context = ctx;
    return cand;
}

std::string render_portrait(const MaassFormRecord& rec, const PortraitConfig& cfg) {
    cfg.validate();
    const mpfr_prec_t p = cfg.precision;
    const SpectralCandidate cand = candidate_from_record(rec, p);
    const Ball r_center(cand.r.mid(), 0.0);
    const auto rules = std::make_shared<const QuadratureRules>(p);
    const Ball two_pi = ldexp(Ball::pi(p), 1);
    const double dx = (cfg.x_max - cfg.x_min) / cfg.width;
    const double dy = (cfg.y_max - cfg.y_min) / cfg.height;
    const double x_center = 0.5 * (cfg.x_min + cfg.x_max);
    const long M = cand.coefficients.size();

    const std::string header =
        "P6 " + std::to_string(cfg.width) + " " + std::to_string(cfg.height) + " 255\n";
    const std::size_t row_bytes = static_cast<std::size_t>(cfg.width) * 3;
    std::string out(header.size() + row_bytes * static_cast<std::size_t>(cfg.height), '\0');
    std::copy(header.begin(), header.end(), out.begin());

    std::atomic<int> next_row{0};
    auto worker = [&] {
        KBesselEvaluator k(r_center, rules);
        std::vector<Ball> radial(static_cast<std::size_t>(M), Ball(p));
        for (int j = next_row++; j < cfg.height; j = next_row++) {
            const double y = cfg.y_max - (j + 0.5) * dy;
            const Ball yb = Ball::exact(y, p);
            const Ball sy = sqrt(yb);
            for (long n = 1; n <= M; ++n) {
                radial[static_cast<std::size_t>(n - 1)] = cand.coefficients(n) * k.value(two_pi * yb * n) * sy;
            }
            char* row = out.data() + header.size() + row_bytes * static_cast<std::size_t>(j);
            for (int i = 0; i < cfg.width; ++i) {
                const double x = x_center + (i + 0.5 - 0.5 * cfg.width) * dx;
                const Ball tpx = two_pi * Ball::exact(x, p);
                Ball sum(p);
                for (long n = 1; n <= M; ++n) {
                    const Ball arg = tpx * n;
                    sum += radial[static_cast<std::size_t>(n - 1)] * (rec.parity == Parity::Even ? cos(arg) : sin(arg));
                }
                const auto rgb = color_for(2.0 * sum.mid_double(), cfg.scale);
                std::copy(rgb.begin(), rgb.end(), row + 3 * i);
            }
        }
    };
    const int threads = std::max(1, cfg.threads);
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
    return out;
}

} // namespace maass
