#include "maass/cli.hpp"

#include "maass/certification.hpp"
#include "maass/dataset.hpp"
#include "maass/error.hpp"
#include "maass/hejhal.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>

namespace maass::cli {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;

struct Common {
    long precision = 0;
    int threads = 1;
};

struct ScanArgs {
    long level = 1;
    double r_min = 0.0;
    double r_max = 0.0;
    double step = 0.05;
    std::string parity = "both";
    std::string signs = "all";
    double eps = 1e-40;
    std::string manifest;
};

struct RefineArgs {
    long level = 1;
    std::vector<double> bracket;
    double tol = 1e-8;
    std::string parity = "even";
    std::string signs;
    double eps = 1e-40;
    long coefficients = MaassFormRecord::kDefaultCoefficientCount;
    std::string output;
};

struct PortraitArgs {
    std::string input;
    std::vector<double> window = {-0.5, 0.5, 0.1, 1.5};
    std::string size = "64x48";
    double scale = 0.0;
    std::string output;
};

std::string format_double(double v) {
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
        out += (out.empty() ? "" : ",") + std::to_string(p) + (s > 0 ? ":+1" : ":-1");
    }
    return out;
}

// "2:+1,3:-1"; "none" or empty for level 1.
SignVector parse_signs(const std::string& text, long level) {
    SignVector out;
    if (text.empty() || text == "none") {
        for (long p : prime_divisors(level)) {
            out[p] = 1;
        }
        return out;
    }
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) {
            throw DomainError("sign entry '" + item + "' is not of the form p:+1 or p:-1");
        }
        const std::string ps = item.substr(0, colon);
        const std::string sv = item.substr(colon + 1);
        char* end = nullptr;
        const long p = std::strtol(ps.c_str(), &end, 10);
        if (ps.empty() || *end != '\0' || p < 2) {
            throw DomainError("bad prime in sign entry '" + item + "'");
        }
        if (sv == "+1" || sv == "1" || sv == "+") {
            out[p] = 1;
        } else if (sv == "-1" || sv == "-") {
            out[p] = -1;
        } else {
            throw DomainError("bad sign in sign entry '" + item + "'");
        }
    }
    if (out.size() != prime_divisors(level).size()) {
        throw DomainError("sign vector must cover exactly the primes dividing " + std::to_string(level));
    }
    for (long p : prime_divisors(level)) {
        if (!out.count(p)) {
            throw DomainError("no sign given for prime " + std::to_string(p));
        }
    }
    return out;
}

std::vector<Parity> parse_parities(const std::string& text) {
    if (text == "both") {
        return {Parity::Even, Parity::Odd};
    }
    return {parse_parity(text)};
}

void require_squarefree(long level) {
    if (level < 1 || !is_squarefree(level)) {
        throw DomainError("level must be a squarefree positive integer, got " + std::to_string(level));
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DomainError("cannot open '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& data) {
    std::ofstream outf(path, std::ios::binary);
    if (!outf || !outf.write(data.data(), static_cast<std::streamsize>(data.size()))) {
        throw DomainError("cannot write '" + path + "'");
    }
}

std::string utc_now() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_manifest(const std::string& path, const std::string& command, const std::vector<std::string>& args,
                    const json& params, const Common& common, const std::vector<std::string>& outputs,
                    Clock::time_point start) {
    json m;
    m["tool"] = kToolVersion;
    m["command"] = command;
    m["argv"] = args;
    m["parameters"] = params;
    m["precision_bits"] = common.precision;
    m["threads"] = common.threads;
    m["outputs"] = outputs;
    m["determinism"] = "outputs depend only on argv and precision; thread count and wall clock do not affect them";
    m["started_utc"] = utc_now();
    m["wall_clock_seconds"] = std::chrono::duration<double>(Clock::now() - start).count();
    write_file(path, m.dump(2) + "\n");
}

std::string manifest_path(const std::string& output) { return output + ".manifest.json"; }

int cmd_scan(const ScanArgs& a, const Common& c, const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err) {
    const auto start = Clock::now();
    require_squarefree(a.level);
    if (!(a.step > 0.0) || !(a.r_min >= 0.0) || a.r_max < a.r_min) {
        throw DomainError("need 0 <= r-min <= r-max and step > 0");
    }
    const SolverContext ctx = SolverContext::defaults(a.level, Parity::Even, {}, c.precision, a.eps);
    ScanOptions opts;
    opts.parities = parse_parities(a.parity);
    if (a.signs == "all") {
        opts.sign_vectors = all_sign_vectors(a.level);
    } else {
        opts.sign_vectors = {parse_signs(a.signs, a.level)};
    }
    opts.threads = c.threads;
    std::mutex mu;
    long last_pct = -1;
    opts.progress = [&](long done, long total) {
        const long pct = 100 * done / std::max(1L, total);
        std::lock_guard lock(mu);
        if (pct / 10 != last_pct / 10 || done == total) {
            last_pct = pct;
            err << "scan: " << done << "/" << total << "\n" << std::flush;
        }
    };
    err << "scan: level " << a.level << ", M = " << ctx.M << ", Q = " << ctx.Q << "\n";
    const std::vector<Bracket> brackets = scan(a.r_min, a.r_max, a.step, ctx, opts);
    for (const Bracket& b : brackets) {
        out << "BRACKET " << format_double(b.lo) << " " << format_double(b.hi) << " " << to_string(b.parity) << " "
            << format_signs(b.al_signs) << " " << format_double(b.g_lo) << " " << format_double(b.g_hi) << "\n";
    }
    if (!a.manifest.empty()) {
        const json params = {{"level", a.level}, {"r_min", a.r_min}, {"r_max", a.r_max}, {"step", a.step},
                             {"parity", a.parity}, {"al_signs", a.signs}, {"eps", a.eps}, {"M", ctx.M},
                             {"Q", ctx.Q}, {"Y1", ctx.Y1}, {"Y2", ctx.Y2}, {"brackets", brackets.size()}};
        write_manifest(a.manifest, "scan", args, params, c, {}, start);
    }
    return kExitOk;
}

int cmd_refine(const RefineArgs& a, const Common& c, const std::vector<std::string>& args, std::ostream& out,
               std::ostream& err) {
    const auto start = Clock::now();
    require_squarefree(a.level);
    if (a.bracket.size() != 2 || !(a.bracket[0] < a.bracket[1])) {
        throw DomainError("--bracket needs LO < HI");
    }
    if (!(a.tol > 0.0)) {
        throw DomainError("--tol must be positive");
    }
    const Parity parity = parse_parity(a.parity);
    const SignVector signs = parse_signs(a.signs, a.level);
    const SolverContext ctx = SolverContext::defaults(a.level, parity, signs, c.precision, a.eps);
    Bracket b;
    b.lo = a.bracket[0];
    b.hi = a.bracket[1];
    b.parity = parity;
    b.al_signs = signs;
    err << "refine: [" << format_double(b.lo) << ", " << format_double(b.hi) << "], " << to_string(parity)
        << ", M = " << ctx.M << ", Q = " << ctx.Q << "\n";
    const SpectralCandidate cand = refine(b, ctx, a.tol);
    err << "refine: r = " << cand.r.mid().to_scientific(20) << " after " << cand.iterations << " iterations\n";
    CertifyOptions copts;
    copts.coefficient_count = a.coefficients;
    const CertifiedForm cert = certify(cand, ctx, copts);
    const Diagnostics& d = cert.diagnostics;
    err << "certify: enclosure " << to_string(d.enclosure_status) << ", defect " << format_error(d.automorphy_defect)
        << " (threshold " << format_error(d.defect_threshold) << "), hecke " << format_error(d.hecke_residual)
        << " (threshold " << format_error(d.hecke_threshold) << ")\n";
    const std::string text = export_form(cert.record);
    if (a.output.empty() || a.output == "-") {
        out << text;
        return kExitOk;
    }
    write_file(a.output, text);
    const json params = {{"level", a.level}, {"bracket", a.bracket}, {"tol", a.tol}, {"parity", a.parity},
                         {"al_signs", format_signs(signs)}, {"eps", a.eps}, {"coefficients", a.coefficients},
                         {"M", ctx.M}, {"Q", ctx.Q}, {"Y1", ctx.Y1}, {"Y2", ctx.Y2}};
    write_manifest(manifest_path(a.output), "refine", args, params, c, {a.output}, start);
    out << a.output << "\n";
    return kExitOk;
}

int cmd_verify(const std::string& path, const Common& c, std::ostream& out) {
    const MaassFormRecord rec = import_form(read_file(path));
    const Diagnostics d = recheck(rec, static_cast<mpfr_prec_t>(c.precision));
    const bool enclosure_ok = d.enclosure_status == EnclosureStatus::Verified;
    out << "automorphy_defect " << format_error(d.automorphy_defect) << " <= " << format_error(d.defect_threshold)
        << (d.defect_ok() ? " PASS" : " FAIL") << "\n";
    out << "hecke_residual " << format_error(d.hecke_residual) << " <= " << format_error(d.hecke_threshold)
        << (d.hecke_ok() ? " PASS" : " FAIL") << "\n";
    out << "enclosure " << to_string(d.enclosure_status) << (enclosure_ok ? " PASS" : " FAIL") << "\n";
    const bool ok = d.defect_ok() && d.hecke_ok() && enclosure_ok;
    out << (ok ? "PASS" : "FAIL") << "\n";
    return ok ? kExitOk : kExitDomain;
}

int cmd_portrait(const PortraitArgs& a, const Common& c, const std::vector<std::string>& args, std::ostream& out) {
    const auto start = Clock::now();
    const MaassFormRecord rec = import_form(read_file(a.input));
    PortraitConfig cfg;
    if (a.window.size() != 4) {
        throw DomainError("--window needs XMIN XMAX YMIN YMAX");
    }
    cfg.x_min = a.window[0];
    cfg.x_max = a.window[1];
    cfg.y_min = a.window[2];
    cfg.y_max = a.window[3];
    int w = 0, h = 0;
    char extra = 0;
    if (std::sscanf(a.size.c_str(), "%dx%d%c", &w, &h, &extra) != 2) {
        throw DomainError("--size must look like WxH, got '" + a.size + "'");
    }
    cfg.width = w;
    cfg.height = h;
    if (a.scale > 0.0) {
        cfg.scale = a.scale;
    } else {
        // Forms are normalized by a(1) = 1, so values scale like K_{ir}(2 pi y).
        const Ball k = kbessel_ir(Ball::parse(rec.r.center, 0.0, 53).mid_double(), 2.0 * 3.141592653589793 * cfg.y_max);
        cfg.scale = std::max(k.abs_upper(), 1e-300);
    }
    cfg.threads = c.threads;
    cfg.precision = static_cast<mpfr_prec_t>(c.precision);
    const std::string image = render_portrait(rec, cfg);
    write_file(a.output, image);
    const json params = {{"input", a.input}, {"window", a.window}, {"width", w}, {"height", h},
                         {"scale", cfg.scale}, {"palette", cfg.palette}};
    write_manifest(manifest_path(a.output), "portrait", args, params, c, {a.output}, start);
    out << a.output << "\n";
    return kExitOk;
}

int cmd_info(const std::string& path, std::ostream& out) {
    const MaassFormRecord rec = import_form(read_file(path));
    out << "level        " << rec.level << "\n";
    out << "r            " << rec.r.center << " +/- " << rec.r.error << "\n";
    out << "lambda       " << rec.lambda.center << " +/- " << rec.lambda.error << "\n";
    out << "parity       " << to_string(rec.parity) << "\n";
    for (const auto& [p, s] : rec.al_signs) {
        out << "AL sign p=" << p << "  " << to_string(s) << "\n";
    }
    out << "fricke       " << to_string(rec.fricke) << "\n";
    out << "coefficients " << rec.coefficients.size() << "\n";
    const std::size_t shown = std::min<std::size_t>(rec.coefficients.size(), 6);
    for (std::size_t n = 1; n < shown; ++n) {
        out << "  a(" << n + 1 << ") = " << rec.coefficients[n].center << " +/- " << rec.coefficients[n].error << "\n";
    }
    for (const auto& [k, v] : rec.diagnostics) {
        out << "diag " << k << " " << v << "\n";
    }
    return kExitOk;
}

} // namespace

long default_precision() {
    if (const char* env = std::getenv("MAASS_PRECISION_BITS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (*env != '\0' && *end == '\0' && v >= 53 && v <= 100000) {
            return v;
        }
    }
    return kDefaultPrecision;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Maass cusp forms on Gamma0(N): scan, refine, certify, export", "maass"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", kToolVersion);

    Common common;
    common.precision = default_precision();
    app.add_option("--precision", common.precision, "working precision in bits (env MAASS_PRECISION_BITS)")
        ->check(CLI::Range(53L, 100000L));
    app.add_option("--threads", common.threads, "worker threads")->check(CLI::Range(1, 1024));

    ScanArgs sa;
    CLI::App* scan_cmd = app.add_subcommand("scan", "locate sign changes of the eigenvalue functional");
    scan_cmd->add_option("--level", sa.level, "squarefree level N")->required();
    scan_cmd->add_option("--r-min", sa.r_min, "lower end of the r range")->required();
    scan_cmd->add_option("--r-max", sa.r_max, "upper end of the r range")->required();
    scan_cmd->add_option("--step", sa.step, "grid step")->capture_default_str();
    scan_cmd->add_option("--parity", sa.parity, "even, odd or both")->capture_default_str()
        ->check(CLI::IsMember({"even", "odd", "both"}));
    scan_cmd->add_option("--al-signs", sa.signs, "'all' or a list such as 2:+1,3:-1")->capture_default_str();
    scan_cmd->add_option("--eps", sa.eps, "truncation target")->capture_default_str();
    scan_cmd->add_option("--manifest", sa.manifest, "write a run manifest here");

    RefineArgs ra;
    CLI::App* refine_cmd = app.add_subcommand("refine", "refine a bracket and write a certified MAASS/1 record");
    refine_cmd->add_option("--level", ra.level, "squarefree level N")->required();
    refine_cmd->add_option("--bracket", ra.bracket, "LO HI")->required()->expected(2);
    refine_cmd->add_option("--tol", ra.tol, "bracket width tolerance")->capture_default_str();
    refine_cmd->add_option("--parity", ra.parity, "even or odd")->capture_default_str()->check(CLI::IsMember({"even", "odd"}));
    refine_cmd->add_option("--al-signs", ra.signs, "list such as 2:+1,3:-1");
    refine_cmd->add_option("--eps", ra.eps, "truncation target")->capture_default_str();
    refine_cmd->add_option("--coefficients", ra.coefficients, "number of coefficients to store")->capture_default_str()
        ->check(CLI::PositiveNumber);
    refine_cmd->add_option("-o,--output", ra.output, "output file ('-' for stdout)");

    std::string verify_file;
    CLI::App* verify_cmd = app.add_subcommand("verify", "recompute diagnostics of a record");
    verify_cmd->add_option("file", verify_file, "MAASS/1 file")->required();

    PortraitArgs pa;
    CLI::App* portrait_cmd = app.add_subcommand("portrait", "render a PPM portrait of a record");
    portrait_cmd->add_option("file", pa.input, "MAASS/1 file")->required();
    portrait_cmd->add_option("--window", pa.window, "XMIN XMAX YMIN YMAX")->expected(4);
    portrait_cmd->add_option("--size", pa.size, "WxH")->capture_default_str();
    portrait_cmd->add_option("--scale", pa.scale, "tanh value scale (default from K_{ir}(2 pi y_max))");
    portrait_cmd->add_option("-o,--output", pa.output, "output .ppm file")->required();

    std::string info_file;
    CLI::App* info_cmd = app.add_subcommand("info", "print a summary of a record");
    info_cmd->add_option("file", info_file, "MAASS/1 file")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        err << app.help();
        return args.empty() ? kExitUsage : kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << kToolVersion << "\n";
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        if (!args.empty()) {
            err << "error: " << e.what() << "\n";
        }
        err << app.help();
        return kExitUsage;
    }

    try {
        if (scan_cmd->parsed()) {
            return cmd_scan(sa, common, args, out, err);
        }
        if (refine_cmd->parsed()) {
            return cmd_refine(ra, common, args, out, err);
        }
        if (verify_cmd->parsed()) {
            return cmd_verify(verify_file, common, out);
        }
        if (portrait_cmd->parsed()) {
            return cmd_portrait(pa, common, args, out);
        }
        if (info_cmd->parsed()) {
            return cmd_info(info_file, out);
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitDomain;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitDomain;
    }
    err << app.help();
    return kExitUsage;
}

} // namespace maass::cli
