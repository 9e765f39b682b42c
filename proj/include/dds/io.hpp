#pragma once

// Wire formats: model and profile specs (JSON), digit-word lines, cylinder
// JSON, and the CSV/JSON exports of the reports.
//
// Numbers are written with std::to_chars (shortest round-trip, '.' decimal,
// no locale), so identical inputs give byte-identical files.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "dds/codec.hpp"
#include "dds/errors.hpp"
#include "dds/linear.hpp"
#include "dds/occupancy.hpp"
#include "dds/sublinear.hpp"
#include "dds/tilt.hpp"
#include "dds/weights.hpp"

namespace dds {

using json = nlohmann::json;

// ---------------------------------------------------------------- numbers

inline std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    if (x == 0.0) return "0";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

inline Rational parse_rational(std::string_view s) {
    const auto slash = s.find('/');
    try {
        if (slash == std::string_view::npos) {
            const Fraction f = Fraction::parse(s);
            return Rational(f.num(), f.den());
        }
        using boost::multiprecision::cpp_int;
        const cpp_int p(std::string(s.substr(0, slash)));
        const cpp_int q(std::string(s.substr(slash + 1)));
        if (q == 0) throw DomainError("zero denominator");
        return Rational(p, q);
    } catch (const DomainError&) {
        throw;
    } catch (const std::exception&) {
        throw DomainError("cannot parse rational '" + std::string(s) + "'");
    }
}

inline std::string rational_str(const Rational& r) {
    return numerator(r).str() + "/" + denominator(r).str();
}

// ---------------------------------------------------------------- model spec

namespace detail {

inline double number_field(const json& j, const char* key) {
    if (!j.contains(key)) throw DomainError(std::string("model spec: missing \"") + key + "\"");
    if (!j.at(key).is_number()) throw DomainError(std::string("model spec: \"") + key + "\" must be a number");
    return j.at(key).get<double>();
}

}  // namespace detail

/// { "kind": "luroth" | "power" | "power-log" | "explicit-prefix" | "finite",
///   "rho", "gamma"?, "prefix"?, "weights"? }
inline WeightModel model_from_json(const json& j) {
    if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string())
        throw DomainError("model spec: expected an object with a string \"kind\"");
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "luroth") {
        if (j.contains("rho") && detail::number_field(j, "rho") != 2.0)
            throw DomainError("model spec: luroth has rho = 2");
        return WeightModel::luroth();
    }
    if (kind == "power") return WeightModel::power(detail::number_field(j, "rho"));
    if (kind == "power-log") {
        const double gamma = j.contains("gamma") ? detail::number_field(j, "gamma") : 0.0;
        return WeightModel::power_log(detail::number_field(j, "rho"), gamma);
    }
    if (kind == "explicit-prefix") {
        if (!j.contains("prefix") || !j.at("prefix").is_array())
            throw DomainError("model spec: explicit-prefix needs a \"prefix\" array");
        std::vector<double> prefix;
        for (const auto& v : j.at("prefix")) {
            if (!v.is_number()) throw DomainError("model spec: prefix entries must be numbers");
            prefix.push_back(v.get<double>());
        }
        return WeightModel::explicit_prefix(std::move(prefix), detail::number_field(j, "rho"));
    }
    if (kind == "finite") {
        if (!j.contains("weights") || !j.at("weights").is_array())
            throw DomainError("model spec: finite needs a \"weights\" array");
        std::vector<Rational> w;
        for (const auto& v : j.at("weights")) {
            if (v.is_string())
                w.push_back(parse_rational(v.get<std::string>()));
            else if (v.is_number_unsigned())
                w.push_back(Rational(v.get<std::uint64_t>()));
            else
                throw DomainError("model spec: finite weights must be \"p/q\" strings");
        }
        return WeightModel::finite(std::move(w));
    }
    throw DomainError("model spec: unknown kind \"" + kind + "\"");
}

inline WeightModel parse_model_spec(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw DomainError(std::string("model spec: ") + e.what());
    }
    return model_from_json(j);
}

inline json model_to_json(const WeightModel& m) {
    json j;
    switch (m.kind()) {
        case ModelKind::luroth:
            j = {{"kind", "luroth"}, {"rho", 2.0}};
            break;
        case ModelKind::power:
            j = {{"kind", "power"}, {"rho", m.rho()}};
            break;
        case ModelKind::power_log:
            j = {{"kind", "power-log"}, {"rho", m.rho()}, {"gamma", m.gamma()}};
            break;
        case ModelKind::explicit_prefix:
            j = {{"kind", "explicit-prefix"}, {"rho", m.rho()}, {"prefix", m.prefix()}};
            break;
        case ModelKind::finite: {
            json w = json::array();
            for (std::uint64_t k = 1; k <= *m.support_size(); ++k) w.push_back(rational_str(m.exact_weight(k)));
            j = {{"kind", "finite"}, {"weights", w}};
            break;
        }
    }
    return j;
}

// ---------------------------------------------------------------- profile spec

/// { "kind": "sqrt" | "power" | "log" | "table", "beta"?, "c"?, "table"?, "horizon" }.
/// A "table" array always wins and gives f(1..H) directly.
inline AdmissibleProfile profile_from_json(const json& j) {
    if (!j.is_object()) throw DomainError("profile spec: expected an object");
    if (j.contains("table")) {
        if (!j.at("table").is_array()) throw DomainError("profile spec: \"table\" must be an array");
        std::vector<std::uint64_t> f;
        for (const auto& v : j.at("table")) {
            if (!v.is_number_unsigned()) throw DomainError("profile spec: table entries must be non-negative integers");
            f.push_back(v.get<std::uint64_t>());
        }
        return AdmissibleProfile::from_table(std::move(f));
    }
    if (!j.contains("kind") || !j.at("kind").is_string()) throw DomainError("profile spec: missing \"kind\"");
    if (!j.contains("horizon") || !j.at("horizon").is_number_unsigned())
        throw DomainError("profile spec: missing integer \"horizon\"");
    const auto kind = j.at("kind").get<std::string>();
    const auto H = j.at("horizon").get<std::uint64_t>();
    auto num = [&](const char* key, double def) {
        if (!j.contains(key)) return def;
        if (!j.at(key).is_number()) throw DomainError(std::string("profile spec: \"") + key + "\" must be a number");
        return j.at(key).get<double>();
    };
    if (kind == "sqrt") return AdmissibleProfile::sqrt(H);
    if (kind == "power") {
        if (!j.contains("beta")) throw DomainError("profile spec: power needs \"beta\"");
        return AdmissibleProfile::power(num("beta", 0.5), num("c", 1.0), H);
    }
    if (kind == "log") return AdmissibleProfile::log(num("c", 1.0), H);
    throw DomainError("profile spec: unknown kind \"" + kind + "\"");
}

// ---------------------------------------------------------------- digit words

inline std::string format_word(std::span<const std::uint64_t> word) {
    std::string out;
    out.reserve(word.size() * 4);
    char buf[24];
    for (std::size_t i = 0; i < word.size(); ++i) {
        if (i) out.push_back(',');
        const auto res = std::to_chars(buf, buf + sizeof buf, word[i]);
        out.append(buf, res.ptr);
    }
    return out;
}

/// Comma-separated decimal digits; surrounding blanks are ignored.
inline DigitWord parse_word(std::string_view line) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.remove_suffix(1);
    DigitWord w;
    if (line.empty()) return w;
    std::size_t pos = 0;
    while (true) {
        const auto comma = line.find(',', pos);
        auto field = line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
        while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
        while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
        std::uint64_t d = 0;
        const auto res = std::from_chars(field.data(), field.data() + field.size(), d);
        if (field.empty() || res.ec != std::errc{} || res.ptr != field.data() + field.size())
            throw DomainError("digit word: bad field '" + std::string(field) + "'");
        if (d == 0) throw DomainError("digit word: digits must be >= 1");
        w.push_back(d);
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return w;
}

inline void write_words(std::ostream& os, const std::vector<DigitWord>& words) {
    for (const auto& w : words) os << format_word(w) << '\n';
}

/// Skips blank lines and '#' comment lines.
inline std::vector<DigitWord> read_words(std::istream& is) {
    std::vector<DigitWord> out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#' || line == "\r") continue;
        out.push_back(parse_word(line));
    }
    return out;
}

/// { "digits": [...], "log_diam": x, "left": "p/q" }. Without an exact left
/// endpoint, "left" holds the long double value in decimal.
inline json cylinder_to_json(const Cylinder& c) {
    json j;
    j["digits"] = c.word;
    j["log_diam"] = c.log_diam;
    if (c.left_exact) {
        j["left"] = rational_str(*c.left_exact);
    } else {
        char buf[64];
        const auto res = std::to_chars(buf, buf + sizeof buf, c.left);
        j["left"] = std::string(buf, res.ptr);
    }
    return j;
}

// ---------------------------------------------------------------- CSV

/// RFC 4180 style writer: header row, quoted fields only when needed, '\n' endings.
class CsvWriter {
public:
    CsvWriter(std::ostream& os, std::vector<std::string> header) : os_(os), width_(header.size()) {
        write_row(header);
    }

    template <class... Ts>
    void row(const Ts&... values) {
        if (sizeof...(Ts) != width_) throw DomainError("csv: row width does not match the header");
        std::vector<std::string> fields;
        fields.reserve(width_);
        (fields.push_back(field(values)), ...);
        write_row(fields);
    }

    static std::string field(double x) { return std::isnan(x) ? std::string() : format_double(x); }
    static std::string field(std::uint64_t x) { return std::to_string(x); }
    static std::string field(int x) { return std::to_string(x); }
    static std::string field(const std::string& s) { return s; }
    static std::string field(const char* s) { return s; }
    static std::string field(const std::optional<std::uint64_t>& x) { return x ? std::to_string(*x) : std::string(); }

private:
    void write_row(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) os_ << ',';
            os_ << quote(fields[i]);
        }
        os_ << '\n';
    }

    static std::string quote(const std::string& s) {
        if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
        std::string q = "\"";
        for (char c : s) {
            if (c == '"') q.push_back('"');
            q.push_back(c);
        }
        q.push_back('"');
        return q;
    }

    std::ostream& os_;
    std::size_t width_;
};

inline void write_seed_header(std::ostream& os, std::uint64_t seed) { os << "# seed=" << seed << '\n'; }

/// JSON numbers cannot be NaN; those become null.
inline json json_number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

// ---------------------------------------------------------------- law report

inline void write_law_csv(std::ostream& os, const LawReport& rep) {
    write_seed_header(os, rep.seed);
    CsvWriter w(os, {"n", "checkpoint", "mean", "sd", "exact_expectation", "karlin_constant"});
    for (const auto& c : rep.checkpoints) w.row(rep.n, c.time, c.mean, c.sd, c.exact_expectation, rep.karlin_constant);
}

inline json law_to_json(const LawReport& rep) {
    json rows = json::array();
    for (const auto& c : rep.checkpoints)
        rows.push_back({{"checkpoint", c.time},
                        {"mean", json_number(c.mean)},
                        {"sd", json_number(c.sd)},
                        {"mean_distinct", json_number(c.mean_distinct)},
                        {"sd_distinct", json_number(c.sd_distinct)},
                        {"exact_expectation", json_number(c.exact_expectation)}});
    return {{"n", rep.n},
            {"trials", rep.trials},
            {"seed", rep.seed},
            {"rho", json_number(rep.rho)},
            {"karlin_constant", json_number(rep.karlin_constant)},
            {"checkpoints", rows}};
}

// ---------------------------------------------------------------- constructions

inline json schedule_to_json(const BlockSchedule& s) {
    json levels = json::array();
    for (const auto& lv : s.levels())
        levels.push_back({{"j", lv.j},
                          {"L", lv.L},
                          {"N", lv.N},
                          {"m", lv.m()},
                          {"alphabet_first", lv.alphabet_first},
                          {"start", lv.start},
                          {"log_count", lv.count.log_count}});
    return {{"theta", s.theta().str()}, {"k1", s.k1()}, {"depth", s.depth()}, {"levels", levels}};
}

inline void write_linear_trace_csv(std::ostream& os, std::uint64_t seed, const std::vector<LinearTraceRow>& rows) {
    write_seed_header(os, seed);
    CsvWriter w(os, {"n", "D_n", "theta*n", "bound", "log_mass", "log_diam", "local_dim"});
    for (const auto& r : rows) w.row(r.n, r.D, r.theta_n, r.bound, r.log_mass, r.log_diam, r.local_dim);
}

inline json linear_trace_to_json(std::uint64_t seed, const std::vector<LinearTraceRow>& rows) {
    json a = json::array();
    for (const auto& r : rows)
        a.push_back({{"n", r.n},
                     {"D_n", r.D},
                     {"theta*n", r.theta_n},
                     {"bound", r.bound},
                     {"log_mass", r.log_mass},
                     {"log_diam", r.log_diam},
                     {"local_dim", json_number(r.local_dim)}});
    return {{"seed", seed}, {"rows", a}};
}

inline json sublinear_schedule_to_json(const SublinearSchedule& s) {
    json j{{"profile", to_string(s.profile().source())},
           {"horizon", s.horizon()},
           {"t", s.t()},
           {"threshold", s.threshold()},
           {"K_star", s.K_star()},
           {"s_K_star", s.s_K(s.K_star())},
           {"f_horizon", s.f(s.horizon())},
           {"K_horizon", s.K(s.horizon())},
           {"model", model_to_json(s.model())}};
    j["n_t"] = s.n_t() ? json(*s.n_t()) : json(nullptr);
    return j;
}

struct SublinearTraceRow {
    std::uint64_t n = 0;
    double log_ratio = 0.0;
    double free_part = 0.0;
    double forced_part = 0.0;
    std::uint64_t f = 0;
    std::uint64_t K = 0;
    std::uint64_t D = 0;
};

inline std::vector<SublinearTraceRow> sublinear_trace(const SublinearSchedule& sched, std::span<const std::uint64_t> word) {
    const auto tr = ratio_trace(sched, word);
    const auto D = distinct_trace(word);
    std::vector<SublinearTraceRow> rows;
    rows.reserve(word.size());
    for (std::uint64_t n = 1; n <= word.size(); ++n)
        rows.push_back({n, tr.log_ratio[n], tr.free_part[n], tr.forced_part[n], sched.f(n), sched.K(n), D[n]});
    return rows;
}

inline void write_sublinear_trace_csv(std::ostream& os, std::uint64_t seed, const std::vector<SublinearTraceRow>& rows) {
    write_seed_header(os, seed);
    CsvWriter w(os, {"n", "log_ratio", "free_part", "forced_part", "f_n", "K_n", "D_n"});
    for (const auto& r : rows) w.row(r.n, r.log_ratio, r.free_part, r.forced_part, r.f, r.K, r.D);
}

inline json sublinear_trace_to_json(std::uint64_t seed, const std::vector<SublinearTraceRow>& rows) {
    json a = json::array();
    for (const auto& r : rows)
        a.push_back({{"n", r.n},
                     {"log_ratio", r.log_ratio},
                     {"free_part", r.free_part},
                     {"forced_part", r.forced_part},
                     {"f_n", r.f},
                     {"K_n", r.K},
                     {"D_n", r.D}});
    return {{"seed", seed}, {"rows", a}};
}

// ---------------------------------------------------------------- cylinder sums

inline void write_cylsum_csv(std::ostream& os, const std::vector<CylinderSumRecord>& recs,
                             std::optional<std::uint64_t> seed) {
    if (seed) write_seed_header(os, *seed);
    CsvWriter w(os, {"n", "s", "theta", "mode", "value", "stderr", "truncation_deficit", "binomial_bound"});
    for (const auto& r : recs)
        w.row(r.n, r.s, r.theta.value(), to_string(r.mode), r.value, r.std_error, r.truncation_deficit, r.binomial_bound);
}

inline json cylsum_to_json(const CylinderSumRecord& r) {
    json j{{"n", r.n},
           {"s", r.s},
           {"theta", r.theta.str()},
           {"mode", to_string(r.mode)},
           {"value", json_number(r.value)},
           {"stderr", json_number(r.std_error)},
           {"truncation_deficit", json_number(r.truncation_deficit)},
           {"Z", json_number(r.Z)},
           {"probability", json_number(r.probability)},
           {"probability_stderr", json_number(r.probability_stderr)},
           {"binomial_bound", json_number(r.binomial_bound)}};
    j["alphabet_cap"] = r.alphabet_cap ? json(*r.alphabet_cap) : json(nullptr);
    if (r.mode == SumMode::monte_carlo) {
        j["trials"] = r.trials;
        j["seed"] = r.seed;
    }
    return j;
}

}  // namespace dds
