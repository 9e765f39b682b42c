// dds: command-line front end.
//
// Exit codes: 0 success, 2 usage, 3 validation, 4 suite failure.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dds/dds.hpp"
#include "dds/io.hpp"

namespace {

using dds::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitValidation = 3;
constexpr int kExitSuite = 4;

/// Bad arguments discovered after parsing.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Output failed its own invariant check.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Globals {
    std::string model = "luroth";
    std::optional<double> rho;
    std::optional<double> gamma;
    std::vector<double> prefix;
    std::string config;
    std::string seed_text;
    std::string format = "csv";
    std::string out;
    unsigned threads = 1;
};

struct RunConfig {
    json model_spec;
    std::uint64_t seed = dds::kDefaultSeed;
    bool json_out = false;
    std::string out;
    unsigned threads = 1;
};

std::uint64_t parse_seed(const std::string& s) {
    try {
        std::size_t used = 0;
        const auto v = std::stoull(s, &used, 0);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw UsageError("--seed: not an integer: '" + s + "'");
    }
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw UsageError(path + ": " + e.what());
    }
}

/// Config file first, then flags that were given explicitly.
RunConfig resolve(const Globals& g, const CLI::App& app) {
    RunConfig rc;
    rc.model_spec = {{"kind", "luroth"}};
    if (!g.config.empty()) {
        const json cfg = read_json_file(g.config);
        if (!cfg.is_object()) throw UsageError("--config: expected a JSON object");
        if (cfg.contains("model")) rc.model_spec = cfg.at("model");
        if (cfg.contains("seed")) {
            const auto& s = cfg.at("seed");
            rc.seed = s.is_string() ? parse_seed(s.get<std::string>()) : s.get<std::uint64_t>();
        }
        if (cfg.contains("format")) rc.json_out = cfg.at("format").get<std::string>() == "json";
        if (cfg.contains("out")) rc.out = cfg.at("out").get<std::string>();
        if (cfg.contains("threads")) rc.threads = cfg.at("threads").get<unsigned>();
    }
    const bool model_flag = app.count("--model") > 0;
    if (model_flag || app.count("--rho") || app.count("--gamma") || app.count("--prefix")) {
        if (model_flag) {
            if (!g.model.empty() && g.model.front() == '{') {
                try {
                    rc.model_spec = json::parse(g.model);
                } catch (const json::parse_error& e) {
                    throw UsageError(std::string("--model: ") + e.what());
                }
            } else {
                rc.model_spec = {{"kind", g.model}};
            }
        }
        if (g.rho) rc.model_spec["rho"] = *g.rho;
        if (g.gamma) rc.model_spec["gamma"] = *g.gamma;
        if (!g.prefix.empty()) rc.model_spec["prefix"] = g.prefix;
    }
    if (app.count("--seed")) rc.seed = parse_seed(g.seed_text);
    if (app.count("--format")) rc.json_out = g.format == "json";
    if (app.count("--out")) rc.out = g.out;
    if (app.count("--threads")) rc.threads = g.threads;
    if (rc.threads == 0) throw UsageError("--threads must be >= 1");
    return rc;
}

dds::WeightModel build_model(const RunConfig& rc) {
    try {
        return dds::model_from_json(rc.model_spec);
    } catch (const dds::Error& e) {
        throw UsageError(e.what());
    }
}

dds::Fraction parse_theta(const std::string& s) {
    dds::Fraction th;
    try {
        th = dds::Fraction::parse(s);
    } catch (const dds::Error& e) {
        throw UsageError(std::string("--theta: ") + e.what());
    }
    if (th.num() == 0 || th.num() > th.den()) throw UsageError("--theta must lie in (0, 1]");
    return th;
}

/// Writes to `path`, or stdout when it is empty or "-".
void emit(const std::string& path, const std::function<void(std::ostream&)>& body) {
    if (path.empty() || path == "-") {
        body(std::cout);
        std::cout.flush();
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw UsageError("cannot write " + path);
    body(f);
    if (!f) throw std::runtime_error("write failed: " + path);
}

void emit_json(const std::string& path, const json& j) {
    emit(path, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
}

// ---------------------------------------------------------------- weights

struct WeightsArgs {
    std::uint64_t k_max = 0;
    std::vector<std::uint64_t> solve_s;
    std::vector<std::uint64_t> tail;
    std::optional<double> potter_eps;
    std::uint64_t scan_limit = 100000;
};

void cmd_weights(const RunConfig& rc, const WeightsArgs& a) {
    const auto model = build_model(rc);
    if (a.k_max == 0 && a.solve_s.empty() && a.tail.empty() && !a.potter_eps)
        throw UsageError("weights: give at least one of --k-max, --solve-s, --tail, --potter");
    std::vector<std::tuple<std::string, std::uint64_t, double>> rows;
    dds::NeumaierSum cum;
    for (std::uint64_t k = 1; k <= a.k_max; ++k) {
        if (auto P = model.support_size(); P && k > *P) break;
        const double p = model.weight(k);
        cum.add(p);
        rows.emplace_back("p", k, p);
        rows.emplace_back("cumulative", k, cum.value());
    }
    for (auto K : a.solve_s) rows.emplace_back("s_K", K, dds::solve_s_K(model, K));
    for (auto M : a.tail) rows.emplace_back("tail", M, dds::tail_sum(model, M));
    std::optional<dds::PotterReport> pot;
    if (a.potter_eps) pot = dds::potter_scan(model, *a.potter_eps, a.scan_limit);

    if (rc.json_out) {
        json j{{"model", dds::model_to_json(model)}};
        json table = json::array();
        for (std::size_t i = 0; i + 1 < rows.size() && std::get<0>(rows[i]) == "p"; i += 2)
            table.push_back({{"k", std::get<1>(rows[i])}, {"p_k", std::get<2>(rows[i])}, {"cumulative", std::get<2>(rows[i + 1])}});
        j["weights"] = table;
        json sk = json::object(), tl = json::object();
        for (const auto& [q, k, v] : rows) {
            if (q == "s_K") sk[std::to_string(k)] = v;
            if (q == "tail") tl[std::to_string(k)] = v;
        }
        j["s_K"] = sk;
        j["tail"] = tl;
        if (pot)
            j["potter"] = {{"epsilon", pot->epsilon}, {"k_eps", pot->k_eps}, {"C_eps", pot->C_eps},
                           {"scan_limit", pot->scan_limit}, {"horizon_limited", pot->horizon_limited}};
        emit_json(rc.out, j);
        return;
    }
    emit(rc.out, [&](std::ostream& os) {
        dds::CsvWriter w(os, {"quantity", "k", "value"});
        for (const auto& [q, k, v] : rows) w.row(q, k, v);
        if (pot) {
            // C_eps holds from k = k_eps on
            w.row(std::string("potter_C_eps"), pot->k_eps, pot->C_eps);
        }
    });
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    std::uint64_t n = 1000;
    std::uint64_t trials = 100;
};

void cmd_simulate(const RunConfig& rc, const SimulateArgs& a) {
    const auto model = build_model(rc);
    if (a.n == 0 || a.trials == 0) throw UsageError("simulate: --n and --trials must be >= 1");
    const auto rep = dds::monte_carlo_law(model, a.n, a.trials, rc.seed, rc.threads);
    if (rc.json_out)
        emit_json(rc.out, dds::law_to_json(rep));
    else
        emit(rc.out, [&](std::ostream& os) { dds::write_law_csv(os, rep); });
}

// ---------------------------------------------------------------- construct

struct ConstructArgs {
    std::string theta = "1/2";
    std::uint64_t depth = 14;
    std::optional<std::uint64_t> k1;
    std::string profile = "sqrt";
    std::string profile_file;
    double beta = 0.5;
    double c = 1.0;
    double t = 0.5;
    std::uint64_t n = 10000;
    std::uint64_t point = 0;
    std::string words;
    std::string schedule;
};

void write_word_file(const std::string& path, std::uint64_t seed, const dds::DigitWord& w) {
    if (path.empty()) return;
    emit(path, [&](std::ostream& os) {
        dds::write_seed_header(os, seed);
        os << dds::format_word(w) << '\n';
    });
}

void cmd_construct_linear(const RunConfig& rc, const ConstructArgs& a) {
    const auto model = build_model(rc);
    const auto theta = parse_theta(a.theta);
    if (a.depth == 0) throw UsageError("--depth must be >= 1");
    if (a.k1 && *a.k1 == 0) throw UsageError("--k1 must be >= 1");
    const auto sched = dds::build_schedule(theta, a.k1.value_or(dds::default_k1(model)), a.depth);
    dds::Rng rng(rc.seed, a.point);
    const auto w = dds::sample_point(sched, a.depth, rng);
    if (!dds::linear_sandwich_holds(sched, w)) throw ValidationError("construct linear: sandwich theta n <= D_n < theta n + J violated");
    const auto rows = dds::linear_trace(sched, model, w);
    write_word_file(a.words, rc.seed, w);
    if (!a.schedule.empty()) emit_json(a.schedule, dds::schedule_to_json(sched));
    if (rc.json_out)
        emit_json(rc.out, dds::linear_trace_to_json(rc.seed, rows));
    else
        emit(rc.out, [&](std::ostream& os) { dds::write_linear_trace_csv(os, rc.seed, rows); });
}

dds::AdmissibleProfile build_profile(const ConstructArgs& a) {
    json spec;
    if (!a.profile_file.empty()) {
        spec = read_json_file(a.profile_file);
        if (spec.is_object() && !spec.contains("horizon") && !spec.contains("table")) spec["horizon"] = a.n;
    } else {
        spec = {{"kind", a.profile}, {"horizon", a.n}, {"beta", a.beta}, {"c", a.c}};
    }
    try {
        return dds::profile_from_json(spec);
    } catch (const dds::NotAdmissible&) {
        throw;
    } catch (const dds::DomainError& e) {
        throw UsageError(e.what());
    }
}

void cmd_construct_sublinear(const RunConfig& rc, const ConstructArgs& a) {
    const auto model = build_model(rc);
    if (!(a.t > 0.0 && a.t < 1.0)) throw UsageError("--t must lie in (0, 1)");
    if (a.n == 0) throw UsageError("--n must be >= 1");
    const auto profile = build_profile(a);
    if (profile.horizon() < a.n) throw UsageError("--n exceeds the profile horizon");
    const auto sched = dds::build_sublinear_schedule(profile, a.t, model);
    dds::Rng rng(rc.seed, a.point);
    const auto w = dds::sample_point_sublinear(sched, a.n, rng);
    if (!dds::sublinear_sandwich_holds(sched, w))
        throw ValidationError("construct sublinear: sandwich f(n) <= D_n <= f(n) + K_n violated");
    const auto rows = dds::sublinear_trace(sched, w);
    write_word_file(a.words, rc.seed, w);
    if (!a.schedule.empty()) emit_json(a.schedule, dds::sublinear_schedule_to_json(sched));
    if (rc.json_out)
        emit_json(rc.out, dds::sublinear_trace_to_json(rc.seed, rows));
    else
        emit(rc.out, [&](std::ostream& os) { dds::write_sublinear_trace_csv(os, rc.seed, rows); });
}

// ---------------------------------------------------------------- cylsum

struct CylsumArgs {
    std::vector<std::uint64_t> n{4};
    std::vector<double> s{0.75};
    std::vector<std::string> theta{"1"};
    std::string mode = "exact";
    std::optional<std::uint64_t> cap;
    std::uint64_t trials = 100000;
    bool bound = false;
};

void cmd_cylsum(const RunConfig& rc, const CylsumArgs& a) {
    const auto model = build_model(rc);
    const bool exact = a.mode == "exact" || a.mode == "both";
    const bool mc = a.mode == "mc" || a.mode == "both";
    if (exact && model.infinite() && !a.cap) throw UsageError("cylsum: exact mode on an infinite model needs --cap");
    for (double s : a.s)
        if (!(s > 0.0 && s <= 1.0)) throw UsageError("--s must lie in (0, 1]");
    std::vector<dds::Fraction> thetas;
    for (const auto& t : a.theta) thetas.push_back(parse_theta(t));

    std::vector<dds::CylinderSumRecord> recs;
    for (auto n : a.n) {
        if (n == 0) throw UsageError("--n must be >= 1");
        for (double s : a.s)
            for (const auto th : thetas) {
                std::vector<dds::CylinderSumRecord> here;
                if (exact) here.push_back(dds::cylinder_sum_exact(model, n, s, th, a.cap));
                if (mc) here.push_back(dds::cylinder_sum_mc(model, n, s, th, a.trials, rc.seed, rc.threads, a.cap));
                if (a.bound) {
                    const double b = std::exp(dds::log_cylinder_sum_bound(model, n, s, th));
                    for (auto& r : here) r.binomial_bound = b;
                }
                recs.insert(recs.end(), here.begin(), here.end());
            }
    }
    const std::optional<std::uint64_t> seed = mc ? std::optional<std::uint64_t>(rc.seed) : std::nullopt;
    if (rc.json_out) {
        json rows = json::array();
        for (const auto& r : recs) rows.push_back(dds::cylsum_to_json(r));
        json j{{"model", dds::model_to_json(model)}, {"rows", rows}};
        if (seed) j["seed"] = *seed;
        emit_json(rc.out, j);
    } else {
        emit(rc.out, [&](std::ostream& os) { dds::write_cylsum_csv(os, recs, seed); });
    }
}

// ---------------------------------------------------------------- verify

int cmd_verify(const RunConfig& rc, bool full, bool fail_inject) {
    dds::verify::Options opt;
    opt.seed = rc.seed;
    opt.threads = rc.threads;
    opt.fail_inject = fail_inject;
    const auto results = full ? dds::verify::full_suite(opt) : dds::verify::quick_suite(opt);
    const bool ok = dds::verify::all_passed(results);
    if (rc.json_out) {
        json rows = json::array();
        for (const auto& r : results) {
            json row{{"name", r.name}, {"passed", r.passed}, {"detail", r.detail}, {"seconds", r.seconds}};
            row["seed"] = r.seed ? json(*r.seed) : json(nullptr);
            rows.push_back(row);
        }
        emit_json(rc.out, {{"suite", full ? "full" : "quick"}, {"passed", ok}, {"checks", rows}});
    } else {
        emit(rc.out, [&](std::ostream& os) {
            for (const auto& r : results) {
                os << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail;
                if (r.seed) os << " [seed=" << *r.seed << "]";
                char t[32];
                std::snprintf(t, sizeof t, " (%.2fs)", r.seconds);
                os << t << '\n';
            }
            const auto failed = std::count_if(results.begin(), results.end(), [](const auto& r) { return !r.passed; });
            os << (ok ? "verify: all " : "verify: ") << (ok ? std::to_string(results.size()) + " checks passed"
                                                            : std::to_string(failed) + " of " +
                                                                  std::to_string(results.size()) + " checks failed")
               << '\n';
        });
    }
    return ok ? kExitOk : kExitSuite;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distinct-digit sets: simulation, constructions and verification"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--model", g.model, "Model kind (luroth, power, power-log, explicit-prefix) or a JSON spec");
    app.add_option("--rho", g.rho, "Tail index rho");
    app.add_option("--gamma", g.gamma, "Log exponent gamma (power-log)");
    app.add_option("--prefix", g.prefix, "Explicit prefix weights")->delimiter(',');
    app.add_option("--config", g.config, "JSON config file; flags override its values");
    app.add_option("--seed", g.seed_text, "Random seed (default 0xD1617)");
    app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--out", g.out, "Output file (default stdout)");
    app.add_option("--threads", g.threads, "Worker threads");

    WeightsArgs wa;
    auto* weights = app.add_subcommand("weights", "Weights, partial sums, s_K and tails");
    weights->add_option("--k-max", wa.k_max, "Print p_k for k <= K");
    weights->add_option("--solve-s", wa.solve_s, "Solve sum_{k<=K} p_k^s = 1")->delimiter(',');
    weights->add_option("--tail", wa.tail, "Tail sum T(M)")->delimiter(',');
    weights->add_option("--potter", wa.potter_eps, "Empirical Potter constants for epsilon");
    weights->add_option("--scan-limit", wa.scan_limit, "Potter scan limit");

    SimulateArgs sa;
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo occupancy law");
    simulate->add_option("--n", sa.n, "Digits per trial");
    simulate->add_option("--trials", sa.trials, "Number of trials");

    ConstructArgs ca;
    auto* construct = app.add_subcommand("construct", "Sample a point of a construction and trace it");
    construct->require_subcommand(1);
    auto* linear = construct->add_subcommand("linear", "Block construction for a linear rate theta");
    linear->add_option("--theta", ca.theta, "Rate theta in (0, 1], decimal or p/q");
    linear->add_option("--depth", ca.depth, "Number of levels J");
    linear->add_option("--k1", ca.k1, "First alphabet size floor (default from the model)");
    auto* sublinear = construct->add_subcommand("sublinear", "Tilted construction for a sublinear profile");
    sublinear->add_option("--profile", ca.profile, "Profile kind")->check(CLI::IsMember({"sqrt", "power", "log"}));
    sublinear->add_option("--profile-file", ca.profile_file, "Profile spec JSON file");
    sublinear->add_option("--beta", ca.beta, "Exponent for --profile power");
    sublinear->add_option("--c", ca.c, "Scale for --profile power/log");
    sublinear->add_option("--t", ca.t, "Target dimension t in (0, 1)");
    sublinear->add_option("--n", ca.n, "Word length (and profile horizon)");
    for (auto* sc : {linear, sublinear}) {
        sc->add_option("--point", ca.point, "Substream index of the sampled point");
        sc->add_option("--words", ca.words, "Write the digit word to this file");
        sc->add_option("--schedule", ca.schedule, "Write the schedule as JSON to this file");
    }

    CylsumArgs ya;
    auto* cylsum = app.add_subcommand("cylsum", "Cylinder sums S_n(s, theta), exact or Monte Carlo");
    cylsum->add_option("--n", ya.n, "Word lengths")->delimiter(',');
    cylsum->add_option("--s", ya.s, "Exponents s")->delimiter(',');
    cylsum->add_option("--theta", ya.theta, "Rates theta")->delimiter(',');
    cylsum->add_option("--mode", ya.mode, "exact, mc or both")->check(CLI::IsMember({"exact", "mc", "both"}));
    cylsum->add_option("--cap", ya.cap, "Alphabet cap");
    cylsum->add_option("--trials", ya.trials, "Monte Carlo trials");
    cylsum->add_flag("--bound", ya.bound, "Fill the binomial_bound column");

    bool fail_inject = false;
    auto* verify = app.add_subcommand("verify", "Run the invariant suites");
    verify->require_subcommand(1);
    auto* quick = verify->add_subcommand("quick", "Module invariants (under a minute)");
    auto* full = verify->add_subcommand("full", "Module invariants plus acceptance A1-A10");
    for (auto* sc : {quick, full}) sc->add_flag("--fail-inject", fail_inject, "Add a failing check (harness self-test)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        const RunConfig rc = resolve(g, app);
        if (*weights) cmd_weights(rc, wa);
        if (*simulate) cmd_simulate(rc, sa);
        if (*linear) cmd_construct_linear(rc, ca);
        if (*sublinear) cmd_construct_sublinear(rc, ca);
        if (*cylsum) cmd_cylsum(rc, ya);
        if (*verify) return cmd_verify(rc, full->parsed(), fail_inject);
        return kExitOk;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const dds::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    }
}
