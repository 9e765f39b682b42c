#pragma once

// Verification suites: the acceptance criteria A1-A10 and smaller module
// invariant checks. Every check reports a name, a verdict, a one-line detail
// and the seed that reproduces it.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include <boost/math/special_functions/zeta.hpp>

#include "dds/codec.hpp"
#include "dds/errors.hpp"
#include "dds/linear.hpp"
#include "dds/numeric.hpp"
#include "dds/occupancy.hpp"
#include "dds/rng.hpp"
#include "dds/sublinear.hpp"
#include "dds/tilt.hpp"
#include "dds/weights.hpp"

namespace dds::verify {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
    std::optional<std::uint64_t> seed;
    double seconds = 0.0;
};

struct Options {
    std::uint64_t seed = kDefaultSeed;
    unsigned threads = 1;
    bool fail_inject = false;
};

struct Outcome {
    bool passed = false;
    std::string detail;
};

inline std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

/// Runs `body`, timing it; any exception counts as a failure.
inline CheckResult run_check(std::string name, std::optional<std::uint64_t> seed, const std::function<Outcome()>& body) {
    CheckResult r;
    r.name = std::move(name);
    r.seed = seed;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        const auto o = body();
        r.passed = o.passed;
        r.detail = o.detail;
    } catch (const std::exception& e) {
        r.passed = false;
        r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

inline bool all_passed(const std::vector<CheckResult>& rs) {
    return std::all_of(rs.begin(), rs.end(), [](const CheckResult& r) { return r.passed; });
}

// ---------------------------------------------------------------- shared pieces

/// Number of words in [1..N]^L whose prefix-distinct count is ceil(theta t) at every t.
inline std::uint64_t enumerate_admissible_blocks(std::uint64_t N, std::uint64_t L, Fraction theta) {
    std::vector<std::uint64_t> w(L, 0);
    std::uint64_t count = 0;
    while (true) {
        std::uint64_t seen = 0, distinct = 0;
        bool ok = true;
        for (std::uint64_t t = 1; t <= L && ok; ++t) {
            const std::uint64_t bit = std::uint64_t{1} << w[t - 1];
            if (!(seen & bit)) {
                seen |= bit;
                ++distinct;
            }
            ok = distinct == theta.ceil_mul(t);
        }
        if (ok) ++count;
        std::uint64_t i = 0;
        while (i < L && w[i] == N - 1) w[i++] = 0;
        if (i == L) break;
        ++w[i];
    }
    return count;
}

/// Root of p^s + q^s = 1 on [0, 1] by plain bisection.
inline double two_symbol_exponent(double p, double q) {
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (std::pow(p, mid) + std::pow(q, mid) > 1.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

inline std::vector<Fraction> acceptance_thetas() { return {Fraction(3, 10), Fraction(1, 2), Fraction(1, 1)}; }

inline Outcome check_linear_sandwich(const WeightModel& model, std::uint64_t J, std::uint64_t seeds, std::uint64_t seed) {
    std::uint64_t positions = 0;
    for (const auto th : acceptance_thetas()) {
        const auto sched = build_schedule(th, default_k1(model), J);
        for (std::uint64_t i = 0; i < seeds; ++i) {
            Rng rng(seed, i);
            const auto w = sample_point(sched, J, rng);
            if (w.size() != sched.total_length(J) || !linear_sandwich_holds(sched, w))
                return {false, fmt("sandwich broken: theta=%s point %llu", th.str().c_str(), (unsigned long long)i)};
            positions += w.size();
        }
    }
    return {true, fmt("%llu positions checked", (unsigned long long)positions)};
}

inline Outcome check_block_counts(std::uint64_t N_max, std::uint64_t L_max) {
    std::uint64_t cases = 0;
    for (const auto th : acceptance_thetas())
        for (std::uint64_t N = 1; N <= N_max; ++N)
            for (std::uint64_t L = 1; L <= L_max; ++L) {
                const std::uint64_t brute = enumerate_admissible_blocks(N, L, th);
                std::uint64_t formula = 0;
                try {
                    const auto c = count_blocks(N, L, th);
                    formula = static_cast<std::uint64_t>(*c.exact);
                } catch (const InfeasibleError&) {
                    formula = 0;
                }
                ++cases;
                if (formula != brute)
                    return {false, fmt("N=%llu L=%llu theta=%s: formula %llu, enumeration %llu", (unsigned long long)N,
                                       (unsigned long long)L, th.str().c_str(), (unsigned long long)formula,
                                       (unsigned long long)brute)};
            }
    return {true, fmt("%llu (N, L, theta) cases equal", (unsigned long long)cases)};
}

inline Outcome check_tilt_identity(std::uint64_t n_max, std::uint64_t cap_max) {
    const auto model = WeightModel::luroth();
    double worst = 0.0;
    std::uint64_t cases = 0;
    for (double s : {0.6, 0.75, 0.9})
        for (const auto th : {Fraction(2, 5), Fraction(4, 5), Fraction(1, 1)})
            for (std::uint64_t cap = 1; cap <= cap_max; ++cap)
                for (std::uint64_t n = 1; n <= n_max; ++n) {
                    const auto rec = cylinder_sum_exact(model, n, s, th, cap);
                    const double rhs = tilted_side(rec);
                    const double scale = std::max(std::abs(rec.value), std::abs(rhs));
                    const double rel = scale == 0.0 ? 0.0 : std::abs(rec.value - rhs) / scale;
                    worst = std::max(worst, rel);
                    ++cases;
                }
    return {worst <= 1e-12, fmt("%llu cases, worst relative gap %.3g", (unsigned long long)cases, worst)};
}

inline Outcome check_tilt_mc(std::uint64_t trials, std::uint64_t seed, unsigned threads) {
    const auto model = WeightModel::luroth();
    const std::uint64_t n = 6, cap = 6;
    std::string detail;
    bool ok = true;
    const std::pair<double, Fraction> cfgs[] = {{0.6, Fraction(2, 5)}, {0.75, Fraction(4, 5)}, {0.9, Fraction(1, 1)}};
    for (const auto& [s, th] : cfgs) {
        const auto ex = cylinder_sum_exact(model, n, s, th, cap);
        const auto mc = cylinder_sum_mc(model, n, s, th, trials, seed, threads, cap);
        const double z = mc.std_error > 0 ? std::abs(mc.value - ex.value) / mc.std_error
                                          : (mc.value == ex.value ? 0.0 : INFINITY);
        if (!(z <= 3.0)) ok = false;
        detail += fmt("%s(s=%.2f,theta=%s) z=%.2f", detail.empty() ? "" : "; ", s, th.str().c_str(), z);
    }
    return {ok, detail};
}

inline Outcome check_tail_ratio() {
    const auto model = WeightModel::luroth();
    double lo = INFINITY, hi = -INFINITY;
    for (std::uint64_t M : {10ULL, 100ULL, 1000ULL, 10000ULL}) {
        const double r = tilted_tail_sum(model, M, 0.75) * std::sqrt(static_cast<double>(M));
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    return {lo >= 1.5 && hi <= 3.0, fmt("ratio range [%.5f, %.5f]", lo, hi)};
}

inline Outcome check_lemma(std::uint64_t n_max, std::uint64_t value_max) {
    const auto rep = distinct_forces_large_check(n_max, value_max);
    if (!rep.passed) {
        std::string ce;
        for (auto v : rep.counterexample) ce += (ce.empty() ? "" : ",") + std::to_string(v);
        return {false, fmt("counterexample (%s) with m=%llu", ce.c_str(), (unsigned long long)rep.counterexample_m)};
    }
    return {true, fmt("%llu tuples, %llu checks, 0 counterexamples", (unsigned long long)rep.tuples,
                      (unsigned long long)rep.checks)};
}

inline Outcome check_s_K(std::uint64_t K_max) {
    const auto model = WeightModel::luroth();
    if (solve_s_K(model, 1) != 0.0) return {false, "s_1 != 0"};
    std::vector<double> logs(K_max);
    for (std::uint64_t k = 1; k <= K_max; ++k) logs[k - 1] = model.log_weight(k);
    double prev = 0.0, worst = 0.0;
    for (std::uint64_t K = 2; K <= K_max; ++K) {
        const double s = solve_s_K(model, K);
        if (s < prev) return {false, fmt("s_K decreases at K=%llu", (unsigned long long)K)};
        NeumaierSum acc;
        for (std::uint64_t k = 0; k < K; ++k) acc.add(std::exp(s * logs[k]));
        worst = std::max(worst, std::abs(acc.value() - 1.0));
        prev = s;
    }
    const double s2 = solve_s_K(model, 2);
    const double oracle = two_symbol_exponent(0.5, 1.0 / 6.0);
    bool ok = worst < 1e-12 && std::abs(s2 - 0.601) <= 1e-3 && std::abs(s2 - oracle) < 1e-12;
    std::string detail = fmt("max residual %.3g, s_2=%.6f (bisection %.6f)", worst, s2, oracle);
    if (K_max >= 1000) {
        const double s1000 = solve_s_K(model, 1000);
        ok = ok && s1000 > 0.9;
        detail += fmt(", s_1000=%.6f", s1000);
    }
    return {ok, detail};
}

inline Outcome check_sublinear(std::uint64_t horizon, std::uint64_t seeds, std::uint64_t seed) {
    const auto model = WeightModel::luroth();
    const auto profile = AdmissibleProfile::sqrt(horizon);
    const std::uint64_t half = horizon / 2;
    std::string detail;
    for (double t : {0.5, 0.9}) {
        const auto sched = build_sublinear_schedule(profile, t, model);
        for (std::uint64_t i = 0; i < seeds; ++i) {
            Rng rng(seed, i);
            const auto w = sample_point_sublinear(sched, horizon, rng);
            if (!sublinear_sandwich_holds(sched, w))
                return {false, fmt("sandwich broken: t=%.1f point %llu", t, (unsigned long long)i)};
            const auto tr = ratio_trace(sched, w);
            const double early = *std::max_element(tr.log_ratio.begin() + 1, tr.log_ratio.begin() + half + 1);
            const double late = *std::max_element(tr.log_ratio.begin() + half, tr.log_ratio.end());
            if (!(late < early))
                return {false, fmt("no decay: t=%.1f point %llu, max early %.4g, max late %.4g", t,
                                   (unsigned long long)i, early, late)};
            if (i == 0) detail += fmt("%st=%.1f: K*=%llu, early max %.3g, late max %.3g", detail.empty() ? "" : "; ", t,
                                      (unsigned long long)sched.K_star(), early, late);
        }
    }
    return {true, detail};
}

// ---------------------------------------------------------------- acceptance

inline CheckResult acceptance_a1(const Options& o) {
    return run_check("A1 luroth occupancy law", o.seed, [&]() -> Outcome {
        const auto model = WeightModel::luroth();
        const std::uint64_t n = 1'000'000;
        const auto rep = monte_carlo_law(model, n, 100, o.seed, o.threads);
        const auto& f = rep.final();
        const double expected = expected_distinct(model, n);
        const double rel = std::abs(f.mean_distinct - expected) / expected;
        const double lo = std::sqrt(std::numbers::pi) - 0.06, hi = std::sqrt(std::numbers::pi) + 0.06;
        return {f.mean >= lo && f.mean <= hi && rel <= 0.01,
                fmt("mean D_n/sqrt(n)=%.5f in [%.4f, %.4f]; mean D_n=%.2f vs E D_n=%.2f (rel %.2e)", f.mean, lo, hi,
                    f.mean_distinct, expected, rel)};
    });
}

inline CheckResult acceptance_a2(const Options& o) {
    return run_check("A2 power-law occupancy", o.seed, [&]() -> Outcome {
        const auto model = WeightModel::power(3.0);
        const std::uint64_t n = 1'000'000;
        const auto rep = monte_carlo_law(model, n, 50, o.seed, o.threads);
        const auto& f = rep.final();
        const double expected = expected_distinct(model, n);
        const double rel = std::abs(f.mean_distinct - expected) / expected;
        const double target = karlin_constant(3.0, 1.0 / boost::math::zeta(3.0));
        std::size_t best = 0;
        for (std::size_t i = 0; i < rep.checkpoints.size(); ++i)
            if (std::abs(rep.checkpoints[i].mean - target) < std::abs(rep.checkpoints[best].mean - target)) best = i;
        const bool final_closest = best + 1 == rep.checkpoints.size();
        return {rel <= 0.01 && final_closest,
                fmt("mean D_n=%.3f vs E D_n=%.3f (rel %.2e); karlin %.5f, final mean %.5f, closest checkpoint t=%llu",
                    f.mean_distinct, expected, rel, target, f.mean, (unsigned long long)rep.checkpoints[best].time)};
    });
}

inline CheckResult acceptance_a3(const Options& o) {
    return run_check("A3 linear sandwich", o.seed,
                     [&] { return check_linear_sandwich(WeightModel::luroth(), 14, 10, o.seed); });
}

inline CheckResult acceptance_a4(const Options&) {
    return run_check("A4 block-count formula", std::nullopt, [] { return check_block_counts(5, 6); });
}

inline CheckResult acceptance_a5(const Options& o) {
    return run_check("A5 local dimension trend", o.seed, [&]() -> Outcome {
        const auto model = WeightModel::luroth();
        const auto sched = build_schedule(Fraction(1, 2), default_k1(model), 14);
        const std::uint64_t points = 10;
        double d6 = 0.0, d14 = 0.0;
        for (std::uint64_t i = 0; i < points; ++i) {
            Rng rng(o.seed, i);
            const auto w = sample_point(sched, 14, rng);
            d14 += local_dimension(sched, model, w);
            d6 += local_dimension(sched, model, std::span<const std::uint64_t>(w.data(), sched.total_length(6)));
        }
        d6 /= points;
        d14 /= points;
        return {d14 >= 0.40 && d14 <= 0.60 && std::abs(d14 - 0.5) < std::abs(d6 - 0.5),
                fmt("mean over %llu points: depth 14 -> %.5f, depth 6 -> %.5f", (unsigned long long)points, d14, d6)};
    });
}

inline CheckResult acceptance_a6(const Options& o) {
    return run_check("A6 change-of-measure identity", o.seed, [&]() -> Outcome {
        const auto id = check_tilt_identity(6, 6);
        const auto mc = check_tilt_mc(1'000'000, o.seed, o.threads);
        return {id.passed && mc.passed, id.detail + "; MC " + mc.detail};
    });
}

inline CheckResult acceptance_a7(const Options&) {
    return run_check("A7 tilted tail numerics", std::nullopt, [] { return check_tail_ratio(); });
}

inline CheckResult acceptance_a8(const Options& o) {
    return run_check("A8 sublinear sandwich and decay", o.seed, [&] { return check_sublinear(100'000, 5, o.seed); });
}

inline CheckResult acceptance_a9(const Options&) {
    return run_check("A9 distinct-values lemma", std::nullopt, [] { return check_lemma(6, 6); });
}

inline CheckResult acceptance_a10(const Options&) {
    return run_check("A10 s_K solver", std::nullopt, [] { return check_s_K(10'000); });
}

inline std::vector<std::function<CheckResult(const Options&)>> acceptance_checks() {
    return {acceptance_a1, acceptance_a2, acceptance_a3, acceptance_a4, acceptance_a5,
            acceptance_a6, acceptance_a7, acceptance_a8, acceptance_a9, acceptance_a10};
}

// ---------------------------------------------------------------- module suites

inline std::vector<CheckResult> quick_suite(const Options& o) {
    std::vector<CheckResult> out;
    const auto luroth = WeightModel::luroth();

    out.push_back(run_check("weights: luroth tail telescopes", std::nullopt, [&]() -> Outcome {
        double worst = 0.0;
        for (std::uint64_t M : {1ULL, 5ULL, 100ULL, 12345ULL}) {
            worst = std::max(worst, std::abs(tail_sum(luroth, M) * static_cast<double>(M) - 1.0));
        }
        return {worst < 1e-12, fmt("max |M T(M) - 1| = %.3g", worst)};
    }));

    out.push_back(run_check("weights: models normalize", std::nullopt, [&]() -> Outcome {
        double worst = 0.0;
        const WeightModel models[] = {WeightModel::power(1.5), WeightModel::power(3.0), WeightModel::power_log(2.0, 1.0),
                                      WeightModel::explicit_prefix({0.3, 0.1}, 2.5)};
        for (const auto& m : models) {
            NeumaierSum acc;
            for (std::uint64_t k = 1; k < 2000; ++k) acc.add(m.weight(k));
            acc.add(tail_sum(m, 2000));
            worst = std::max(worst, std::abs(acc.value() - 1.0));
        }
        return {worst < 1e-10, fmt("max |sum p_k - 1| = %.3g", worst)};
    }));

    out.push_back(run_check("weights: sampler frequencies", o.seed, [&]() -> Outcome {
        Rng rng(o.seed, 101);
        const std::uint64_t draws = 200'000, bins = 8;
        std::vector<double> obs(bins + 1, 0.0);
        for (std::uint64_t i = 0; i < draws; ++i) ++obs[std::min(sample_digit(luroth, rng.uniform_open()), bins + 1) - 1];
        double chi2 = 0.0;
        for (std::uint64_t k = 1; k <= bins + 1; ++k) {
            const double p = k <= bins ? luroth.weight(k) : tail_sum(luroth, bins + 1);
            const double e = p * static_cast<double>(draws);
            chi2 += (obs[k - 1] - e) * (obs[k - 1] - e) / e;
        }
        return {chi2 < 27.88, fmt("chi2 = %.2f on %llu dof (cut 27.88)", chi2, (unsigned long long)bins)};
    }));

    out.push_back(run_check("weights: s_K solver", std::nullopt, [] { return check_s_K(300); }));

    out.push_back(run_check("codec: encode inverts cylinder", o.seed, [&]() -> Outcome {
        Rng rng(o.seed, 102);
        for (int i = 0; i < 200; ++i) {
            DigitWord w(1 + rng.below(6));
            for (auto& d : w) d = 1 + rng.below(9);
            const auto c = cylinder(luroth, w);
            const Rational mid = *c.left_exact + *c.diam_exact / 2;
            if (encode(luroth, mid, w.size()) != w) return {false, fmt("round trip failed at sample %d", i)};
        }
        return {true, "200 random words"};
    }));

    out.push_back(run_check("occupancy: expected_distinct vs direct sum", std::nullopt, [&]() -> Outcome {
        double worst = 0.0;
        for (std::uint64_t n : {1ULL, 10ULL, 100ULL}) {
            long double direct = 0.0L;
            for (std::uint64_t k = 1; k <= 2'000'000; ++k) direct += 1.0L - std::pow(1.0L - 1.0L / ((long double)k * (k + 1)), (long double)n);
            const long double tail = (long double)n / 2'000'001.0L;
            worst = std::max(worst, (double)std::abs(expected_distinct(luroth, n) - (direct + tail)));
        }
        return {worst < 1e-4, fmt("max gap %.3g", worst)};
    }));

    out.push_back(run_check("occupancy: counter vs set", o.seed, [&]() -> Outcome {
        Rng rng(o.seed, 103);
        DistinctCounter c;
        std::unordered_set<std::uint64_t> ref;
        for (int i = 0; i < 100'000; ++i) {
            const std::uint64_t d = sample_digit(luroth, rng.uniform_open());
            c.feed(d);
            ref.insert(d);
            if (c.count() != ref.size()) return {false, fmt("mismatch after %d digits", i + 1)};
        }
        return {true, fmt("%zu distinct in 100000 digits", ref.size())};
    }));

    out.push_back(run_check("linear: block counts vs enumeration", std::nullopt, [] { return check_block_counts(4, 5); }));
    out.push_back(run_check("linear: sandwich", o.seed, [&] { return check_linear_sandwich(luroth, 10, 3, o.seed); }));
    out.push_back(run_check("linear: mass additivity", o.seed, [&]() -> Outcome {
        const auto sched = BlockSchedule::custom(Fraction(1, 2), {{2, 3}, {4, 3}});
        Rng rng(o.seed, 104);
        const auto w = sample_point(sched, 2, rng);
        const double total = mu_log_mass(sched, w);
        const double parts = -sched.level(1).count.log_count - sched.level(2).count.log_count;
        return {std::abs(total - parts) < 1e-12, fmt("ln mu = %.12f vs %.12f", total, parts)};
    }));

    out.push_back(run_check("sublinear: sandwich and decay", o.seed, [&] { return check_sublinear(20'000, 2, o.seed); }));
    out.push_back(run_check("tilt: identity grid", std::nullopt, [] { return check_tilt_identity(5, 5); }));
    out.push_back(run_check("tilt: MC agreement", o.seed, [&] { return check_tilt_mc(100'000, o.seed, o.threads); }));
    out.push_back(run_check("tilt: tail ratio", std::nullopt, [] { return check_tail_ratio(); }));
    out.push_back(run_check("tilt: distinct-values lemma", std::nullopt, [] { return check_lemma(5, 5); }));

    if (o.fail_inject)
        out.push_back(run_check("harness: injected failure", o.seed, []() -> Outcome { return {false, "fail-inject requested"}; }));
    return out;
}

inline std::vector<CheckResult> full_suite(const Options& o) {
    auto out = quick_suite(o);
    for (const auto& a : acceptance_checks()) out.push_back(a(o));
    return out;
}

}  // namespace dds::verify
