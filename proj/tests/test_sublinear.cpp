#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "dds/sublinear.hpp"

using namespace dds;

namespace {

// Oracle: root of sum_{k<=K} p_k^s = 1 by plain bisection on weights given in sorted order.
double bisect_s(const std::vector<double>& p) {
    static std::map<std::vector<double>, double> memo;
    if (auto it = memo.find(p); it != memo.end()) return it->second;
    if (p.size() == 1) return 0.0;
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        long double acc = 0.0L;
        for (double x : p) acc += std::pow(static_cast<long double>(x), static_cast<long double>(mid));
        (acc > 1.0L ? lo : hi) = mid;
    }
    return memo[p] = 0.5 * (lo + hi);
}

double luroth_p(std::uint64_t k) { return 1.0 / (static_cast<double>(k) * static_cast<double>(k + 1)); }

std::vector<double> luroth_head(std::uint64_t K) {
    std::vector<double> p;
    for (std::uint64_t k = 1; k <= K; ++k) p.push_back(luroth_p(k));
    return p;
}

const SublinearSchedule& sqrt_schedule(double t) {
    static const auto s5 = build_sublinear_schedule(AdmissibleProfile::sqrt(100000), 0.5, WeightModel::luroth());
    static const auto s9 = build_sublinear_schedule(AdmissibleProfile::sqrt(100000), 0.9, WeightModel::luroth());
    return t == 0.5 ? s5 : s9;
}

}  // namespace

TEST(AdmissibleProfile, SqrtIsFloorSqrt) {
    const auto f = AdmissibleProfile::sqrt(100000);
    EXPECT_EQ(f.source(), ProfileSource::builtin_sqrt);
    for (std::uint64_t n = 1; n <= 100000; ++n) ASSERT_EQ(f(n), static_cast<std::uint64_t>(std::floor(std::sqrt(static_cast<long double>(n)))));
    const auto g = make_admissible([](std::uint64_t n) { return std::sqrt(static_cast<double>(n)); }, 100000);
    EXPECT_EQ(g.values(), f.values());
}

TEST(AdmissibleProfile, EnvelopeOfFiveSqrt) {
    const std::uint64_t H = 100000;
    const auto f = AdmissibleProfile::power(0.5, 5.0, H);
    // oracle: run the envelope recursion directly in long double
    long long prev = 0;
    for (std::uint64_t n = 1; n <= H; ++n) {
        const long long target = static_cast<long long>(std::floor(5.0L * std::sqrt(static_cast<long double>(n))));
        prev = std::min(prev + 1, target);
        ASSERT_EQ(f(n), static_cast<std::uint64_t>(prev)) << n;
    }
    for (std::uint64_t n = 1; n <= 25; ++n) EXPECT_EQ(f(n), n);
    for (std::uint64_t n = 25; n <= H; n += 97) EXPECT_EQ(f(n), static_cast<std::uint64_t>(std::floor(5.0 * std::sqrt(n))));
    EXPECT_EQ(f(H), 1581u);
}

TEST(AdmissibleProfile, Rejections) {
    try {
        make_admissible([](std::uint64_t n) { return n / 2.0; }, 100000);
        FAIL() << "linear growth accepted";
    } catch (const NotAdmissible& e) {
        EXPECT_EQ(e.clause(), "f log f / n -> 0");
    }
    try {
        AdmissibleProfile::from_table({1, 3, 3, 4});
        FAIL();
    } catch (const NotAdmissible& e) {
        EXPECT_EQ(e.clause(), "unit increments");
    }
    try {
        AdmissibleProfile::from_table(std::vector<std::uint64_t>(100, 1));
        FAIL();
    } catch (const NotAdmissible& e) {
        EXPECT_EQ(e.clause(), "unbounded");
    }
    EXPECT_THROW(make_admissible([](std::uint64_t n) { return 100.0 / n; }, 100), DomainError);
    EXPECT_THROW(AdmissibleProfile::sqrt(1000)(1001), HorizonExceeded);
    EXPECT_NO_THROW(AdmissibleProfile::log(1.0, 100000));
}

TEST(SortedWeights, ExplicitPrefixIsReordered) {
    const auto m = WeightModel::explicit_prefix({0.001, 0.3, 0.0005}, 2.0);
    const SortedWeights sw(m);
    EXPECT_FALSE(sw.identity());
    EXPECT_EQ(sw.label(1), 2u);
    std::set<std::uint64_t> seen;
    for (std::uint64_t r = 1; r <= 300; ++r) {
        EXPECT_EQ(sw.rank(sw.label(r)), r);
        seen.insert(sw.label(r));
        if (r > 1) EXPECT_LE(sw.log_weight(r), sw.log_weight(r - 1));
    }
    EXPECT_EQ(seen.size(), 300u);
    EXPECT_TRUE(SortedWeights(WeightModel::luroth()).identity());
    const SortedWeights pl(WeightModel::power_log(1.2, 6.0));
    for (std::uint64_t r = 2; r <= 500; ++r) {
        EXPECT_LE(pl.log_weight(r), pl.log_weight(r - 1));
        EXPECT_EQ(pl.rank(pl.label(r)), r);
    }
    // a light first digit is outranked by every heavier tail digit; count them directly
    const auto tiny = WeightModel::explicit_prefix({1e-6}, 2.0);
    const SortedWeights tw(tiny);
    std::uint64_t heavier = 0;
    for (std::uint64_t k = 2; tiny.weight(k) > 1e-6; ++k) ++heavier;
    EXPECT_EQ(tw.rank(1), heavier + 1);
    EXPECT_EQ(tw.label(heavier + 1), 1u);
    EXPECT_EQ(tw.label(heavier), heavier + 1);
    EXPECT_EQ(tw.label(heavier + 2), heavier + 2);
    EXPECT_EQ(tw.rank(heavier + 2), heavier + 2);
}

TEST(SublinearSchedule, KStarMatchesLinearSearch) {
    const auto m = WeightModel::luroth();
    for (double t : {0.1, 0.5, 0.9}) {
        const auto s = build_sublinear_schedule(AdmissibleProfile::sqrt(1000), t, m);
        std::uint64_t K = 1;
        while (solve_s_K(m, K) < 0.5 * (1 + t)) ++K;
        EXPECT_EQ(s.K_star(), K) << t;
        EXPECT_LT(bisect_s(luroth_head(K - 1)), 0.5 * (1 + t));
        EXPECT_GE(bisect_s(luroth_head(K)), 0.5 * (1 + t) - 1e-12);
    }
}

TEST(SublinearSchedule, ForcedDigitAtHundred) {
    const auto& s = sqrt_schedule(0.9);
    EXPECT_EQ(s.f(99), 9u);
    EXPECT_EQ(s.f(100), 10u);
    ASSERT_TRUE(s.forced(100));
    EXPECT_EQ(s.K(100), std::max<std::uint64_t>(s.K_star(), 3));
    EXPECT_EQ(*s.forced_rank(100), s.K(100) + 10);
    EXPECT_EQ(*s.forced_digit(100), s.K(100) + 10);
    EXPECT_FALSE(s.forced(101));
    EXPECT_FALSE(s.forced_rank(101).has_value());
    EXPECT_EQ(s.alphabet_size(101), s.K(101));
    EXPECT_EQ(s.alphabet_size(100), 1u);
}

TEST(SublinearSchedule, Invariants) {
    for (double t : {0.5, 0.9}) {
        const auto& s = sqrt_schedule(t);
        std::uint64_t prev_b = 0;
        ASSERT_TRUE(s.n_t().has_value());
        for (std::uint64_t n = 1; n <= s.horizon(); ++n) {
            if (n > 1) ASSERT_GE(s.K(n), s.K(n - 1));
            ASSERT_GE(s.s(n), s.threshold());
            const double root = std::sqrt(static_cast<double>(s.f(n)));
            if (n >= *s.n_t()) {
                ASSERT_LE(static_cast<double>(s.K(n)), root);
                if (s.forced(n)) ASSERT_LE(*s.forced_rank(n), 2 * s.f(n));
            }
            if (auto b = s.forced_rank(n)) {
                ASSERT_GT(*b, prev_b);
                ASSERT_GT(*b, s.K(n));
                prev_b = *b;
            }
            ASSERT_LE(s.alphabet_size(n), s.K(n) + 1);
        }
        EXPECT_GT(s.K(s.horizon()), s.K(1));
        for (auto K : s.K_values()) {
            const double sk = s.s_K(K);
            EXPECT_NEAR(sk, bisect_s(luroth_head(K)), 1e-12);
            EXPECT_LT(s_K_residual(WeightModel::luroth(), K, sk), 1e-10);
        }
    }
}

TEST(SublinearSchedule, Errors) {
    const auto f = AdmissibleProfile::sqrt(100);
    EXPECT_THROW(build_sublinear_schedule(f, 0.0, WeightModel::luroth()), DomainError);
    EXPECT_THROW(build_sublinear_schedule(f, 1.0, WeightModel::luroth()), DomainError);
    EXPECT_THROW(build_sublinear_schedule(f, 0.999, WeightModel::power(1.01)), TiltThreshold);
    const auto fin = WeightModel::finite(std::vector<Rational>{Rational(1, 2), Rational(1, 4), Rational(1, 4)});
    EXPECT_THROW(build_sublinear_schedule(f, 0.5, fin), InfeasibleError);
}

TEST(SampleSublinear, FirstDigitIsForced) {
    const auto& s = sqrt_schedule(0.5);
    Rng rng(1);
    const auto w = sample_point_sublinear(s, 1, rng);
    ASSERT_EQ(w.size(), 1u);
    EXPECT_EQ(w[0], s.K(1) + 1);
    EXPECT_THROW(sample_point_sublinear(s, s.horizon() + 1, rng), HorizonExceeded);
}

TEST(SampleSublinear, SandwichAndForcedNewness) {
    const auto& s = sqrt_schedule(0.9);
    for (std::uint64_t seed : {1, 2, 3}) {
        Rng rng(seed);
        const auto w = sample_point_sublinear(s, 100000, rng);
        EXPECT_TRUE(sublinear_sandwich_holds(s, w));
        std::set<std::uint64_t> seen;
        std::uint64_t max_free = 0;
        for (std::uint64_t n = 1; n <= w.size(); ++n) {
            const std::uint64_t d = w[n - 1];
            if (s.forced(n)) {
                ASSERT_EQ(d, s.K(n) + s.f(n));
                ASSERT_GT(d, max_free);
                ASSERT_FALSE(seen.count(d));
            } else {
                ASSERT_LE(d, s.K(n));
                max_free = std::max(max_free, d);
            }
            seen.insert(d);
            ASSERT_GE(seen.size(), s.f(n));
            ASSERT_LE(seen.size(), s.f(n) + s.K(n));
        }
    }
}

TEST(SampleSublinear, FreeMarginalsFollowTiltedLaw) {
    const auto& s = sqrt_schedule(0.5);
    const std::uint64_t n = 2;
    ASSERT_FALSE(s.forced(n));
    const std::uint64_t K = s.K(n);
    std::vector<int> counts(K + 1, 0);
    Rng rng(5);
    const int trials = 100000;
    for (int i = 0; i < trials; ++i) ++counts[sample_point_sublinear(s, n, rng)[n - 1]];
    const double sn = bisect_s(luroth_head(K));
    double total = 0.0;
    for (std::uint64_t k = 1; k <= K; ++k) {
        const double q = std::pow(luroth_p(k), sn);
        total += q;
        const double sigma = std::sqrt(trials * q * (1 - q));
        EXPECT_LT(std::abs(counts[k] - trials * q), 4 * sigma + 1) << "k=" << k;
    }
    EXPECT_NEAR(total, 1.0, 1e-10);
}

TEST(MuTLogMass, TrivialCases) {
    const auto& s = sqrt_schedule(0.5);
    EXPECT_EQ(mu_t_log_mass(s, DigitWord{}), 0.0);
    EXPECT_EQ(mu_t_log_mass(s, DigitWord{s.K(1) + 1}), 0.0);
    EXPECT_THROW(mu_t_log_mass(s, DigitWord{1}), NotInSupport);
    EXPECT_THROW(mu_t_log_mass(s, DigitWord{s.K(1) + 1, s.K(2) + 1}), NotInSupport);
}

TEST(MuTLogMass, MatchesProductMeasureEnumeration) {
    const auto m = WeightModel::luroth();
    const auto s = build_sublinear_schedule(AdmissibleProfile::sqrt(1000), 0.1, m);
    const std::uint64_t L = 6;
    for (std::uint64_t n = 1; n <= L; ++n) ASSERT_LE(s.K(n), 3u);
    std::uint64_t top = 0;
    for (std::uint64_t n = 1; n <= L; ++n) top = std::max(top, s.K(n) + s.f(n));
    // brute-force product measure over {1..top}^L
    std::map<DigitWord, double> prefix_mass;
    DigitWord w(L, 1);
    std::uint64_t total_words = 1;
    for (std::uint64_t i = 0; i < L; ++i) total_words *= top;
    for (std::uint64_t code = 0; code < total_words; ++code) {
        std::uint64_t c = code;
        for (std::uint64_t i = 0; i < L; ++i) {
            w[i] = 1 + c % top;
            c /= top;
        }
        double mass = 1.0;
        for (std::uint64_t n = 1; n <= L && mass > 0.0; ++n) {
            const std::uint64_t d = w[n - 1];
            const bool forced = s.f(n) == s.f(n - 1) + 1;
            if (forced)
                mass *= d == s.K(n) + s.f(n) ? 1.0 : 0.0;
            else
                mass *= d <= s.K(n) ? std::pow(luroth_p(d), bisect_s(luroth_head(s.K(n)))) : 0.0;
        }
        if (mass == 0.0) continue;
        for (std::uint64_t len = 0; len <= L; ++len) prefix_mass[DigitWord(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(len))] += mass;
    }
    double full = 0.0;
    for (const auto& [pre, mass] : prefix_mass) {
        EXPECT_NEAR(std::exp(mu_t_log_mass(s, pre)), mass, 1e-12);
        if (pre.size() == L) full += mass;
        if (pre.size() < L) {
            double kids = 0.0;
            for (std::uint64_t d = 1; d <= top; ++d) {
                auto ext = pre;
                ext.push_back(d);
                try {
                    kids += std::exp(mu_t_log_mass(s, ext));
                } catch (const NotInSupport&) {
                }
            }
            EXPECT_NEAR(kids, std::exp(mu_t_log_mass(s, pre)), 1e-12);
        }
    }
    EXPECT_NEAR(full, 1.0, 1e-12);
}

TEST(RatioTrace, DecompositionAndDecay) {
    for (double t : {0.5, 0.9}) {
        const auto& s = sqrt_schedule(t);
        Rng rng(7);
        const auto w = sample_point_sublinear(s, 10000, rng);
        const auto tr = ratio_trace(s, w);
        ASSERT_EQ(tr.log_ratio.size(), w.size() + 1);
        EXPECT_EQ(tr.log_ratio[0], 0.0);
        long double forced = 0.0L, free = 0.0L;
        for (std::uint64_t n = 1; n <= w.size(); ++n) {
            if (s.f(n) == s.f(n - 1) + 1)
                forced += -t * std::log(luroth_p(s.K(n) + s.f(n)));
            else
                free += (bisect_s(luroth_head(s.K(n))) - t) * std::log(luroth_p(w[n - 1]));
            if (n % 500 == 0 || n == w.size()) {
                ASSERT_NEAR(tr.forced_part[n], static_cast<double>(forced), 1e-9 * (1 + std::abs(static_cast<double>(forced))));
                ASSERT_NEAR(tr.free_part[n], static_cast<double>(free), 1e-8 * (1 + std::abs(static_cast<double>(free))));
                ASSERT_NEAR(tr.log_ratio[n], tr.free_part[n] + tr.forced_part[n], 1e-9 * (1 + std::abs(tr.log_ratio[n])));
            }
        }
        // least-squares slope over the second half
        const std::size_t lo = w.size() / 2, hi = w.size();
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t n = lo; n <= hi; ++n) {
            sx += n;
            sy += tr.log_ratio[n];
            sxx += double(n) * n;
            sxy += n * tr.log_ratio[n];
        }
        const double cnt = hi - lo + 1;
        EXPECT_LT((cnt * sxy - sx * sy) / (cnt * sxx - sx * sx), 0.0) << "t=" << t;
    }
}

TEST(RatioTrace, LaterMaximumIsSmaller) {
    for (double t : {0.5, 0.9}) {
        const auto& s = sqrt_schedule(t);
        Rng rng(8);
        const auto tr = ratio_trace(s, sample_point_sublinear(s, 10000, rng));
        const double early = *std::max_element(tr.log_ratio.begin() + 1, tr.log_ratio.begin() + 5001);
        const double late = *std::max_element(tr.log_ratio.begin() + 5000, tr.log_ratio.end());
        EXPECT_LT(late, early) << "t=" << t;
    }
}
