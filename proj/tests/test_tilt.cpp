#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numbers>
#include <set>

#include "dds/tilt.hpp"

using namespace dds;

namespace {

WeightModel uniform2() { return WeightModel::finite(std::vector<Rational>{Rational(1, 2), Rational(1, 2)}); }

// Oracle: S_n on {1..cap} by depth-first recursion from the last position,
// with weights from std::pow on 1/(k(k+1)) rather than exp/log.
double luroth_cylinder_sum_dfs(std::uint64_t n, double s, std::uint64_t m, std::uint64_t cap) {
    std::vector<std::uint64_t> w(n);
    std::function<long double(std::size_t, long double)> rec = [&](std::size_t pos, long double prod) -> long double {
        if (pos == 0) return std::set<std::uint64_t>(w.begin(), w.end()).size() >= m ? prod : 0.0L;
        long double acc = 0.0L;
        for (std::uint64_t d = cap; d >= 1; --d) {
            w[pos - 1] = d;
            acc += rec(pos - 1, prod * std::pow(1.0L / (static_cast<long double>(d) * (d + 1)), static_cast<long double>(s)));
        }
        return acc;
    };
    return static_cast<double>(rec(n, 1.0L));
}

}  // namespace

TEST(TiltedDistribution, NormalizedAndDecreasing) {
    const auto m = WeightModel::luroth();
    for (double s : {0.6, 0.75, 0.9, 1.0}) {
        const TiltedDistribution q(m, s);
        NeumaierSum acc;
        for (std::uint64_t k = 1; k <= 1000; ++k) {
            acc.add(q.q(k));
            if (k > 1) ASSERT_LT(q.q(k), q.q(k - 1));
        }
        acc.add(q.tail(1001));
        EXPECT_NEAR(acc.value(), 1.0, 1e-10) << s;
        EXPECT_NEAR(q.tail(1), 1.0, 1e-12);
    }
    EXPECT_NEAR(TiltedDistribution(m, 1.0).Z(), 1.0, 1e-12);
    EXPECT_THROW(TiltedDistribution(WeightModel::power(2.0), 0.5), DomainError);
    EXPECT_THROW(TiltedDistribution(m, 0.0), DomainError);
    EXPECT_NO_THROW(TiltedDistribution(WeightModel::power(2.0), 0.5, 10));
}

TEST(TiltedDistribution, SamplesFollowQ) {
    const TiltedDistribution q(WeightModel::luroth(), 0.75);
    Rng rng(3);
    const int n = 200000;
    std::vector<int> counts(12, 0);
    for (int i = 0; i < n; ++i) ++counts[std::min<std::uint64_t>(q.sample(rng.uniform_open()), 11)];
    double chi2 = 0.0;
    for (std::uint64_t k = 1; k <= 11; ++k) {
        const double e = n * (k < 11 ? q.q(k) : q.tail(11));
        chi2 += (counts[k] - e) * (counts[k] - e) / e;
    }
    EXPECT_LT(chi2, 29.6);  // chi^2_10 at p = 0.001
}

TEST(DistinctForcesLarge, Examples) {
    const std::vector<std::uint64_t> a{1, 1, 2, 3, 2};
    EXPECT_EQ(std::count_if(a.begin(), a.end(), [](auto v) { return v >= 2; }), 3);
    EXPECT_TRUE(distinct_forces_large(a, 3));
    EXPECT_TRUE(distinct_forces_large(std::vector<std::uint64_t>{1, 1, 1}, 1));
    EXPECT_FALSE(distinct_forces_large(std::vector<std::uint64_t>{1, 1, 1}, 3));  // hypothesis violated
}

TEST(DistinctForcesLarge, ExhaustiveScan) {
    const auto rep = distinct_forces_large_check(6, 6);
    EXPECT_TRUE(rep.passed);
    EXPECT_TRUE(rep.counterexample.empty());
    std::uint64_t tuples = 0, pw = 1;
    for (int n = 1; n <= 6; ++n) tuples += (pw *= 6);
    EXPECT_EQ(rep.tuples, tuples);
    EXPECT_GT(rep.checks, rep.tuples);
}

TEST(CylinderSumExact, UniformTwoSymbol) {
    const auto rec = cylinder_sum_exact(uniform2(), 4, 0.5, Fraction(1, 1));
    EXPECT_NEAR(rec.value, 3.5, 1e-14);
    EXPECT_EQ(rec.truncation_deficit, 0.0);
    EXPECT_NEAR(tilted_side(rec), 3.5, 1e-13);
    EXPECT_NEAR(rec.probability, 14.0 / 16.0, 1e-14);
    // theta near 0 and s = 1: every word, total probability 1
    EXPECT_NEAR(cylinder_sum_exact(uniform2(), 5, 1.0, Fraction(1, 1000)).value, 1.0, 1e-14);
}

TEST(CylinderSumExact, LurothNormalizationBracket) {
    const auto rec = cylinder_sum_exact(WeightModel::luroth(), 4, 1.0, Fraction(1, 1000), 20);
    EXPECT_LE(rec.value, 1.0);
    EXPECT_GE(rec.value + rec.truncation_deficit, 1.0);
    const auto small = cylinder_sum_exact(WeightModel::luroth(), 4, 0.75, Fraction(4, 5), 4);
    const auto big = cylinder_sum_exact(WeightModel::luroth(), 4, 0.75, Fraction(4, 5), 12);
    EXPECT_GE(big.value, small.value);
    EXPECT_LE(big.value, small.value + small.truncation_deficit);
}

TEST(CylinderSumExact, MatchesIndependentEnumeration) {
    const auto rec = cylinder_sum_exact(WeightModel::luroth(), 5, 0.75, Fraction(4, 5), 4);
    const double oracle = luroth_cylinder_sum_dfs(5, 0.75, 2, 4);
    EXPECT_NEAR(rec.value, oracle, 1e-13 * oracle);
    for (std::uint64_t n = 1; n <= 5; ++n)
        for (std::uint64_t cap = 1; cap <= 4; ++cap) {
            const auto r = cylinder_sum_exact(WeightModel::luroth(), n, 0.6, Fraction(1, 1), cap);
            const double o = luroth_cylinder_sum_dfs(n, 0.6, distinct_threshold(Fraction(1, 1), n), cap);
            EXPECT_NEAR(r.value, o, 1e-13 * (o + 1e-300));
        }
}

TEST(CylinderSumExact, ChangeOfMeasureIdentityGrid) {
    const auto m = WeightModel::luroth();
    for (std::uint64_t n = 1; n <= 6; ++n)
        for (std::uint64_t cap = 1; cap <= 6; ++cap)
            for (double s : {0.6, 0.75, 0.9})
                for (auto th : {Fraction(2, 5), Fraction(4, 5), Fraction(1, 1)}) {
                    const auto rec = cylinder_sum_exact(m, n, s, th, cap);
                    if (rec.value == 0.0) {
                        EXPECT_EQ(rec.probability, 0.0);
                        continue;
                    }
                    EXPECT_NEAR(tilted_side(rec), rec.value, 1e-12 * rec.value)
                        << "n=" << n << " cap=" << cap << " s=" << s << " theta=" << th.str();
                }
}

TEST(CylinderSumExact, Monotonicity) {
    const auto m = WeightModel::luroth();
    for (std::uint64_t n = 2; n <= 6; ++n) {
        double prev_s = std::numeric_limits<double>::infinity();
        for (double s : {0.55, 0.6, 0.75, 0.9, 1.0}) {
            const double v = cylinder_sum_exact(m, n, s, Fraction(4, 5), 5).value;
            EXPECT_LE(v, prev_s);
            prev_s = v;
        }
        double prev_t = std::numeric_limits<double>::infinity();
        for (auto th : {Fraction(1, 10), Fraction(2, 5), Fraction(4, 5), Fraction(1, 1)}) {
            const double v = cylinder_sum_exact(m, n, 0.75, th, 5).value;
            EXPECT_LE(v, prev_t);
            prev_t = v;
        }
    }
}

TEST(CylinderSumExact, Errors) {
    EXPECT_THROW(cylinder_sum_exact(WeightModel::luroth(), 8, 0.75, Fraction(1, 2), 10), EnumerationSize);
    EXPECT_THROW(cylinder_sum_exact(WeightModel::luroth(), 3, 0.75, Fraction(1, 2)), DomainError);
    EXPECT_THROW(cylinder_sum_exact(uniform2(), 3, 0.75, Fraction(0, 1)), DomainError);
}

TEST(CylinderSumMc, UniformTwoSymbol) {
    const auto rec = cylinder_sum_mc(uniform2(), 4, 0.5, Fraction(1, 1), 1000000, 11);
    EXPECT_LT(std::abs(rec.value - 3.5), 3 * rec.std_error);
    EXPECT_EQ(rec.mode, SumMode::monte_carlo);
}

TEST(CylinderSumMc, LurothCappedAgreesWithExact) {
    const auto m = WeightModel::luroth();
    const auto exact = cylinder_sum_exact(m, 6, 0.75, Fraction(4, 5), 6);
    const auto mc = cylinder_sum_mc(m, 6, 0.75, Fraction(4, 5), 1000000, 12, 1, 6);
    EXPECT_LT(std::abs(mc.value - exact.value), 3 * mc.std_error);
    // the uncapped estimate sits inside the truncation bracket, up to MC error
    const auto full = cylinder_sum_mc(m, 6, 0.75, Fraction(4, 5), 200000, 13);
    EXPECT_GE(full.value + 3 * full.std_error, exact.value);
    EXPECT_LE(full.value - 3 * full.std_error, exact.value + exact.truncation_deficit);
}

TEST(CylinderSumMc, CertainEventAndDeterminism) {
    const auto m = WeightModel::luroth();
    const auto rec = cylinder_sum_mc(m, 4, 0.75, Fraction(1, 1000), 1000, 1);
    EXPECT_EQ(rec.probability, 1.0);
    EXPECT_EQ(rec.value, std::pow(TiltedDistribution(m, 0.75).Z(), 4.0));
    const auto a = cylinder_sum_mc(m, 10, 0.75, Fraction(1, 1), 20000, 5, 1);
    const auto b = cylinder_sum_mc(m, 10, 0.75, Fraction(1, 1), 20000, 5, 3);
    EXPECT_EQ(a.value, b.value);
    EXPECT_THROW(cylinder_sum_mc(WeightModel::power(2.0), 4, 0.4, Fraction(1, 2), 10, 1), DomainError);
}

TEST(BoundChain, HoldsOnLuroth) {
    const auto rec = bound_chain(WeightModel::luroth(), 40, 0.75, Fraction(1, 2), 1, 100000, 2);
    EXPECT_EQ(rec.r_n, 5u);
    EXPECT_EQ(rec.m_n, 10u);
    EXPECT_EQ(rec.inclusion_violations, 0u);
    EXPECT_LE(rec.mc_probability, rec.binomial_tail + 3 * rec.mc_stderr);
    EXPECT_LE(rec.mc_probability, rec.mc_event_b);
    EXPECT_LE(rec.binomial_tail, rec.binomial_bound);
    EXPECT_TRUE(rec.chain_holds);
    EXPECT_TRUE(rec.guard_holds);
    EXPECT_FALSE(bound_chain(WeightModel::luroth(), 40, 0.75, Fraction(1, 2), 100, 1000, 2).guard_holds);
}

TEST(BoundChain, VacuousOnUniform) {
    const auto rec = bound_chain(uniform2(), 4, 0.5, Fraction(1, 1), 1, 10000, 3);
    EXPECT_EQ(rec.r_n, 1u);
    EXPECT_NEAR(rec.q_ge_r, 1.0, 1e-15);
    EXPECT_NEAR(rec.binomial_bound, std::numbers::e * 4, 1e-12);
    EXPECT_TRUE(rec.chain_holds);
}

TEST(BoundChain, BinomialTailMatchesDirectSum) {
    const auto rec = bound_chain(WeightModel::luroth(), 30, 0.8, Fraction(1, 1), 1, 1000, 4);
    long double direct = 0.0L;
    const long double q = rec.q_ge_r;
    for (std::uint64_t k = rec.r_n; k <= 30; ++k) {
        long double c = 1.0L;
        for (std::uint64_t i = 0; i < k; ++i) c = c * (30 - i) / (i + 1);
        direct += c * std::pow(q, static_cast<long double>(k)) * std::pow(1.0L - q, static_cast<long double>(30 - k));
    }
    EXPECT_NEAR(rec.binomial_tail, static_cast<double>(direct), 1e-12);
}

TEST(BoundChain, CylinderSumsDecay) {
    const auto m = WeightModel::luroth();
    std::vector<double> logS;
    for (std::uint64_t n : {10, 20, 40}) {
        const auto rec = bound_chain(m, n, 0.95, Fraction(1, 1), 1, 400000, 21);
        EXPECT_TRUE(rec.chain_holds);
        ASSERT_GT(rec.mc_probability, 0.0);
        logS.push_back(rec.log_S_mc);
    }
    EXPECT_LT(logS[1], logS[0]);
    EXPECT_LT(logS[2], logS[1]);
    EXPECT_LT((logS[2] - logS[1]) / 20.0, (logS[1] - logS[0]) / 10.0);
}

TEST(CylinderSumBound, DominatesExactSums) {
    const auto m = WeightModel::luroth();
    for (double s : {0.6, 0.75, 0.9})
        for (const auto th : {Fraction(2, 5), Fraction(1, 1)})
            for (std::uint64_t n = 1; n <= 5; ++n) {
                const auto rec = cylinder_sum_exact(m, n, s, th, 8);
                const double lb = log_cylinder_sum_bound(m, n, s, th);
                EXPECT_LE(std::log(rec.value + rec.truncation_deficit), lb) << "n=" << n << " s=" << s;
            }
    const auto chain = bound_chain(m, 40, 0.75, Fraction(1, 2), 1, 1000, 3);
    EXPECT_NEAR(log_cylinder_sum_bound(m, 40, 0.75, Fraction(1, 2)), chain.log_S_bound, 1e-12);
}
