#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/zeta.hpp>

#include "dds/occupancy.hpp"

using namespace dds;

namespace {

std::uint64_t count_distinct(const std::vector<std::uint64_t>& xs) {
    DistinctCounter c;
    for (auto x : xs) c.feed(x);
    return c.count();
}

// Oracle: E D_n for Luroth by direct summation to K plus the two-term tail
// n/K - n^2/(6 K^3) (from sum_{k>=K} 1/(k(k+1)) = 1/K and sum p_k^2 ~ 1/(3K^3)).
double luroth_expected_oracle(std::uint64_t n, std::uint64_t K) {
    long double acc = 0.0L;
    const long double nd = static_cast<long double>(n);
    for (std::uint64_t k = 1; k < K; ++k) {
        const long double p = 1.0L / (static_cast<long double>(k) * (k + 1));
        acc += -std::expm1(nd * std::log1p(-p));
    }
    const long double Kd = static_cast<long double>(K);
    return static_cast<double>(acc + nd / Kd - nd * nd / (6.0L * Kd * Kd * Kd));
}

}  // namespace

TEST(DistinctCounter, Examples) {
    EXPECT_EQ(count_distinct({7, 15, 1, 292, 1, 1, 1, 2}), 5u);
    EXPECT_EQ(count_distinct({1, 1, 1, 1}), 1u);
    const std::vector<std::uint64_t> pi_cf{7, 15, 1, 292, 1, 1, 1, 2, 1, 3, 1, 14, 2, 1, 1,
                                           2, 2, 2, 2, 1, 84, 2, 1, 1, 15, 3, 13, 1, 4, 2};
    ASSERT_EQ(pi_cf.size(), 30u);
    EXPECT_EQ(count_distinct(pi_cf), 10u);
}

TEST(DistinctCounter, FirstOccurrenceAndOverflow) {
    DistinctCounter c(true, 128);
    const std::vector<std::uint64_t> xs{5, 1000000007, 5, 127, 128, 1000000007, 3};
    for (auto x : xs) c.feed(x);
    EXPECT_EQ(c.count(), 5u);
    EXPECT_EQ(c.time(), 7u);
    EXPECT_EQ(*c.first_occurrence(5), 1u);
    EXPECT_EQ(*c.first_occurrence(1000000007), 2u);
    EXPECT_EQ(*c.first_occurrence(128), 5u);
    EXPECT_FALSE(c.first_occurrence(4).has_value());
    EXPECT_TRUE(c.contains(128));
    EXPECT_FALSE(c.contains(129));
    EXPECT_THROW(c.feed(0), DomainError);
    c.reset();
    EXPECT_EQ(c.count(), 0u);
    EXPECT_FALSE(c.contains(5));
    DistinctCounter untracked;
    EXPECT_THROW(untracked.first_occurrence(1), DomainError);
}

TEST(DistinctCounter, IncrementsAreZeroOrOne) {
    const auto m = WeightModel::power(1.5);
    Rng rng(2);
    DistinctCounter c;
    std::uint64_t prev = 0;
    for (std::uint64_t t = 1; t <= 200000; ++t) {
        c.feed(m.sample(rng.uniform_open()));
        ASSERT_LE(c.count() - prev, 1u);
        ASSERT_GE(c.count(), prev);
        ASSERT_LE(c.count(), t);
        prev = c.count();
    }
}

TEST(KarlinConstant, Values) {
    EXPECT_NEAR(karlin_constant(2.0, 1.0), std::sqrt(std::numbers::pi), 1e-12 * 1.78);
    EXPECT_NEAR(karlin_constant(2.0, 1.0), 1.7724539, 1e-7);
    EXPECT_NEAR(karlin_constant(2.0, 4.0), 2.0 * std::sqrt(std::numbers::pi), 1e-12 * 3.6);
    const double oracle = boost::math::tgamma(2.0 / 3.0) * std::cbrt(1.0 / boost::math::zeta(3.0));
    EXPECT_NEAR(karlin_constant(3.0, 1.0 / boost::math::zeta(3.0)), oracle, 1e-12 * oracle);
    EXPECT_NEAR(oracle, 1.2734, 2e-4);
    EXPECT_THROW(karlin_constant(1.0, 1.0), DomainError);
    EXPECT_THROW(karlin_constant(0.5, 1.0), DomainError);
}

TEST(ExpectedDistinct, Values) {
    const auto m = WeightModel::luroth();
    EXPECT_EQ(expected_distinct(m, 1), 1.0);
    EXPECT_EQ(expected_distinct(WeightModel::power(3.0), 1), 1.0);
    const double e100 = expected_distinct(m, 100);
    EXPECT_NEAR(e100, luroth_expected_oracle(100, 1'000'000), 1e-9);
    EXPECT_NEAR(e100, 16.7577, 1e-4);
    EXPECT_LT(e100, std::sqrt(std::numbers::pi * 100));
    const double e6 = expected_distinct(m, 1'000'000);
    EXPECT_NEAR(e6, luroth_expected_oracle(1'000'000, 10'000'000), 1e-6);
    EXPECT_LE(e6, std::sqrt(std::numbers::pi * 1e6));
    EXPECT_GE(e6, std::sqrt(std::numbers::pi * 1e6) - 40);
    const auto br = expected_distinct_bracket(m, 1'000'000);
    EXPECT_LE(br.lower, br.upper);
    EXPECT_LT(br.upper - br.lower, 1e-6);
}

TEST(ExpectedDistinct, FiniteModelIsExact) {
    const auto m = WeightModel::finite(std::vector<Rational>{Rational(1, 2), Rational(1, 2)});
    EXPECT_NEAR(expected_distinct(m, 3), 2.0 - 2.0 * 0.125, 1e-15);
}

TEST(MonteCarloLaw, SingleStepIsOne) {
    const auto rep = monte_carlo_law(WeightModel::luroth(), 1, 1000, 7);
    ASSERT_EQ(rep.checkpoints.size(), 1u);
    EXPECT_EQ(rep.checkpoints[0].mean_distinct, 1.0);
    EXPECT_EQ(rep.checkpoints[0].sd_distinct, 0.0);
}

TEST(MonteCarloLaw, DeterministicAcrossThreads) {
    const auto m = WeightModel::power(2.5);
    const auto a = monte_carlo_law(m, 5000, 12, 123, 1);
    const auto b = monte_carlo_law(m, 5000, 12, 123, 3);
    ASSERT_EQ(a.checkpoints.size(), b.checkpoints.size());
    for (std::size_t i = 0; i < a.checkpoints.size(); ++i) {
        EXPECT_EQ(a.checkpoints[i].mean, b.checkpoints[i].mean);
        EXPECT_EQ(a.checkpoints[i].sd, b.checkpoints[i].sd);
    }
    const auto c = monte_carlo_law(m, 5000, 12, 124, 1);
    EXPECT_NE(a.final().mean, c.final().mean);
}

TEST(MonteCarloLaw, CheckpointsArePowersOfTwoThenN) {
    const auto rep = monte_carlo_law(WeightModel::luroth(), 100, 2, 1);
    const std::vector<std::uint64_t> want{1, 2, 4, 8, 16, 32, 64, 100};
    ASSERT_EQ(rep.checkpoints.size(), want.size());
    for (std::size_t i = 0; i < want.size(); ++i) EXPECT_EQ(rep.checkpoints[i].time, want[i]);
    EXPECT_THROW(monte_carlo_law(WeightModel::luroth(), 100, 2, 1, 1, {5, 3, 100}), DomainError);
    EXPECT_THROW(monte_carlo_law(WeightModel::luroth(), 0, 2, 1), DomainError);
}

TEST(MonteCarloLaw, MeanMatchesExpectation) {
    for (const auto& [m, trials] : {std::pair{WeightModel::luroth(), 200}, std::pair{WeightModel::power(3.0), 200},
                                    std::pair{WeightModel::power_log(1.5, 1.0), 100}}) {
        const auto rep = monte_carlo_law(m, 10000, trials, 31);
        for (const auto& cp : rep.checkpoints) {
            if (cp.time != 128 && cp.time != 10000) continue;
            const double exact = expected_distinct(m, cp.time);
            const double se = cp.sd_distinct / std::sqrt(static_cast<double>(trials));
            EXPECT_LT(std::abs(cp.mean_distinct - exact), 4 * se + 1e-12) << m.name() << " t=" << cp.time;
            EXPECT_NEAR(cp.exact_expectation * std::pow(cp.time, 1.0 / m.rho()), exact, 1e-9 * exact);
        }
    }
}

TEST(MonteCarloLaw, LurothMillionMatchesExpectation) {
    const auto m = WeightModel::luroth();
    const auto rep = monte_carlo_law(m, 1'000'000, 20, 77);
    const auto& cp = rep.final();
    const double se = cp.sd_distinct / std::sqrt(20.0);
    EXPECT_LT(std::abs(cp.mean_distinct - expected_distinct(m, 1'000'000)), 4 * se);
    EXPECT_NEAR(rep.karlin_constant, std::sqrt(std::numbers::pi), 1e-12);
}
