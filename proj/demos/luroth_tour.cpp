// A short tour on the Luroth weights: tilt exponents, the sqrt(n) occupancy
// law, and one point from each construction.

#include <cmath>
#include <cstdio>

#include "dds/dds.hpp"

int main() {
    using namespace dds;
    const auto luroth = WeightModel::luroth();

    std::puts("K      s_K");
    for (std::uint64_t K : {2, 3, 10, 100, 1000}) std::printf("%-6llu %.6f\n", (unsigned long long)K, solve_s_K(luroth, K));

    const auto law = monte_carlo_law(luroth, 100000, 20, kDefaultSeed);
    std::puts("\nt        mean D_t/sqrt(t)   E D_t/sqrt(t)");
    for (const auto& c : law.checkpoints)
        if (c.time >= 1024) std::printf("%-8llu %.5f            %.5f\n", (unsigned long long)c.time, c.mean, c.exact_expectation);
    std::printf("limit    %.5f\n", law.karlin_constant);

    const auto sched = build_schedule(Fraction(1, 2), default_k1(luroth), 12);
    Rng rng(kDefaultSeed);
    const auto w = sample_point(sched, 12, rng);
    std::puts("\nlinear construction, theta = 1/2: local dimension by depth");
    for (std::uint64_t J = 2; J <= 12; J += 2)
        std::printf("J=%-3llu %.4f\n", (unsigned long long)J,
                    local_dimension(sched, luroth, std::span<const std::uint64_t>(w.data(), sched.total_length(J))));

    const auto sub = build_sublinear_schedule(AdmissibleProfile::sqrt(50000), 0.7, luroth);
    const auto v = sample_point_sublinear(sub, 50000, rng);
    const auto tr = ratio_trace(sub, v);
    std::printf("\nsublinear construction, f = floor(sqrt n), t = 0.7: K* = %llu\n", (unsigned long long)sub.K_star());
    for (std::uint64_t n : {10, 100, 1000, 10000, 50000})
        std::printf("n=%-6llu ln mu_t(C_n) - t ln diam(C_n) = %.2f\n", (unsigned long long)n, tr.log_ratio[n]);
}
