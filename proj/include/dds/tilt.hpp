#pragma once

// Tilted digit laws q_k = p_k^s / Z_s and the cylinder sums
//   S_n(s, theta) = sum over words w in N^n with #distinct(w) >= theta n / 2 of prod p_{w_i}^s,
// computed by enumeration on a capped alphabet or by Monte Carlo through
// S_n = Z_s^n P(#{X_1..X_n} >= theta n / 2), X_i iid ~ q.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/special_functions/beta.hpp>

#include "dds/errors.hpp"
#include "dds/numeric.hpp"
#include "dds/rng.hpp"
#include "dds/weights.hpp"

namespace dds {

/// q_k = p_k^s / Z_s, optionally restricted to the first `cap` digits.
class TiltedDistribution {
public:
    TiltedDistribution(const WeightModel& model, double s, std::optional<std::uint64_t> cap = std::nullopt)
        : model_(model), s_(s) {
        if (!(s > 0.0 && s <= 1.0)) throw DomainError("tilted distribution: s must lie in (0, 1]");
        if (auto P = model.support_size()) cap = cap ? std::min(*cap, *P) : *P;
        if (cap && *cap == 0) throw DomainError("tilted distribution: cap must be >= 1");
        cap_ = cap;
        if (!cap_ && !(model.rho() * s > 1.0))
            throw DomainError("tilted distribution: Z_s diverges for rho * s <= 1");
        const std::uint64_t H = cap_ ? *cap_ : detail::kSamplerTable;
        std::vector<double> head(H);
        NeumaierSum z;
        for (std::uint64_t k = 1; k <= H; ++k) {
            head[k - 1] = std::exp(s * model.log_weight(k));
            z.add(head[k - 1]);
        }
        Z_ = cap_ ? z.value() : model.power_tail(1, s);
        detail::DiscreteSampler::TailFn tail;
        if (!cap_) tail = [m = model_, s](std::uint64_t M) { return m.power_tail(M, s); };
        sampler_ = std::make_shared<detail::DiscreteSampler>(
            head, std::move(tail), [m = model_, s](std::uint64_t k) { return std::exp(s * m.log_weight(k)); }, Z_);
    }

    const WeightModel& model() const noexcept { return model_; }
    double s() const noexcept { return s_; }
    std::optional<std::uint64_t> cap() const noexcept { return cap_; }
    /// Z_s = sum_k p_k^s (over the capped alphabet when capped).
    double Z() const noexcept { return Z_; }

    double q(std::uint64_t k) const {
        if (k == 0) throw DomainError("digits are >= 1");
        if (cap_ && k > *cap_) return 0.0;
        return std::exp(s_ * model_.log_weight(k)) / Z_;
    }
    double log_q(std::uint64_t k) const { return std::log(q(k)); }
    /// q_{>=M} = sum_{k>=M} q_k.
    double tail(std::uint64_t M) const {
        if (M == 0) throw DomainError("tail index M must be >= 1");
        if (cap_) {
            NeumaierSum acc;
            for (std::uint64_t k = M; k <= *cap_; ++k) acc.add(q(k));
            return acc.value();
        }
        return model_.power_tail(M, s_) / Z_;
    }
    std::uint64_t sample(double u) const { return sampler_->sample(u); }

private:
    WeightModel model_;
    double s_;
    std::optional<std::uint64_t> cap_;
    double Z_ = 0.0;
    std::shared_ptr<const detail::DiscreteSampler> sampler_;
};

/// m_n = ceil(theta n / 2): a word is in W_n(theta) iff it has >= m_n distinct digits.
inline std::uint64_t distinct_threshold(Fraction theta, std::uint64_t n) {
    return Fraction(theta.num(), 2 * theta.den()).ceil_mul(n);
}

/// r_n = ceil(theta n / 4) = ceil(m_n / 2).
inline std::uint64_t binomial_level(Fraction theta, std::uint64_t n) {
    return Fraction(theta.num(), 4 * theta.den()).ceil_mul(n);
}

/// #{i : x_i >= ceil(m/2)} >= ceil(m/2), for a tuple with at least m distinct values.
inline bool distinct_forces_large(std::span<const std::uint64_t> x, std::uint64_t m) {
    const std::uint64_t r = (m + 1) / 2;
    const auto big = static_cast<std::uint64_t>(std::count_if(x.begin(), x.end(), [r](std::uint64_t v) { return v >= r; }));
    return big >= r;
}

inline std::uint64_t count_distinct_small(std::span<const std::uint64_t> x) {
    std::vector<std::uint64_t> v(x.begin(), x.end());
    std::sort(v.begin(), v.end());
    return static_cast<std::uint64_t>(std::unique(v.begin(), v.end()) - v.begin());
}

struct LemmaReport {
    bool passed = true;
    std::uint64_t tuples = 0;
    std::uint64_t checks = 0;
    std::vector<std::uint64_t> counterexample;
    std::uint64_t counterexample_m = 0;
};

/// Exhaustive check of distinct_forces_large over all tuples of length
/// 1..n_max with values in 1..value_max and every 1 <= m <= #distinct.
inline LemmaReport distinct_forces_large_check(std::uint64_t n_max = 6, std::uint64_t value_max = 6) {
    if (n_max == 0 || value_max == 0) throw DomainError("distinct_forces_large_check: sizes must be >= 1");
    if (std::pow(static_cast<double>(value_max), static_cast<double>(n_max)) > 1e8)
        throw EnumerationSize("distinct_forces_large_check: more than 1e8 tuples");
    LemmaReport rep;
    for (std::uint64_t n = 1; n <= n_max; ++n) {
        std::vector<std::uint64_t> x(n, 1);
        while (true) {
            ++rep.tuples;
            const std::uint64_t d = count_distinct_small(x);
            for (std::uint64_t m = 1; m <= d; ++m) {
                ++rep.checks;
                if (!distinct_forces_large(x, m) && rep.passed) {
                    rep.passed = false;
                    rep.counterexample = x;
                    rep.counterexample_m = m;
                }
            }
            std::size_t i = 0;
            while (i < n && x[i] == value_max) x[i++] = 1;
            if (i == n) break;
            ++x[i];
        }
    }
    return rep;
}

enum class SumMode { exact_enumeration, monte_carlo };

inline std::string to_string(SumMode m) { return m == SumMode::exact_enumeration ? "exact" : "mc"; }

struct CylinderSumRecord {
    std::uint64_t n = 0;
    double s = 0.0;
    Fraction theta{1, 1};
    SumMode mode = SumMode::exact_enumeration;
    double value = 0.0;   // S_n, or its estimate
    double std_error = 0.0;  // 0 for exact enumeration
    /// S_n of the uncapped model lies in [value, value + truncation_deficit] (exact mode).
    double truncation_deficit = 0.0;
    std::optional<std::uint64_t> alphabet_cap;
    double Z = 0.0;
    /// P(#distinct >= m_n) under q: exact in exact mode, the hit fraction in MC mode.
    double probability = 0.0;
    double probability_stderr = 0.0;
    std::uint64_t trials = 0;
    std::uint64_t seed = 0;
    double binomial_bound = std::numeric_limits<double>::quiet_NaN();
};

inline constexpr double kMaxEnumeration = 1e7;

/// Exact S_n over words in {1..cap}^n, with the change-of-measure side
/// Z_cap^n P_cap computed by a separate pass over q-products.
inline CylinderSumRecord cylinder_sum_exact(const WeightModel& model, std::uint64_t n, double s, Fraction theta,
                                            std::optional<std::uint64_t> alphabet_cap = std::nullopt) {
    if (n == 0) throw DomainError("cylinder_sum_exact: n must be >= 1");
    if (!(s > 0.0 && s <= 1.0)) throw DomainError("cylinder_sum_exact: s must lie in (0, 1]");
    if (theta.num() == 0 || theta.num() > theta.den()) throw DomainError("cylinder_sum_exact: theta must lie in (0, 1]");
    std::uint64_t cap;
    if (auto P = model.support_size())
        cap = alphabet_cap ? std::min(*alphabet_cap, *P) : *P;
    else if (alphabet_cap)
        cap = *alphabet_cap;
    else
        throw DomainError("cylinder_sum_exact: an infinite model needs an alphabet cap");
    if (cap == 0) throw DomainError("cylinder_sum_exact: cap must be >= 1");
    if (std::pow(static_cast<double>(cap), static_cast<double>(n)) > kMaxEnumeration)
        throw EnumerationSize("cylinder_sum_exact: cap^n exceeds 1e7 words");

    const TiltedDistribution q(model, s, cap);
    std::vector<double> ps(cap), qs(cap);
    for (std::uint64_t k = 1; k <= cap; ++k) {
        ps[k - 1] = std::exp(s * model.log_weight(k));
        qs[k - 1] = q.q(k);
    }
    const std::uint64_t m = distinct_threshold(theta, n);
    NeumaierSum S, P;
    std::vector<std::uint64_t> w(n, 1);
    std::vector<std::uint32_t> mult(cap + 1, 0);
    mult[1] = static_cast<std::uint32_t>(n);
    std::uint64_t distinct = 1;
    while (true) {
        if (distinct >= m) {
            double a = 1.0, b = 1.0;
            for (auto d : w) {
                a *= ps[d - 1];
                b *= qs[d - 1];
            }
            S.add(a);
            P.add(b);
        }
        std::size_t i = 0;
        while (i < n && w[i] == cap) {
            if (--mult[cap] == 0) --distinct;
            w[i] = 1;
            if (mult[1]++ == 0) ++distinct;
            ++i;
        }
        if (i == n) break;
        if (--mult[w[i]] == 0) --distinct;
        ++w[i];
        if (mult[w[i]]++ == 0) ++distinct;
    }

    CylinderSumRecord rec;
    rec.n = n;
    rec.s = s;
    rec.theta = theta;
    rec.mode = SumMode::exact_enumeration;
    rec.value = S.value();
    rec.alphabet_cap = cap;
    rec.Z = q.Z();
    rec.probability = P.value();
    // every omitted word has a digit > cap: at most n T_{cap+1}(s) Z_s^{n-1}
    const bool truncated = !model.support_size() || cap < *model.support_size();
    if (truncated) {
        if (model.infinite() && !(model.rho() * s > 1.0)) {
            rec.truncation_deficit = std::numeric_limits<double>::infinity();
        } else {
            const double Zfull = model.power_tail(1, s);
            rec.truncation_deficit = static_cast<double>(n) * model.power_tail(cap + 1, s) * std::pow(Zfull, static_cast<double>(n - 1));
        }
    }
    return rec;
}

/// Z^n P from an exact record, the right-hand side of the change of measure.
inline double tilted_side(const CylinderSumRecord& rec) {
    return std::pow(rec.Z, static_cast<double>(rec.n)) * rec.probability;
}

/// Monte Carlo S_n = Z_s^n P(#distinct >= m_n). Trial i uses Rng(seed, i), so
/// the result depends on the seed only.
inline CylinderSumRecord cylinder_sum_mc(const WeightModel& model, std::uint64_t n, double s, Fraction theta,
                                         std::uint64_t trials, std::uint64_t seed, unsigned threads = 1,
                                         std::optional<std::uint64_t> alphabet_cap = std::nullopt) {
    if (n == 0 || trials == 0) throw DomainError("cylinder_sum_mc: n and trials must be >= 1");
    if (theta.num() == 0 || theta.num() > theta.den()) throw DomainError("cylinder_sum_mc: theta must lie in (0, 1]");
    const TiltedDistribution q(model, s, alphabet_cap);
    const std::uint64_t m = distinct_threshold(theta, n);
    threads = std::max(1U, std::min<unsigned>(threads, static_cast<unsigned>(std::min<std::uint64_t>(trials, 256))));
    std::vector<std::uint64_t> hits(threads, 0);
    auto work = [&](unsigned worker) {
        std::vector<std::uint64_t> x(n);
        for (std::uint64_t tr = worker; tr < trials; tr += threads) {
            Rng rng(seed, tr);
            for (auto& v : x) v = q.sample(rng.uniform_open());
            if (m <= 1 || count_distinct_small(x) >= m) ++hits[worker];
        }
    };
    if (threads == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w);
        for (auto& th : pool) th.join();
    }
    std::uint64_t h = 0;
    for (auto c : hits) h += c;
    const double td = static_cast<double>(trials);
    const double p = static_cast<double>(h) / td;
    const double zn = std::pow(q.Z(), static_cast<double>(n));

    CylinderSumRecord rec;
    rec.n = n;
    rec.s = s;
    rec.theta = theta;
    rec.mode = SumMode::monte_carlo;
    rec.probability = p;
    rec.probability_stderr = std::sqrt(p * (1.0 - p) / td);
    rec.value = zn * p;
    rec.std_error = zn * rec.probability_stderr;
    rec.alphabet_cap = q.cap();
    rec.Z = q.Z();
    rec.trials = trials;
    rec.seed = seed;
    return rec;
}

/// Intermediate quantities of the binomial tail argument at one n.
struct BoundChainRecord {
    std::uint64_t n = 0;
    double s = 0.0;
    Fraction theta{1, 1};
    std::uint64_t m_n = 0;  // ceil(theta n / 2)
    std::uint64_t r_n = 0;  // ceil(theta n / 4)
    double Z = 0.0;
    double q_ge_r = 0.0;         // q_{>= r_n}
    double binomial_tail = 0.0;  // P(Binomial(n, q_{>= r_n}) >= r_n), exact
    double log_binomial_bound = 0.0;  // r_n ln(e n q / r_n)
    double binomial_bound = 0.0;
    double mc_probability = 0.0;  // P(#distinct >= m_n)
    double mc_stderr = 0.0;
    double mc_event_b = 0.0;      // P(#{X_i >= r_n} >= r_n)
    std::uint64_t inclusion_violations = 0;  // trials in the first event but not the second
    double log_S_mc = 0.0;        // n ln Z + ln P; -inf when no hits
    double log_S_bound = 0.0;     // n ln Z + ln(binomial bound)
    std::uint64_t M_s = 0;
    bool guard_holds = false;     // r_n >= M_s; otherwise the guard is only assumed
    bool chain_holds = false;
    std::uint64_t trials = 0;
    std::uint64_t seed = 0;
};

/// ln of Z_s^n (e n q_{>=r_n} / r_n)^{r_n}, an upper bound on S_n for every n.
inline double log_cylinder_sum_bound(const WeightModel& model, std::uint64_t n, double s, Fraction theta) {
    if (n == 0) throw DomainError("log_cylinder_sum_bound: n must be >= 1");
    if (theta.num() == 0 || theta.num() > theta.den()) throw DomainError("log_cylinder_sum_bound: theta must lie in (0, 1]");
    const TiltedDistribution q(model, s);
    const std::uint64_t r = binomial_level(theta, n);
    const double nd = static_cast<double>(n), rd = static_cast<double>(r);
    const double qr = q.tail(r);
    return nd * std::log(q.Z()) + rd * (1.0 + std::log(nd * qr / rd));
}

/// Evaluates P_mc <= P(Binomial >= r_n) <= (e n q / r_n)^{r_n} and the event
/// inclusion trial by trial. `M_s` stands in for the tail-lemma threshold.
inline BoundChainRecord bound_chain(const WeightModel& model, std::uint64_t n, double s, Fraction theta, std::uint64_t M_s,
                                    std::uint64_t trials, std::uint64_t seed, unsigned threads = 1) {
    if (n == 0 || trials == 0) throw DomainError("bound_chain: n and trials must be >= 1");
    if (theta.num() == 0 || theta.num() > theta.den()) throw DomainError("bound_chain: theta must lie in (0, 1]");
    const TiltedDistribution q(model, s);
    BoundChainRecord rec;
    rec.n = n;
    rec.s = s;
    rec.theta = theta;
    rec.m_n = distinct_threshold(theta, n);
    rec.r_n = binomial_level(theta, n);
    rec.Z = q.Z();
    rec.q_ge_r = q.tail(rec.r_n);
    rec.M_s = M_s;
    rec.guard_holds = rec.r_n >= M_s;
    const double nd = static_cast<double>(n), rd = static_cast<double>(rec.r_n);
    rec.binomial_tail = rec.q_ge_r >= 1.0 ? 1.0 : boost::math::ibeta(rd, nd - rd + 1.0, rec.q_ge_r);
    rec.log_binomial_bound = rd * (1.0 + std::log(nd * rec.q_ge_r / rd));
    rec.binomial_bound = std::exp(rec.log_binomial_bound);

    threads = std::max(1U, std::min<unsigned>(threads, static_cast<unsigned>(std::min<std::uint64_t>(trials, 256))));
    struct Counts {
        std::uint64_t a = 0, b = 0, viol = 0;
    };
    std::vector<Counts> counts(threads);
    auto work = [&](unsigned worker) {
        std::vector<std::uint64_t> x(n);
        Counts& c = counts[worker];
        for (std::uint64_t tr = worker; tr < trials; tr += threads) {
            Rng rng(seed, tr);
            for (auto& v : x) v = q.sample(rng.uniform_open());
            const bool a = count_distinct_small(x) >= rec.m_n;
            const auto large = std::count_if(x.begin(), x.end(), [&](std::uint64_t v) { return v >= rec.r_n; });
            const bool b = static_cast<std::uint64_t>(large) >= rec.r_n;
            c.a += a;
            c.b += b;
            c.viol += a && !b;
        }
    };
    if (threads == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w);
        for (auto& th : pool) th.join();
    }
    Counts tot;
    for (const auto& c : counts) {
        tot.a += c.a;
        tot.b += c.b;
        tot.viol += c.viol;
    }
    const double td = static_cast<double>(trials);
    rec.trials = trials;
    rec.seed = seed;
    rec.mc_probability = static_cast<double>(tot.a) / td;
    rec.mc_stderr = std::sqrt(rec.mc_probability * (1.0 - rec.mc_probability) / td);
    rec.mc_event_b = static_cast<double>(tot.b) / td;
    rec.inclusion_violations = tot.viol;
    rec.log_S_mc = nd * std::log(rec.Z) + std::log(rec.mc_probability);
    rec.log_S_bound = nd * std::log(rec.Z) + rec.log_binomial_bound;
    rec.chain_holds = tot.viol == 0 && rec.mc_probability <= rec.binomial_tail + 3.0 * rec.mc_stderr + 1e-15 &&
                      rec.binomial_tail <= rec.binomial_bound * (1.0 + 1e-12);
    return rec;
}

}  // namespace dds
