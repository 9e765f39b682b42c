#pragma once

// Distinct-digit counting D_n and the occupancy law E D_n ~ Gamma(1 - 1/rho) (C n)^{1/rho}.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "dds/errors.hpp"
#include "dds/numeric.hpp"
#include "dds/rng.hpp"
#include "dds/weights.hpp"

namespace dds {

/// Running count of distinct digits in a stream.
///
/// Small digits live in a dense bitmap, the rest in a hash set, so heavy
/// tails (huge digits) cost memory only per distinct value.
class DistinctCounter {
public:
    explicit DistinctCounter(bool track_first_occurrence = false, std::uint64_t dense_limit = std::uint64_t{1} << 20)
        : bits_((dense_limit + 63) / 64, 0), dense_limit_(dense_limit), track_(track_first_occurrence) {}

    /// Feeds one digit; returns true when it was not seen before.
    bool feed(std::uint64_t digit) {
        if (digit == 0) throw DomainError("DistinctCounter: digits are >= 1");
        ++time_;
        bool fresh;
        if (digit < dense_limit_) {
            std::uint64_t& w = bits_[digit >> 6];
            const std::uint64_t bit = std::uint64_t{1} << (digit & 63);
            fresh = (w & bit) == 0;
            w |= bit;
        } else {
            fresh = overflow_.insert(digit).second;
        }
        if (fresh) {
            ++count_;
            if (track_) first_.emplace(digit, time_);
        }
        return fresh;
    }

    bool contains(std::uint64_t digit) const {
        if (digit == 0) return false;
        if (digit < dense_limit_) return (bits_[digit >> 6] >> (digit & 63)) & 1U;
        return overflow_.count(digit) != 0;
    }

    std::uint64_t count() const noexcept { return count_; }
    std::uint64_t time() const noexcept { return time_; }
    bool tracks_first_occurrence() const noexcept { return track_; }

    /// Time (1-based) at which `digit` first appeared, when tracking is on.
    std::optional<std::uint64_t> first_occurrence(std::uint64_t digit) const {
        if (!track_) throw DomainError("DistinctCounter: first-occurrence tracking is disabled");
        const auto it = first_.find(digit);
        if (it == first_.end()) return std::nullopt;
        return it->second;
    }
    const std::unordered_map<std::uint64_t, std::uint64_t>& first_occurrence_times() const noexcept { return first_; }

    void reset() {
        std::fill(bits_.begin(), bits_.end(), 0);
        overflow_.clear();
        first_.clear();
        count_ = 0;
        time_ = 0;
    }

private:
    std::vector<std::uint64_t> bits_;
    std::unordered_set<std::uint64_t> overflow_;
    std::unordered_map<std::uint64_t, std::uint64_t> first_;
    std::uint64_t dense_limit_;
    std::uint64_t count_ = 0;
    std::uint64_t time_ = 0;
    bool track_;
};

/// Gamma(1 - 1/rho) C^{1/rho}.
inline double karlin_constant(double rho, double C) {
    if (!(rho > 1.0) || !std::isfinite(rho)) throw DomainError("karlin_constant: rho must be > 1");
    if (!(C > 0.0)) throw DomainError("karlin_constant: C must be > 0");
    return std::tgamma(1.0 - 1.0 / rho) * std::pow(C, 1.0 / rho);
}

/// Lower and upper bounds on E D_n = sum_k (1 - (1 - p_k)^n).
struct Bracket {
    double lower = 0.0;
    double upper = 0.0;
    double mid() const noexcept { return 0.5 * (lower + upper); }
};

/// Terms are summed directly until n p_k <= 1e-4. On the remaining tail the
/// binomial expansion alternates with decreasing terms, so
/// n T_1 - C(n,2) T_2 <= tail <= n T_1 - C(n,2) T_2 + C(n,3) T_3, T_j = sum p_k^j.
inline Bracket expected_distinct_bracket(const WeightModel& model, std::uint64_t n) {
    if (n == 0) throw DomainError("expected_distinct: n must be >= 1");
    const double nd = static_cast<double>(n);
    NeumaierSum head;
    const std::uint64_t limit = model.support_size().value_or(std::numeric_limits<std::uint64_t>::max());
    std::uint64_t k = 1;
    for (; k <= limit; ++k) {
        const double p = model.weight(k);
        if (model.infinite() && nd * p <= 1e-4 && k > model.prefix().size()) break;
        head.add(-std::expm1(nd * std::log1p(-p)));
    }
    if (k > limit) return {head.value(), head.value()};
    const double t1 = tail_sum(model, k);
    const double t2 = tilted_tail_sum(model, k, 2.0);
    const double t3 = tilted_tail_sum(model, k, 3.0);
    const double lower = nd * t1 - 0.5 * nd * (nd - 1.0) * t2;
    const double upper = lower + nd * (nd - 1.0) * (nd - 2.0) / 6.0 * t3;
    return {head.value() + lower, head.value() + upper};
}

/// E D_n, accurate to the width of expected_distinct_bracket.
inline double expected_distinct(const WeightModel& model, std::uint64_t n) {
    if (n == 1) return 1.0;
    return expected_distinct_bracket(model, n).mid();
}

/// Statistics of D_t / t^{1/rho} at one checkpoint t.
struct CheckpointStat {
    std::uint64_t time = 0;
    double mean = 0.0;          // of D_t / t^{1/rho}
    double sd = 0.0;
    double mean_distinct = 0.0; // of D_t
    double sd_distinct = 0.0;
    double exact_expectation = 0.0;  // E D_t / t^{1/rho}
};

struct LawReport {
    std::uint64_t n = 0;
    std::uint64_t trials = 0;
    std::uint64_t seed = 0;
    double rho = 0.0;
    double karlin_constant = std::numeric_limits<double>::quiet_NaN();
    std::vector<CheckpointStat> checkpoints;

    const CheckpointStat& final() const { return checkpoints.back(); }
};

/// Powers of two below n, then n itself.
inline std::vector<std::uint64_t> default_checkpoints(std::uint64_t n) {
    std::vector<std::uint64_t> out;
    for (std::uint64_t t = 1; t < n; t *= 2) out.push_back(t);
    out.push_back(n);
    return out;
}

/// D_t at each checkpoint for one trial driven by Rng(seed, trial).
inline std::vector<std::uint64_t> occupancy_trial(const WeightModel& model, const std::vector<std::uint64_t>& checkpoints,
                                                  std::uint64_t seed, std::uint64_t trial, DistinctCounter& counter) {
    counter.reset();
    Rng rng(seed, trial);
    std::vector<std::uint64_t> out;
    out.reserve(checkpoints.size());
    std::size_t next = 0;
    const std::uint64_t n = checkpoints.back();
    for (std::uint64_t t = 1; t <= n; ++t) {
        counter.feed(model.sample(rng.uniform_open()));
        if (t == checkpoints[next]) {
            out.push_back(counter.count());
            ++next;
        }
    }
    return out;
}

/// Monte Carlo check of the n^{1/rho} law. Deterministic in `seed` regardless
/// of `threads`: each trial owns its substream and the reduction runs in trial order.
inline LawReport monte_carlo_law(const WeightModel& model, std::uint64_t n, std::uint64_t trials, std::uint64_t seed,
                                 unsigned threads = 1, std::vector<std::uint64_t> checkpoints = {}) {
    if (n == 0 || trials == 0) throw DomainError("monte_carlo_law: n and trials must be >= 1");
    if (!model.infinite()) throw DomainError("monte_carlo_law: the occupancy law needs an infinite model");
    if (checkpoints.empty()) checkpoints = default_checkpoints(n);
    if (!std::is_sorted(checkpoints.begin(), checkpoints.end()) ||
        std::adjacent_find(checkpoints.begin(), checkpoints.end()) != checkpoints.end() || checkpoints.front() == 0 ||
        checkpoints.back() != n)
        throw DomainError("monte_carlo_law: checkpoints must be strictly increasing in [1, n] and end at n");

    std::vector<std::vector<std::uint64_t>> results(trials);
    threads = std::max(1U, std::min<unsigned>(threads, static_cast<unsigned>(std::min<std::uint64_t>(trials, 256))));
    auto work = [&](unsigned worker) {
        DistinctCounter counter;
        for (std::uint64_t tr = worker; tr < trials; tr += threads)
            results[tr] = occupancy_trial(model, checkpoints, seed, tr, counter);
    };
    if (threads == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w);
        for (auto& th : pool) th.join();
    }

    LawReport rep;
    rep.n = n;
    rep.trials = trials;
    rep.seed = seed;
    rep.rho = model.rho();
    if (auto C = model.tail_constant()) rep.karlin_constant = karlin_constant(model.rho(), *C);
    const double td = static_cast<double>(trials);
    for (std::size_t c = 0; c < checkpoints.size(); ++c) {
        const double scale = std::pow(static_cast<double>(checkpoints[c]), 1.0 / model.rho());
        double sum = 0.0, sumsq = 0.0;
        for (const auto& r : results) {
            const double d = static_cast<double>(r[c]);
            sum += d;
            sumsq += d * d;
        }
        const double mean = sum / td;
        const double var = trials > 1 ? std::max(0.0, (sumsq - td * mean * mean) / (td - 1.0)) : 0.0;
        CheckpointStat st;
        st.time = checkpoints[c];
        st.mean_distinct = mean;
        st.sd_distinct = std::sqrt(var);
        st.mean = mean / scale;
        st.sd = st.sd_distinct / scale;
        st.exact_expectation = expected_distinct(model, checkpoints[c]) / scale;
        rep.checkpoints.push_back(st);
    }
    return rep;
}

}  // namespace dds
