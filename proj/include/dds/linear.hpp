#pragma once

// Block-concatenation construction for a linear distinctness rate theta.
//
// Level j uses blocks of length L_j over the alphabet A_j = [a_j, a_j + N_j).
// Inside a block the number of distinct symbols seen after t steps is exactly
// r(t) = ceil(theta t); B_j is the set of such blocks and mu gives each
// concatenation of blocks b_1 ... b_J mass prod 1/#B_j.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "dds/codec.hpp"
#include "dds/errors.hpp"
#include "dds/numeric.hpp"
#include "dds/rng.hpp"
#include "dds/weights.hpp"

namespace dds {

/// Target prefix-distinctness profile of one block.
struct BlockProfile {
    Fraction theta;
    std::uint64_t L = 0;
    std::vector<std::uint64_t> r;          // r[t] for t = 0..L
    std::vector<std::uint64_t> new_times;  // I, increasing, 1-based

    std::uint64_t m() const { return r.back(); }
    bool is_new(std::uint64_t t) const { return r[t] == r[t - 1] + 1; }

    /// Admissible choices at step t (1-based) given N symbols: N - r(t-1) at
    /// new-digit times, r(t-1) otherwise.
    std::uint64_t choices(std::uint64_t t, std::uint64_t N) const { return is_new(t) ? N - r[t - 1] : r[t - 1]; }
};

inline BlockProfile profile(Fraction theta, std::uint64_t L) {
    if (theta.num() == 0 || theta.num() > theta.den()) throw DomainError("profile: theta must lie in (0, 1]");
    if (L == 0) throw DomainError("profile: L must be >= 1");
    BlockProfile p;
    p.theta = theta;
    p.L = L;
    p.r.resize(L + 1);
    p.r[0] = 0;
    for (std::uint64_t t = 1; t <= L; ++t) {
        p.r[t] = theta.ceil_mul(t);
        if (p.r[t] == p.r[t - 1] + 1) p.new_times.push_back(t);
    }
    return p;
}

/// #B for one level: N!/(N-m)! times the product of r(t-1) over repeat times.
struct BlockCount {
    std::optional<u128> exact;  // when it fits in 128 bits
    double log_count = 0.0;
};

inline BlockCount count_blocks(std::uint64_t N, const BlockProfile& prof) {
    if (N < prof.m())
        throw InfeasibleError("count_blocks: alphabet size " + std::to_string(N) + " < m = " + std::to_string(prof.m()));
    BlockCount out;
    NeumaierSum lg;
    u128 exact = 1;
    bool fits = true;
    for (std::uint64_t t = 1; t <= prof.L; ++t) {
        const std::uint64_t c = prof.choices(t, N);
        lg.add(std::log(static_cast<double>(c)));
        if (fits) {
            if (c != 0 && exact > (~u128{0}) / c)
                fits = false;
            else
                exact *= c;
        }
    }
    out.log_count = lg.value();
    if (fits) out.exact = exact;
    return out;
}

inline BlockCount count_blocks(std::uint64_t N, std::uint64_t L, Fraction theta) {
    return count_blocks(N, profile(theta, L));
}

/// One level of a block schedule.
struct BlockLevel {
    std::uint64_t j = 0;
    std::uint64_t L = 0;
    std::uint64_t N = 0;
    std::uint64_t alphabet_first = 0;  // A_j = [alphabet_first, alphabet_first + N)
    std::uint64_t start = 0;           // S_{j-1}: positions before this level
    BlockProfile prof;
    BlockCount count;

    std::uint64_t m() const { return prof.m(); }
    std::uint64_t end() const { return start + L; }  // S_j
    bool in_alphabet(std::uint64_t d) const { return d >= alphabet_first && d - alphabet_first < N; }
};

class BlockSchedule {
public:
    struct CustomLevel {
        std::uint64_t L;
        std::uint64_t N;
    };

    /// L_j = 2^j, m_j = ceil(theta L_j), N_j = 2^{j-1} max(m_1, k1), A_j = [N_j, 2 N_j).
    static BlockSchedule build(Fraction theta, std::uint64_t k1, std::uint64_t J_max) {
        if (theta.num() == 0 || theta.num() > theta.den()) throw DomainError("build_schedule: theta must lie in (0, 1]");
        if (k1 == 0) throw DomainError("build_schedule: k1 must be >= 1");
        if (J_max == 0) throw DomainError("build_schedule: J_max must be >= 1");
        if (J_max > 40) throw DepthError("build_schedule: J_max > 40 gives blocks longer than 2^40");
        BlockSchedule s;
        s.theta_ = theta;
        s.k1_ = k1;
        const std::uint64_t m1 = theta.ceil_mul(2);
        const std::uint64_t N1 = std::max(m1, k1);
        std::uint64_t start = 0;
        for (std::uint64_t j = 1; j <= J_max; ++j) {
            if (N1 > (std::uint64_t{1} << 62) >> (j - 1))
                throw DepthError("build_schedule: alphabet of level " + std::to_string(j) + " overflows 64-bit digits");
            const std::uint64_t N = N1 << (j - 1);
            s.push_level(j, std::uint64_t{1} << j, N, N, start);
            start += std::uint64_t{1} << j;
        }
        return s;
    }

    /// Test schedules with arbitrary (L_j, N_j); alphabets are laid out
    /// contiguously from 1.
    static BlockSchedule custom(Fraction theta, const std::vector<CustomLevel>& levels) {
        if (theta.num() == 0 || theta.num() > theta.den()) throw DomainError("custom schedule: theta must lie in (0, 1]");
        if (levels.empty()) throw DomainError("custom schedule: no levels");
        BlockSchedule s;
        s.theta_ = theta;
        s.k1_ = 1;
        std::uint64_t first = 1, start = 0, j = 1;
        for (const auto& lv : levels) {
            s.push_level(j++, lv.L, lv.N, first, start);
            first += lv.N;
            start += lv.L;
        }
        return s;
    }

    Fraction theta() const noexcept { return theta_; }
    std::uint64_t k1() const noexcept { return k1_; }
    std::uint64_t depth() const noexcept { return levels_.size(); }
    const std::vector<BlockLevel>& levels() const noexcept { return levels_; }
    const BlockLevel& level(std::uint64_t j) const {
        if (j == 0 || j > levels_.size()) throw DomainError("level index out of range");
        return levels_[j - 1];
    }
    /// S_J, total word length of J levels.
    std::uint64_t total_length(std::uint64_t J) const { return J == 0 ? 0 : level(J).end(); }

    /// Level containing 1-based position n.
    const BlockLevel& level_of_position(std::uint64_t n) const {
        for (const auto& lv : levels_)
            if (n > lv.start && n <= lv.end()) return lv;
        throw DomainError("position " + std::to_string(n) + " lies beyond the schedule");
    }

private:
    void push_level(std::uint64_t j, std::uint64_t L, std::uint64_t N, std::uint64_t first, std::uint64_t start) {
        BlockLevel lv;
        lv.j = j;
        lv.L = L;
        lv.N = N;
        lv.alphabet_first = first;
        lv.start = start;
        lv.prof = profile(theta_, L);
        lv.count = count_blocks(N, lv.prof);
        levels_.push_back(std::move(lv));
    }

    Fraction theta_;
    std::uint64_t k1_ = 1;
    std::vector<BlockLevel> levels_;
};

inline BlockSchedule build_schedule(Fraction theta, std::uint64_t k1, std::uint64_t J_max) {
    return BlockSchedule::build(theta, k1, J_max);
}

/// k1 from the empirical Potter scan with epsilon = 1.
inline std::uint64_t default_k1(const WeightModel& model, std::uint64_t scan_limit = 10000) {
    return potter_scan(model, 1.0, scan_limit).k_eps;
}

/// Uniform draw from B_j: fresh symbols by a sparse Fisher-Yates shuffle of
/// A_j, repeats uniformly among the symbols already used in the block.
inline std::vector<std::uint64_t> sample_block(const BlockSchedule& sched, std::uint64_t j, Rng& rng) {
    const auto& lv = sched.level(j);
    std::vector<std::uint64_t> out;
    out.reserve(lv.L);
    std::vector<std::uint64_t> used;
    used.reserve(lv.m());
    std::unordered_map<std::uint64_t, std::uint64_t> swapped;  // virtual permutation of [0, N)
    auto at = [&](std::uint64_t i) {
        const auto it = swapped.find(i);
        return it == swapped.end() ? i : it->second;
    };
    for (std::uint64_t t = 1; t <= lv.L; ++t) {
        if (lv.prof.is_new(t)) {
            const std::uint64_t k = used.size();
            const std::uint64_t pick = k + rng.below(lv.N - k);
            const std::uint64_t v = at(pick);
            swapped[pick] = at(k);
            swapped[k] = v;
            used.push_back(lv.alphabet_first + v);
            out.push_back(used.back());
        } else {
            out.push_back(used[rng.below(used.size())]);
        }
    }
    return out;
}

/// A point of F_theta truncated at depth J: one uniform block per level.
inline DigitWord sample_point(const BlockSchedule& sched, std::uint64_t J, Rng& rng) {
    if (J == 0 || J > sched.depth()) throw DomainError("sample_point: depth out of range");
    DigitWord w;
    w.reserve(sched.total_length(J));
    for (std::uint64_t j = 1; j <= J; ++j) {
        const auto b = sample_block(sched, j, rng);
        w.insert(w.end(), b.begin(), b.end());
    }
    return w;
}

/// ln mu(C(word)). Mid-block prefixes get the mass of all their admissible
/// completions, i.e. -sum ln(choices) over the positions of the word.
inline double mu_log_mass(const BlockSchedule& sched, std::span<const std::uint64_t> word) {
    if (word.size() > sched.total_length(sched.depth()))
        throw DomainError("mu_log_mass: word longer than the schedule");
    NeumaierSum acc;
    std::size_t pos = 0;
    for (const auto& lv : sched.levels()) {
        if (pos >= word.size()) break;
        std::unordered_set<std::uint64_t> seen;
        for (std::uint64_t t = 1; t <= lv.L && pos < word.size(); ++t, ++pos) {
            const std::uint64_t d = word[pos];
            const bool fresh = !seen.count(d);
            if (!lv.in_alphabet(d) || fresh != lv.prof.is_new(t))
                throw NotInSupport("mu_log_mass: digit " + std::to_string(d) + " at position " + std::to_string(pos + 1) +
                                   " is not admissible");
            seen.insert(d);
            acc.add(-std::log(static_cast<double>(lv.prof.choices(t, lv.N))));
        }
    }
    return acc.value();
}

/// Depth J with S_J = n, or nullopt when n is not block-aligned.
inline std::optional<std::uint64_t> aligned_depth(const BlockSchedule& sched, std::uint64_t n) {
    for (const auto& lv : sched.levels())
        if (lv.end() == n) return lv.j;
    return std::nullopt;
}

/// ln mu(C) / ln diam(C) for a block-aligned word.
inline double local_dimension(const BlockSchedule& sched, const WeightModel& model, std::span<const std::uint64_t> word) {
    if (word.empty()) throw DomainError("local_dimension: undefined for the empty word");
    const auto J = aligned_depth(sched, word.size());
    if (!J) throw DomainError("local_dimension: word is not block-aligned");
    if (auto P = model.support_size()) {
        const auto& top = sched.level(*J);
        if (top.alphabet_first + top.N - 1 > *P)
            throw DomainError("local_dimension: schedule alphabets exceed the model support");
    }
    const double lm = mu_log_mass(sched, word);
    NeumaierSum ld;
    for (auto d : word) ld.add(model.log_weight(d));
    return lm / ld.value();
}

/// Largest -ln diam over blocks of level j: the m lightest symbols once each,
/// the lightest one for every repeat.
inline double max_block_neg_log_diam(const BlockSchedule& sched, const WeightModel& model, std::uint64_t j) {
    const auto& lv = sched.level(j);
    std::vector<double> nl(lv.N);
    for (std::uint64_t i = 0; i < lv.N; ++i) nl[i] = -model.log_weight(lv.alphabet_first + i);
    const std::uint64_t m = lv.m();
    std::partial_sort(nl.begin(), nl.begin() + static_cast<std::ptrdiff_t>(m), nl.end(), std::greater<>());
    NeumaierSum acc;
    for (std::uint64_t i = 0; i < m; ++i) acc.add(nl[i]);
    acc.add(static_cast<double>(lv.L - m) * nl[0]);
    return acc.value();
}

/// ln #B_j / max over level-j blocks of (-ln diam).
inline double ratio_estimate(const BlockSchedule& sched, const WeightModel& model, std::uint64_t j) {
    return sched.level(j).count.log_count / max_block_neg_log_diam(sched, model, j);
}

/// Smallest j such that ratio_estimate >= (1 - delta)/(rho + delta) for every
/// level from j to the schedule depth; nullopt when the last level fails.
inline std::optional<std::uint64_t> empirical_j_delta(const BlockSchedule& sched, const WeightModel& model, double delta) {
    const double target = (1.0 - delta) / (model.rho() + delta);
    std::optional<std::uint64_t> j_delta;
    for (std::uint64_t j = sched.depth(); j >= 1; --j) {
        if (ratio_estimate(sched, model, j) >= target)
            j_delta = j;
        else
            break;
    }
    return j_delta;
}

/// Bracket on mu([a, b)).
struct MassBracket {
    double lower = 0.0;
    double upper = 0.0;
    std::uint64_t depth_reached = 0;
    double width() const noexcept { return upper - lower; }
};

namespace detail {

/// mu([0, x)) bracketed: walks x's digits, adding the mass of admissible
/// siblings to the left, until x leaves the support or the depth cap is reached.
struct LeftMass {
    double known = 0.0;      // mass certainly left of x
    double uncertain = 0.0;  // mass of x's deepest cylinder
    std::uint64_t depth = 0;
};

template <class NextDigit>
LeftMass left_mass(const BlockSchedule& sched, std::uint64_t depth_cap, NextDigit&& next_digit) {
    LeftMass out;
    NeumaierSum known;
    double cur = 1.0;  // mu of the current cylinder of x
    for (std::uint64_t j = 1; j <= depth_cap; ++j) {
        const auto& lv = sched.level(j);
        std::vector<std::uint64_t> used;  // sorted symbols of the current block
        for (std::uint64_t t = 1; t <= lv.L; ++t) {
            const std::uint64_t d = next_digit();
            const std::uint64_t c = lv.prof.choices(t, lv.N);
            const double child = cur / static_cast<double>(c);
            const auto it = std::lower_bound(used.begin(), used.end(), d);
            const auto used_below = static_cast<std::uint64_t>(it - used.begin());
            const bool seen = it != used.end() && *it == d;
            std::uint64_t below;  // admissible symbols < d
            if (lv.prof.is_new(t)) {
                const std::uint64_t alpha_below =
                    d <= lv.alphabet_first ? 0 : std::min(d - lv.alphabet_first, lv.N);
                below = alpha_below - used_below;
            } else {
                below = used_below;
            }
            known.add(child * static_cast<double>(below));
            const bool admissible = lv.in_alphabet(d) && (seen != lv.prof.is_new(t));
            if (!admissible) {
                out.known = known.value();
                out.uncertain = 0.0;
                out.depth = j;
                return out;
            }
            if (!seen) used.insert(it, d);
            cur = child;
        }
        out.depth = j;
    }
    out.known = known.value();
    out.uncertain = cur;
    return out;
}

}  // namespace detail

/// Bracket on mu([a, b)) from the digit paths of a and b down to depth_cap
/// levels. The width is the mass of the two deepest boundary cylinders.
inline MassBracket interval_mass(const BlockSchedule& sched, const WeightModel& model, const Rational& a, const Rational& b,
                                 std::uint64_t depth_cap) {
    if (!(a < b) || a < 0 || b > 1) throw DomainError("interval_mass: need 0 <= a < b <= 1");
    if (depth_cap == 0 || depth_cap > sched.depth()) throw DomainError("interval_mass: depth_cap out of range");
    auto F = [&](const Rational& x) -> detail::LeftMass {
        if (x == 0) return {0.0, 0.0, 0};
        if (x == 1) return {1.0, 0.0, 0};
        Rational y = x;
        return detail::left_mass(sched, depth_cap, [&] {
            const auto k = branch(model, y);
            y = apply_T(model, y);
            return k;
        });
    };
    const auto fa = F(a), fb = F(b);
    MassBracket out;
    out.lower = std::max(0.0, fb.known - (fa.known + fa.uncertain));
    out.upper = std::min(1.0, fb.known + fb.uncertain - fa.known);
    out.depth_reached = std::max(fa.depth, fb.depth);
    return out;
}

/// Floating-point variant for models without rational weights.
inline MassBracket interval_mass_approx(const BlockSchedule& sched, const WeightModel& model, long double a, long double b,
                                        std::uint64_t depth_cap) {
    if (!(a < b) || a < 0 || b > 1) throw DomainError("interval_mass: need 0 <= a < b <= 1");
    if (depth_cap == 0 || depth_cap > sched.depth()) throw DomainError("interval_mass: depth_cap out of range");
    auto F = [&](long double x) -> detail::LeftMass {
        if (x == 0) return {0.0, 0.0, 0};
        if (x == 1) return {1.0, 0.0, 0};
        long double y = x;
        return detail::left_mass(sched, depth_cap, [&] {
            const auto k = branch_approx(model, y);
            y = apply_T_approx(model, y);
            return k;
        });
    };
    const auto fa = F(a), fb = F(b);
    MassBracket out;
    out.lower = std::max(0.0, fb.known - (fa.known + fa.uncertain));
    out.upper = std::min(1.0, fb.known + fb.uncertain - fa.known);
    out.depth_reached = std::max(fa.depth, fb.depth);
    return out;
}

/// D_n along a word (1-based; d[0] = 0).
inline std::vector<std::uint64_t> distinct_trace(std::span<const std::uint64_t> word) {
    std::vector<std::uint64_t> d(word.size() + 1, 0);
    std::unordered_set<std::uint64_t> seen;
    for (std::size_t i = 0; i < word.size(); ++i) {
        seen.insert(word[i]);
        d[i + 1] = seen.size();
    }
    return d;
}

/// theta n <= D_n < theta n + J(n) at every n, where J(n) is the level of position n.
inline bool linear_sandwich_holds(const BlockSchedule& sched, std::span<const std::uint64_t> word) {
    const auto D = distinct_trace(word);
    const auto th = sched.theta();
    for (std::uint64_t n = 1; n < D.size(); ++n) {
        const std::uint64_t J = sched.level_of_position(n).j;
        if (!th.times_le(n, D[n])) return false;
        if (D[n] >= J && th.times_le(n, D[n] - J)) return false;  // D_n - J >= theta n
    }
    return true;
}

/// One row of the per-position construction trace.
struct LinearTraceRow {
    std::uint64_t n = 0;
    std::uint64_t D = 0;
    double theta_n = 0.0;
    std::uint64_t bound = 0;  // ceil(theta n) + J(n) - 1, the largest D_n allowed
    double log_mass = 0.0;
    double log_diam = 0.0;
    double local_dim = std::numeric_limits<double>::quiet_NaN();  // block-aligned n only
};

inline std::vector<LinearTraceRow> linear_trace(const BlockSchedule& sched, const WeightModel& model,
                                                std::span<const std::uint64_t> word) {
    mu_log_mass(sched, word);  // admissibility check
    const auto D = distinct_trace(word);
    const auto th = sched.theta();
    std::vector<LinearTraceRow> rows;
    rows.reserve(word.size());
    NeumaierSum lm, ld;
    for (std::uint64_t n = 1; n <= word.size(); ++n) {
        const auto& lv = sched.level_of_position(n);
        lm.add(-std::log(static_cast<double>(lv.prof.choices(n - lv.start, lv.N))));
        ld.add(model.log_weight(word[n - 1]));
        LinearTraceRow r;
        r.n = n;
        r.D = D[n];
        r.theta_n = th.value() * static_cast<double>(n);
        r.bound = th.ceil_mul(n) + lv.j - 1;
        r.log_mass = lm.value();
        r.log_diam = ld.value();
        if (n == lv.end()) r.local_dim = r.log_mass / r.log_diam;
        rows.push_back(r);
    }
    return rows;
}

}  // namespace dds
