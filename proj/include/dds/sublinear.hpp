#pragma once

// Forced-digit construction for a sublinear distinctness profile f.
//
// At a new-digit time n (f(n) = f(n-1) + 1) the digit is forced to
// b_n = K_n + f(n); elsewhere it is drawn from {1..K_n} with probability
// p_k^{s_n}, where s_n solves sum_{k<=K_n} p_k^s = 1. Labels here are ranks
// in the non-increasing order of the weights; the schedule maps them back.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
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

enum class ProfileSource { builtin_sqrt, builtin_power, builtin_log, user_table };

inline std::string to_string(ProfileSource s) {
    switch (s) {
        case ProfileSource::builtin_sqrt: return "builtin-sqrt";
        case ProfileSource::builtin_power: return "builtin-power";
        case ProfileSource::builtin_log: return "builtin-log";
        case ProfileSource::user_table: return "user-table";
    }
    return "?";
}

/// Integer growth profile f on [0, horizon], f(0) = 0. Admissibility is only
/// checked on the horizon, so a valid object is "admissible on horizon".
class AdmissibleProfile {
public:
    /// Takes f(1..horizon) and validates it.
    static AdmissibleProfile from_table(std::vector<std::uint64_t> f, ProfileSource source = ProfileSource::user_table) {
        if (f.empty()) throw DomainError("profile: empty table");
        AdmissibleProfile p;
        p.f_.reserve(f.size() + 1);
        p.f_.push_back(0);
        p.f_.insert(p.f_.end(), f.begin(), f.end());
        p.source_ = source;
        p.validate();
        return p;
    }

    /// Slope-limited envelope f(n) = min(f(n-1) + 1, floor(g(n))).
    static AdmissibleProfile envelope(const std::function<double(std::uint64_t)>& g, std::uint64_t horizon,
                                      ProfileSource source = ProfileSource::user_table) {
        if (horizon == 0) throw DomainError("make_admissible: horizon must be >= 1");
        std::vector<std::uint64_t> f(horizon);
        std::uint64_t prev = 0;
        double gprev = 0.0;
        for (std::uint64_t n = 1; n <= horizon; ++n) {
            const double gn = g(n);
            if (!std::isfinite(gn) || gn < 0.0) throw DomainError("make_admissible: g(" + std::to_string(n) + ") is not a finite nonnegative value");
            if (gn < gprev) throw DomainError("make_admissible: g decreases at n = " + std::to_string(n));
            gprev = gn;
            prev = std::min(prev + 1, static_cast<std::uint64_t>(std::floor(gn)));
            f[n - 1] = prev;
        }
        return from_table(std::move(f), source);
    }

    /// f(n) = floor(sqrt n), computed with integer square roots.
    static AdmissibleProfile sqrt(std::uint64_t horizon) {
        if (horizon == 0) throw DomainError("profile: horizon must be >= 1");
        std::vector<std::uint64_t> f(horizon);
        std::uint64_t r = 0;
        for (std::uint64_t n = 1; n <= horizon; ++n) {
            while ((r + 1) * (r + 1) <= n) ++r;
            f[n - 1] = r;
        }
        return from_table(std::move(f), ProfileSource::builtin_sqrt);
    }

    /// Envelope of c n^beta, 0 < beta < 1.
    static AdmissibleProfile power(double beta, double c, std::uint64_t horizon) {
        if (!(beta > 0.0 && beta < 1.0)) throw DomainError("profile: power needs 0 < beta < 1");
        if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("profile: power needs c > 0");
        return envelope([=](std::uint64_t n) { return c * std::pow(static_cast<double>(n), beta); }, horizon,
                        ProfileSource::builtin_power);
    }

    /// Envelope of c ln(n + 1).
    static AdmissibleProfile log(double c, std::uint64_t horizon) {
        if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("profile: log needs c > 0");
        return envelope([=](std::uint64_t n) { return c * std::log1p(static_cast<double>(n)); }, horizon,
                        ProfileSource::builtin_log);
    }

    std::uint64_t operator()(std::uint64_t n) const {
        if (n > horizon()) throw HorizonExceeded("profile: n = " + std::to_string(n) + " is beyond the horizon");
        return f_[n];
    }
    std::uint64_t horizon() const noexcept { return f_.size() - 1; }
    ProfileSource source() const noexcept { return source_; }
    /// f(0..horizon).
    const std::vector<std::uint64_t>& values() const noexcept { return f_; }
    bool is_new_time(std::uint64_t n) const { return n >= 1 && (*this)(n) == f_[n - 1] + 1; }

private:
    static double growth_ratio(std::uint64_t f, std::uint64_t n) {
        return f <= 1 ? 0.0 : static_cast<double>(f) * std::log(static_cast<double>(f)) / static_cast<double>(n);
    }

    void validate() const {
        const std::uint64_t H = horizon();
        for (std::uint64_t n = 1; n <= H; ++n) {
            if (f_[n] < f_[n - 1] || f_[n] - f_[n - 1] > 1)
                throw NotAdmissible("unit increments", "profile: f(" + std::to_string(n) + ") - f(" + std::to_string(n - 1) +
                                                           ") is not 0 or 1");
        }
        if (!(f_[H] > f_[1]))
            throw NotAdmissible("unbounded", "profile: f(horizon) <= f(1), so growth is not visible on the horizon");
        // f ln f / n over the last decade: negative least-squares slope against
        // ln n and a strictly smaller value at the end than at the start
        const std::uint64_t lo = std::max<std::uint64_t>(1, H / 10);
        const std::uint64_t step = std::max<std::uint64_t>(1, (H - lo) / 4096);
        double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, cnt = 0.0;
        for (std::uint64_t n = lo; n <= H; n += step) {
            const double x = std::log(static_cast<double>(n)), y = growth_ratio(f_[n], n);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            cnt += 1.0;
        }
        const double slope = cnt > 1.0 ? (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx) : 0.0;
        if (!(slope < 0.0) || !(growth_ratio(f_[H], H) < growth_ratio(f_[lo], lo)))
            throw NotAdmissible("f log f / n -> 0",
                                "profile: f(n) ln f(n) / n does not decrease over the last decade of the horizon");
    }

    std::vector<std::uint64_t> f_;
    ProfileSource source_ = ProfileSource::user_table;
};

inline AdmissibleProfile make_admissible(const std::function<double(std::uint64_t)>& g, std::uint64_t horizon) {
    return AdmissibleProfile::envelope(g, horizon);
}

/// Relabelling of the model's digits into non-increasing weight order.
///
/// Labels below `tail_start` (the irregular head) are sorted; from there on
/// the weights are non-increasing, so the full order is a merge of the sorted
/// head with the tail tail_start, tail_start + 1, ... Each head label stores
/// how many tail labels outrank it, which makes both directions O(log head).
class SortedWeights {
public:
    explicit SortedWeights(const WeightModel& model) : model_(model) {
        if (auto P = model.support_size()) {
            tail_start_ = *P + 1;
        } else {
            if (model.kind() == ModelKind::explicit_prefix) tail_start_ = model.prefix().size() + 1;
            if (model.kind() == ModelKind::power_log && model.gamma() > 0.0) {
                // d/dk ln p_k < 0 once rho (1+k) ln(1+k) >= gamma k; (1+k) ln(1+k) / k increases
                while (model.rho() * (1.0 + tail_start_) * std::log1p(static_cast<double>(tail_start_)) <
                       model.gamma() * static_cast<double>(tail_start_))
                    ++tail_start_;
            }
        }
        for (std::uint64_t k = 1; k < tail_start_; ++k) head_.push_back(k);
        std::stable_sort(head_.begin(), head_.end(),
                         [&](std::uint64_t a, std::uint64_t b) { return model.log_weight(a) > model.log_weight(b); });
        for (std::size_t i = 0; i < head_.size(); ++i) {
            const std::uint64_t c = model.infinite() ? tail_above(model.log_weight(head_[i])) : 0;
            outranked_.push_back(c);
            pos_.push_back(i + 1 + c);
            head_rank_.emplace(head_[i], i + 1 + c);
        }
    }

    const WeightModel& model() const noexcept { return model_; }
    std::uint64_t tail_start() const noexcept { return tail_start_; }
    bool identity() const {
        for (std::size_t i = 0; i < head_.size(); ++i)
            if (head_[i] != i + 1 || outranked_[i] != 0) return false;
        return true;
    }

    std::uint64_t label(std::uint64_t rank) const {
        if (rank == 0) throw DomainError("rank must be >= 1");
        if (auto P = model_.support_size(); P && rank > *P)
            throw InfeasibleError("rank " + std::to_string(rank) + " exceeds the finite model support");
        const auto it = std::lower_bound(pos_.begin(), pos_.end(), rank);
        if (it != pos_.end() && *it == rank) return head_[static_cast<std::size_t>(it - pos_.begin())];
        const auto before = static_cast<std::uint64_t>(it - pos_.begin());
        return tail_start_ + (rank - 1 - before);
    }

    std::uint64_t rank(std::uint64_t label) const {
        if (label == 0) throw DomainError("digit labels are >= 1");
        if (auto P = model_.support_size(); P && label > *P)
            throw NotInSupport("digit " + std::to_string(label) + " is outside the finite model support");
        if (label < tail_start_) return head_rank_.at(label);
        const std::uint64_t j = label - tail_start_;
        const auto heads = static_cast<std::uint64_t>(std::upper_bound(outranked_.begin(), outranked_.end(), j) - outranked_.begin());
        return j + 1 + heads;
    }

    double log_weight(std::uint64_t rank) const { return model_.log_weight(label(rank)); }

private:
    // Number of tail labels k >= tail_start with ln p_k > lw.
    std::uint64_t tail_above(double lw) const {
        if (!(model_.log_weight(tail_start_) > lw)) return 0;
        std::uint64_t lo = 0, hi = 1;  // offsets: p at lo is above lw, at hi unknown
        while (model_.log_weight(tail_start_ + hi) > lw) {
            lo = hi;
            if (hi > (std::uint64_t{1} << 61)) throw DomainError("SortedWeights: head weight below every representable tail weight");
            hi *= 2;
        }
        while (hi - lo > 1) {
            const std::uint64_t mid = lo + (hi - lo) / 2;
            (model_.log_weight(tail_start_ + mid) > lw ? lo : hi) = mid;
        }
        return hi;
    }

    WeightModel model_;
    std::uint64_t tail_start_ = 1;
    std::vector<std::uint64_t> head_;       // head labels, heaviest first
    std::vector<std::uint64_t> outranked_;  // tail labels ahead of each head label
    std::vector<std::uint64_t> pos_;        // rank of each head label
    std::unordered_map<std::uint64_t, std::uint64_t> head_rank_;
};

class SublinearSchedule {
public:
    static constexpr std::uint64_t kMaxKStar = 10'000'000;

    static SublinearSchedule build(AdmissibleProfile profile, double t, const WeightModel& model) {
        if (!(t > 0.0 && t < 1.0)) throw DomainError("build_sublinear_schedule: t must lie in (0, 1)");
        SublinearSchedule s(std::move(profile), t, model);
        s.init();
        return s;
    }

    const AdmissibleProfile& profile() const noexcept { return profile_; }
    double t() const noexcept { return t_; }
    const WeightModel& model() const noexcept { return sorted_->model(); }
    const SortedWeights& sorted() const noexcept { return *sorted_; }
    std::uint64_t horizon() const noexcept { return profile_.horizon(); }
    /// (1 + t) / 2.
    double threshold() const noexcept { return 0.5 * (1.0 + t_); }
    std::uint64_t K_star() const noexcept { return k_star_; }
    /// min{n : K_star <= sqrt f(n)}, if reached on the horizon.
    std::optional<std::uint64_t> n_t() const noexcept { return n_t_; }

    std::uint64_t f(std::uint64_t n) const { return profile_(n); }
    std::uint64_t K(std::uint64_t n) const { return K_[checked(n)]; }
    bool forced(std::uint64_t n) const { return profile_.is_new_time(checked(n)); }
    /// b_n as a rank, or nullopt at a free time.
    std::optional<std::uint64_t> forced_rank(std::uint64_t n) const {
        if (!forced(n)) return std::nullopt;
        return K_[n] + f(n);
    }
    std::optional<std::uint64_t> forced_digit(std::uint64_t n) const {
        const auto r = forced_rank(n);
        if (!r) return std::nullopt;
        return sorted_->label(*r);
    }
    /// s_{K_n}.
    double s(std::uint64_t n) const { return levels_.at(K(n)).s; }
    double s_K(std::uint64_t K) const { return levels_.at(K).s; }
    /// #B_n: 1 at forced times, K_n otherwise.
    std::uint64_t alphabet_size(std::uint64_t n) const { return forced(n) ? 1 : K(n); }
    /// Distinct values K_n takes on the horizon.
    std::vector<std::uint64_t> K_values() const {
        std::vector<std::uint64_t> out;
        for (const auto& [k, lv] : levels_) out.push_back(k);
        return out;
    }

    /// Rank drawn with probability p_k^{s_n}, k <= K_n.
    std::uint64_t sample_free_rank(std::uint64_t n, double u) const {
        const auto& cum = levels_.at(K(n)).cum;
        const double x = u * cum.back();
        const auto it = std::upper_bound(cum.begin(), cum.end(), x);
        return std::min<std::uint64_t>(static_cast<std::uint64_t>(it - cum.begin()) + 1, cum.size());
    }

private:
    struct Level {
        double s = 0.0;
        std::vector<double> cum;  // partial sums of p_(k)^s
    };

    SublinearSchedule(AdmissibleProfile profile, double t, const WeightModel& model)
        : profile_(std::move(profile)), t_(t), sorted_(std::make_shared<SortedWeights>(model)) {}

    std::uint64_t checked(std::uint64_t n) const {
        if (n == 0 || n > horizon())
            throw DomainError("position " + std::to_string(n) + " outside [1, " + std::to_string(horizon()) + "]");
        return n;
    }

    double solve_ranked(std::uint64_t K) const {
        std::vector<double> logs(K);
        for (std::uint64_t r = 1; r <= K; ++r) logs[r - 1] = sorted_->log_weight(r);
        return solve_tilt_exponent(logs);
    }

    // s_K >= tau iff sum_{k<=K} p_(k)^tau >= 1, so one cumulative pass finds
    // the smallest such K; the solver then settles float ties at the boundary.
    std::uint64_t find_k_star() const {
        const double tau = threshold();
        const auto support = model().support_size();
        NeumaierSum acc;
        std::uint64_t K = 0;
        while (acc.value() < 1.0) {
            ++K;
            if (K > kMaxKStar) throw TiltThreshold("K_star exceeds " + std::to_string(kMaxKStar) + " for t = " + std::to_string(t_));
            if (support && K > *support) throw TiltThreshold("K_star: no K in the finite support reaches s_K >= (1+t)/2");
            acc.add(std::exp(tau * sorted_->log_weight(K)));
        }
        while (solve_ranked(K) < tau) {
            if (++K > kMaxKStar) throw TiltThreshold("K_star exceeds " + std::to_string(kMaxKStar));
        }
        while (K > 1 && solve_ranked(K - 1) >= tau) --K;
        return K;
    }

    void init() {
        k_star_ = find_k_star();
        const std::uint64_t H = horizon();
        K_.assign(H + 1, 0);
        std::uint64_t prev_b = 0;
        for (std::uint64_t n = 1; n <= H; ++n) {
            const std::uint64_t fn = profile_(n);
            std::uint64_t r = 0;
            while ((r + 1) * (r + 1) <= fn) ++r;
            K_[n] = std::max(k_star_, r);
            if (!n_t_ && r >= k_star_) n_t_ = n;
            if (profile_.is_new_time(n)) {
                const std::uint64_t b = K_[n] + fn;
                if (b <= prev_b) throw Error("sublinear schedule: forced digits do not increase at n = " + std::to_string(n));
                prev_b = b;
                sorted_->label(b);  // support check
            }
        }
        K_[0] = K_[1];
        for (std::uint64_t n = 1; n <= H; ++n) {
            auto [it, fresh] = levels_.try_emplace(K_[n]);
            if (!fresh) continue;
            Level& lv = it->second;
            lv.s = solve_ranked(K_[n]);
            lv.cum.resize(K_[n]);
            NeumaierSum acc;
            for (std::uint64_t r = 1; r <= K_[n]; ++r) {
                acc.add(std::exp(lv.s * sorted_->log_weight(r)));
                lv.cum[r - 1] = acc.value();
            }
        }
    }

    AdmissibleProfile profile_;
    double t_;
    std::shared_ptr<const SortedWeights> sorted_;
    std::uint64_t k_star_ = 1;
    std::optional<std::uint64_t> n_t_;
    std::vector<std::uint64_t> K_;
    std::map<std::uint64_t, Level> levels_;
};

inline SublinearSchedule build_sublinear_schedule(AdmissibleProfile profile, double t, const WeightModel& model) {
    return SublinearSchedule::build(std::move(profile), t, model);
}

/// Digits d_1..d_{n_max} of a point of F_{f,t}, drawn from mu_t.
inline DigitWord sample_point_sublinear(const SublinearSchedule& sched, std::uint64_t n_max, Rng& rng) {
    if (n_max > sched.horizon()) throw HorizonExceeded("sample_point_sublinear: n_max beyond the profile horizon");
    DigitWord w;
    w.reserve(n_max);
    for (std::uint64_t n = 1; n <= n_max; ++n) {
        if (auto b = sched.forced_digit(n))
            w.push_back(*b);
        else
            w.push_back(sched.sorted().label(sched.sample_free_rank(n, rng.uniform_open())));
    }
    return w;
}

/// Running ln mu_t and ln diam of the cylinder of a word.
struct TiltedNode {
    std::uint64_t n = 0;
    NeumaierSum log_mass;       // sum over free i of s_i ln p_{d_i}
    NeumaierSum log_diam;       // sum over all i of ln p_{d_i}
    NeumaierSum free_log_diam;  // sum over free i of (s_i - t) ln p_{d_i}
    NeumaierSum forced_log_diam;  // sum over forced i of ln p_{d_i}

    /// Appends digit d_{n+1}; throws NotInSupport when it has zero mass.
    void extend(const SublinearSchedule& sched, std::uint64_t digit) {
        const std::uint64_t i = n + 1;
        if (i > sched.horizon()) throw HorizonExceeded("word longer than the profile horizon");
        if (auto b = sched.forced_digit(i)) {
            if (digit != *b)
                throw NotInSupport("position " + std::to_string(i) + " is forced to " + std::to_string(*b) + ", got " +
                                   std::to_string(digit));
        } else if (sched.sorted().rank(digit) > sched.K(i)) {
            throw NotInSupport("digit " + std::to_string(digit) + " at position " + std::to_string(i) +
                               " is outside the free alphabet of size " + std::to_string(sched.K(i)));
        }
        const double lp = sched.model().log_weight(digit);
        if (sched.forced(i)) {
            forced_log_diam.add(lp);
        } else {
            const double s = sched.s(i);
            log_mass.add(s * lp);
            free_log_diam.add((s - sched.t()) * lp);
        }
        log_diam.add(lp);
        n = i;
    }

    double log_ratio(double t) const { return log_mass.value() - t * log_diam.value(); }
};

inline double mu_t_log_mass(const SublinearSchedule& sched, std::span<const std::uint64_t> word) {
    TiltedNode node;
    for (auto d : word) node.extend(sched, d);
    return node.log_mass.value();
}

/// Per-n values of ln mu_t(C_n) - t ln diam(C_n), n = 0..len, split into the
/// free part sum_U (s_i - t) ln p_{d_i} and the forced part -t sum_V ln p_{d_i}.
struct RatioTrace {
    std::vector<double> log_ratio;
    std::vector<double> free_part;
    std::vector<double> forced_part;
};

inline RatioTrace ratio_trace(const SublinearSchedule& sched, std::span<const std::uint64_t> word) {
    RatioTrace out;
    out.log_ratio.reserve(word.size() + 1);
    out.free_part.reserve(word.size() + 1);
    out.forced_part.reserve(word.size() + 1);
    out.log_ratio.push_back(0.0);
    out.free_part.push_back(0.0);
    out.forced_part.push_back(0.0);
    TiltedNode node;
    const double t = sched.t();
    for (auto d : word) {
        node.extend(sched, d);
        out.log_ratio.push_back(node.log_ratio(t));
        out.free_part.push_back(node.free_log_diam.value());
        out.forced_part.push_back(-t * node.forced_log_diam.value());
    }
    return out;
}

/// f(n) <= D_n <= f(n) + K_n at every n of the word.
inline bool sublinear_sandwich_holds(const SublinearSchedule& sched, std::span<const std::uint64_t> word) {
    std::unordered_set<std::uint64_t> seen;
    for (std::uint64_t n = 1; n <= word.size(); ++n) {
        seen.insert(word[n - 1]);
        const std::uint64_t D = seen.size(), fn = sched.f(n);
        if (D < fn || D > fn + sched.K(n)) return false;
    }
    return true;
}

}  // namespace dds
