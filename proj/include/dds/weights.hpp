#pragma once

// Digit-weight models (p_k) with regularly varying tails, and the scalar
// quantities built from them: tail sums, tilted sums, the exponents s_K that
// renormalize a truncated alphabet, empirical Potter constants, and
// inverse-CDF digit sampling.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/differentiation/autodiff.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include "dds/errors.hpp"
#include "dds/numeric.hpp"

namespace dds {

using Rational = boost::multiprecision::cpp_rational;

enum class ModelKind { luroth, power, power_log, explicit_prefix, finite };

inline std::string to_string(ModelKind k) {
    switch (k) {
        case ModelKind::luroth: return "luroth";
        case ModelKind::power: return "power";
        case ModelKind::power_log: return "power-log";
        case ModelKind::explicit_prefix: return "explicit-prefix";
        case ModelKind::finite: return "finite";
    }
    return "unknown";
}

namespace detail {

/// Index at which direct summation hands over to Euler-Maclaurin.
inline constexpr std::uint64_t kEulerMaclaurinStart = 1024;

/// Unnormalized smooth tail shape; p_k = coef * shape(k) on the smooth range.
struct TailShape {
    enum class Form { luroth, power, power_log } form = Form::power;
    double rho = 2.0;
    double gamma = 0.0;

    template <class T>
    T eval(const T& x) const {
        using std::log;
        using std::pow;
        switch (form) {
            case Form::luroth: return 1.0 / (x * (x + 1.0));
            case Form::power: return pow(x, -rho);
            case Form::power_log: return pow(x, -rho) * pow(log(x + 1.0), gamma);
        }
        return x;
    }

    double log_eval(double x) const {
        switch (form) {
            case Form::luroth: return -(std::log(x) + std::log1p(x));
            case Form::power: return -rho * std::log(x);
            case Form::power_log: return -rho * std::log(x) + gamma * std::log(std::log1p(x));
        }
        return 0.0;
    }

    /// Integral of shape(x)^s over [K, inf).
    double integral_pow(double K, double s) const {
        switch (form) {
            case Form::power: {
                const double a = rho * s;
                return std::pow(K, 1.0 - a) / (a - 1.0);
            }
            case Form::luroth: {
                // (x(x+1))^{-s} = sum_j binom(-s, j) x^{-2s-j}, integrated termwise.
                NeumaierSum acc;
                double coeff = 1.0;
                for (int j = 0; j < 200; ++j) {
                    const double term = coeff * std::pow(K, 1.0 - 2.0 * s - j) / (2.0 * s + j - 1.0);
                    acc.add(term);
                    if (std::abs(term) < 1e-19 * std::abs(acc.value())) break;
                    coeff *= (-s - j) / (j + 1.0);
                }
                return acc.value();
            }
            case Form::power_log: {
                boost::math::quadrature::exp_sinh<double> integrator;
                auto f = [this, s](double x) { return std::exp(s * log_eval(x)); };
                return integrator.integrate(f, K, std::numeric_limits<double>::infinity(), 1e-14);
            }
        }
        return 0.0;
    }
};

/// sum_{k >= M} shape(k)^s for M >= 1; requires rho * s > 1.
inline double shape_power_sum(const TailShape& shape, std::uint64_t M, double s) {
    const std::uint64_t K = std::max<std::uint64_t>(M, kEulerMaclaurinStart);
    NeumaierSum acc;
    for (std::uint64_t k = M; k < K; ++k) acc.add(std::exp(s * shape.log_eval(static_cast<double>(k))));

    using namespace boost::math::differentiation;
    const double Kd = static_cast<double>(K);
    const auto x = make_fvar<double, 5>(Kd);
    const auto g = pow(shape.eval(x), s);
    double rem = shape.integral_pow(Kd, s);
    rem += 0.5 * g.derivative(0);
    rem -= g.derivative(1) / 12.0;
    rem += g.derivative(3) / 720.0;
    rem -= g.derivative(5) / 30240.0;
    acc.add(rem);
    return acc.value();
}

/// Inverse-CDF sampler over k = 1, 2, ...: a cumulative table for the head
/// and bracketed search on a tail-mass function beyond it.
class DiscreteSampler {
public:
    using TailFn = std::function<double(std::uint64_t)>;
    using WeightFn = std::function<double(std::uint64_t)>;

    /// `tail(M)` is the mass at indices >= M beyond the head and `weight(k)`
    /// the mass at k; both are only consulted past the head.
    DiscreteSampler(const std::vector<double>& head, TailFn tail, WeightFn weight, double total)
        : tail_(std::move(tail)), weight_(std::move(weight)), total_(total) {
        if (head.empty()) throw DomainError("DiscreteSampler: empty head");
        cum_.resize(head.size());
        NeumaierSum acc;
        for (std::size_t i = 0; i < head.size(); ++i) {
            acc.add(head[i]);
            cum_[i] = acc.value();
        }
        const std::size_t G = head.size();
        guide_.resize(G);
        std::size_t idx = 0;
        for (std::size_t g = 0; g < G; ++g) {
            const double level = total_ * static_cast<double>(g) / static_cast<double>(G);
            while (idx + 1 < cum_.size() && cum_[idx] <= level) ++idx;
            guide_[g] = idx;
        }
    }

    std::uint64_t table_size() const noexcept { return cum_.size(); }
    double total() const noexcept { return total_; }

    std::uint64_t sample(double u) const {
        const double target = u * total_;
        if (target < cum_.back() || !tail_) {
            auto g = static_cast<std::size_t>(u * static_cast<double>(guide_.size()));
            if (g >= guide_.size()) g = guide_.size() - 1;
            std::size_t idx = guide_[g];
            while (idx > 0 && cum_[idx - 1] > target) --idx;
            while (idx + 1 < cum_.size() && cum_[idx] <= target) ++idx;
            return idx + 1;
        }
        // Tail: the k > T with W(k) >= r > W(k + 1), r = (1 - u) * total.
        // A precomputed grid of exact tail values gives the bracket and a first
        // guess; Newton steps in log-log coordinates (dW/dk = -p_k) refine it,
        // and neighbour probes or log-bisection close the bracket.
        const double r = (1.0 - u) * total_;
        build_grid();
        if (r > grid_w_.front()) return cum_.size() + 1;
        if (r <= grid_w_.back()) throw std::overflow_error("DiscreteSampler: digit exceeds 2^62");
        // grid_w_ is decreasing: find i with grid_w_[i] >= r > grid_w_[i + 1]
        const auto it = std::upper_bound(grid_w_.begin(), grid_w_.end(), r, std::greater<>());
        const std::size_t i = static_cast<std::size_t>(it - grid_w_.begin()) - 1;
        std::uint64_t lo = grid_k_[i];
        double wlo = grid_w_[i];
        std::uint64_t hi = grid_k_[i + 1];
        const double lr = std::log(r);
        auto update = [&](std::uint64_t x) {
            const double w = tail_(x);
            if (w >= r) {
                lo = x;
                wlo = w;
            } else {
                hi = x;
            }
            return w;
        };
        std::uint64_t x = lo;
        double wx = wlo;
        if (hi - lo > 1) {
            // log-log interpolation between the grid points as the first guess
            const double a = std::log(static_cast<double>(lo)), b = std::log(static_cast<double>(hi));
            const double wa = std::log(grid_w_[i]), wb = std::log(grid_w_[i + 1]);
            const double xd = std::exp(a + (lr - wa) * (b - a) / (wb - wa));
            x = std::clamp(static_cast<std::uint64_t>(xd), lo + 1, hi - 1);
            wx = update(x);
        }
        for (int iter = 0; iter < 30 && hi - lo > 2; ++iter) {
            const double xd0 = static_cast<double>(x);
            const double slope = xd0 * weight_(x) / wx;
            const double xd = std::exp(std::log(xd0) + (std::log(wx) - lr) / slope);
            std::uint64_t nx = xd >= static_cast<double>(hi) ? hi - 1 : static_cast<std::uint64_t>(std::max(xd, 0.0));
            nx = std::clamp(nx, lo + 1, hi - 1);
            const bool close = nx + 1 >= x && nx <= x + 1;
            wx = update(nx);
            x = nx;
            if (close) break;
        }
        if (hi - lo > 1) update(lo + 1);
        if (hi - lo > 1) update(hi - 1);
        while (hi - lo > 1) {
            const double ratio = static_cast<double>(hi) / static_cast<double>(lo);
            std::uint64_t mid = ratio > 2.0 ? static_cast<std::uint64_t>(std::sqrt(static_cast<double>(lo)) *
                                                                         std::sqrt(static_cast<double>(hi)))
                                            : lo + (hi - lo) / 2;
            mid = std::clamp(mid, lo + 1, hi - 1);
            update(mid);
        }
        return lo;
    }

private:
    static constexpr std::uint64_t kMaxDigit = std::uint64_t{1} << 62;

    // Geometric grid of exact tail values past the head, built on first use.
    void build_grid() const {
        std::call_once(grid_once_, [this] {
            const double T = static_cast<double>(cum_.size() + 1);
            for (int j = 0;; ++j) {
                const double kd = T * std::exp2(j / 16.0);
                const auto k = kd >= static_cast<double>(kMaxDigit) ? kMaxDigit : static_cast<std::uint64_t>(kd);
                if (grid_k_.empty() || k > grid_k_.back()) {
                    grid_k_.push_back(k);
                    grid_w_.push_back(tail_(k));
                }
                if (k == kMaxDigit) break;
            }
        });
    }

    mutable std::once_flag grid_once_;
    mutable std::vector<std::uint64_t> grid_k_;
    mutable std::vector<double> grid_w_;

    std::vector<double> cum_;
    std::vector<std::size_t> guide_;
    TailFn tail_;
    WeightFn weight_;
    double total_;
};

inline constexpr std::size_t kSamplerTable = std::size_t{1} << 16;

}  // namespace detail

/// A probability sequence (p_k)_{k>=1} with declared tail index rho.
///
/// Immutable after construction; copies share the sampling table.
/// Digits are indexed from 1. For luroth, p_k = 1/(k(k+1)), and the classical
/// Luroth digit is d = k + 1.
class WeightModel {
public:
    static WeightModel luroth() {
        WeightModel m;
        m.kind_ = ModelKind::luroth;
        m.rho_ = 2.0;
        m.shape_ = {detail::TailShape::Form::luroth, 2.0, 0.0};
        m.coef_ = 1.0;
        m.log_coef_ = 0.0;
        return m;
    }

    static WeightModel power(double rho) {
        if (!(rho > 1.0) || !std::isfinite(rho)) throw DomainError("power model needs rho > 1");
        WeightModel m;
        m.kind_ = ModelKind::power;
        m.rho_ = rho;
        m.shape_ = {detail::TailShape::Form::power, rho, 0.0};
        m.coef_ = 1.0 / detail::shape_power_sum(m.shape_, 1, 1.0);
        m.log_coef_ = std::log(m.coef_);
        m.build_sampler();
        return m;
    }

    static WeightModel power_log(double rho, double gamma) {
        if (!(rho > 1.0) || !std::isfinite(rho)) throw DomainError("power-log model needs rho > 1");
        if (!std::isfinite(gamma)) throw DomainError("power-log model needs a finite gamma");
        WeightModel m;
        m.kind_ = ModelKind::power_log;
        m.rho_ = rho;
        m.gamma_ = gamma;
        m.shape_ = {detail::TailShape::Form::power_log, rho, gamma};
        m.coef_ = 1.0 / detail::shape_power_sum(m.shape_, 1, 1.0);
        m.log_coef_ = std::log(m.coef_);
        m.build_sampler();
        return m;
    }

    /// Given p_1..p_P followed by c * k^{-rho}, with c fixed by normalization.
    static WeightModel explicit_prefix(std::vector<double> prefix, double rho) {
        if (!(rho > 1.0) || !std::isfinite(rho)) throw DomainError("explicit-prefix model needs rho > 1");
        NeumaierSum head;
        for (double p : prefix) {
            if (!(p > 0.0) || !std::isfinite(p)) throw DomainError("explicit-prefix: prefix weights must be > 0");
            head.add(p);
        }
        if (!(head.value() < 1.0)) throw DomainError("explicit-prefix: prefix mass must be < 1");
        WeightModel m;
        m.kind_ = ModelKind::explicit_prefix;
        m.rho_ = rho;
        m.prefix_ = std::move(prefix);
        m.shape_ = {detail::TailShape::Form::power, rho, 0.0};
        const auto P = static_cast<std::uint64_t>(m.prefix_.size());
        m.coef_ = (1.0 - head.value()) / detail::shape_power_sum(m.shape_, P + 1, 1.0);
        m.log_coef_ = std::log(m.coef_);
        m.build_sampler();
        return m;
    }

    /// Finite support {1..P} with exact rational weights summing to 1.
    static WeightModel finite(std::vector<Rational> weights) {
        if (weights.empty()) throw DomainError("finite model needs at least one weight");
        Rational total = 0;
        for (const auto& w : weights) {
            if (w <= 0) throw DomainError("finite model weights must be > 0");
            total += w;
        }
        if (total != 1) throw DomainError("finite model weights must sum to exactly 1");
        WeightModel m;
        m.kind_ = ModelKind::finite;
        m.rho_ = std::numeric_limits<double>::infinity();
        m.exact_weights_ = std::make_shared<std::vector<Rational>>(std::move(weights));
        for (const auto& w : *m.exact_weights_) m.prefix_.push_back(static_cast<double>(w));
        m.build_sampler();
        return m;
    }

    static WeightModel finite(const std::vector<double>& weights) {
        std::vector<Rational> exact;
        exact.reserve(weights.size());
        for (double w : weights) exact.emplace_back(w);
        return finite(std::move(exact));
    }

    ModelKind kind() const noexcept { return kind_; }
    double rho() const noexcept { return rho_; }
    double gamma() const noexcept { return gamma_; }
    const std::vector<double>& prefix() const noexcept { return prefix_; }
    bool infinite() const noexcept { return kind_ != ModelKind::finite; }
    std::optional<std::uint64_t> support_size() const {
        if (infinite()) return std::nullopt;
        return prefix_.size();
    }

    std::optional<std::uint64_t> digit_count_hint() const noexcept { return hint_; }
    WeightModel with_digit_count_hint(std::uint64_t h) const {
        if (h == 0) throw DomainError("digit_count_hint must be positive");
        WeightModel m = *this;
        m.hint_ = h;
        return m;
    }

    double weight(std::uint64_t k) const {
        check_index(k);
        if (kind_ == ModelKind::luroth) {
            const double kd = static_cast<double>(k);
            return 1.0 / (kd * (kd + 1.0));
        }
        if (k <= prefix_.size()) return prefix_[k - 1];
        if (kind_ == ModelKind::finite) return 0.0;
        return std::exp(log_weight(k));
    }

    double log_weight(std::uint64_t k) const {
        check_index(k);
        if (k <= prefix_.size()) return std::log(prefix_[k - 1]);
        if (kind_ == ModelKind::finite) return -std::numeric_limits<double>::infinity();
        return log_coef_ + shape_.log_eval(static_cast<double>(k));
    }

    /// The slowly varying factor L with p_k ~ k^{-rho} L(k).
    double slowly_varying(std::uint64_t k) const {
        check_index(k);
        const double kd = static_cast<double>(k);
        switch (kind_) {
            case ModelKind::luroth: return kd / (kd + 1.0);
            case ModelKind::power:
            case ModelKind::explicit_prefix: return coef_;
            case ModelKind::power_log: return coef_ * std::pow(std::log1p(kd), gamma_);
            case ModelKind::finite: break;
        }
        throw DomainError("finite model has no tail index");
    }

    /// C with p_k k^rho -> C, when L has a finite limit.
    std::optional<double> tail_constant() const {
        switch (kind_) {
            case ModelKind::luroth: return 1.0;
            case ModelKind::power:
            case ModelKind::explicit_prefix: return coef_;
            default: return std::nullopt;
        }
    }

    bool has_exact_partition() const noexcept {
        return kind_ == ModelKind::luroth || kind_ == ModelKind::finite;
    }

    Rational exact_weight(std::uint64_t k) const {
        check_index(k);
        if (kind_ == ModelKind::luroth) return Rational(1, boost::multiprecision::cpp_int(k) * (k + 1));
        if (kind_ == ModelKind::finite) return k <= prefix_.size() ? (*exact_weights_)[k - 1] : Rational(0);
        throw PrecisionError("model has no exact rational weights; use the floating-point path");
    }

    /// sum_{j<k} p_j, exact.
    Rational exact_cdf_before(std::uint64_t k) const {
        check_index(k);
        if (kind_ == ModelKind::luroth) return Rational(boost::multiprecision::cpp_int(k - 1), boost::multiprecision::cpp_int(k));
        if (kind_ == ModelKind::finite) {
            Rational acc = 0;
            const auto n = std::min<std::uint64_t>(k - 1, prefix_.size());
            for (std::uint64_t j = 0; j < n; ++j) acc += (*exact_weights_)[j];
            return acc;
        }
        throw PrecisionError("model has no exact rational weights; use the floating-point path");
    }

    /// sum_{j<k} p_j in floating point.
    double cdf_before(std::uint64_t k) const {
        check_index(k);
        if (kind_ == ModelKind::luroth) return 1.0 - 1.0 / static_cast<double>(k);
        return 1.0 - power_tail(k, 1.0);
    }

    /// sum_{k>=M} p_k^s without domain checks beyond divergence.
    double power_tail(std::uint64_t M, double s) const {
        if (M == 0) throw DomainError("tail index M must be >= 1");
        if (kind_ == ModelKind::luroth && s == 1.0) return 1.0 / static_cast<double>(M);
        NeumaierSum acc;
        const auto P = static_cast<std::uint64_t>(prefix_.size());
        for (std::uint64_t k = M; k <= P; ++k) acc.add(std::pow(prefix_[k - 1], s));
        if (kind_ == ModelKind::finite) return acc.value();
        if (!(rho_ * s > 1.0)) throw DivergenceError("sum of p_k^s diverges for rho * s <= 1");
        const std::uint64_t start = std::max(M, P + 1);
        acc.add(std::pow(coef_, s) * detail::shape_power_sum(shape_, start, s));
        return acc.value();
    }

    /// Inverse CDF: k with sum_{j<k} p_j <= u < sum_{j<=k} p_j.
    std::uint64_t sample(double u) const {
        if (kind_ == ModelKind::luroth) return luroth_inverse_cdf(u);
        return sampler_->sample(u);
    }

    std::string name() const {
        switch (kind_) {
            case ModelKind::luroth: return "luroth";
            case ModelKind::power: return "power(rho=" + std::to_string(rho_) + ")";
            case ModelKind::power_log:
                return "power-log(rho=" + std::to_string(rho_) + ",gamma=" + std::to_string(gamma_) + ")";
            case ModelKind::explicit_prefix:
                return "explicit-prefix(P=" + std::to_string(prefix_.size()) + ",rho=" + std::to_string(rho_) + ")";
            case ModelKind::finite: return "finite(P=" + std::to_string(prefix_.size()) + ")";
        }
        return "unknown";
    }

private:
    WeightModel() = default;

    void check_index(std::uint64_t k) const {
        if (k == 0) throw DomainError("digits are indexed from 1");
    }

    // k = floor(1/(1-u)), corrected so that 1/(k+1) < 1-u <= 1/k holds exactly.
    static std::uint64_t luroth_inverse_cdf(double u) {
        const double v = 1.0 - u;  // exact for u >= 1/2
        if (u < 0.5) return 1;
        auto k = static_cast<std::uint64_t>(std::floor(1.0 / v));
        if (k == 0) k = 1;
        // fma gives the exact sign of v*k - 1.
        while (k > 1 && std::fma(v, static_cast<double>(k), -1.0) > 0.0) --k;
        while (std::fma(v, static_cast<double>(k + 1), -1.0) <= 0.0) ++k;
        return k;
    }

    void build_sampler() {
        if (kind_ == ModelKind::finite) {
            sampler_ = std::make_shared<detail::DiscreteSampler>(prefix_, nullptr, nullptr, 1.0);
            return;
        }
        const std::size_t T = std::max(detail::kSamplerTable, prefix_.size());
        std::vector<double> head(T);
        for (std::size_t i = 0; i < T; ++i) head[i] = weight(i + 1);
        WeightModel self = *this;
        auto tail = [self](std::uint64_t M) { return self.power_tail(M, 1.0); };
        auto w = [self](std::uint64_t k) { return self.weight(k); };
        sampler_ = std::make_shared<detail::DiscreteSampler>(head, tail, w, 1.0);
    }

    ModelKind kind_ = ModelKind::luroth;
    double rho_ = 2.0;
    double gamma_ = 0.0;
    std::vector<double> prefix_;
    detail::TailShape shape_;
    double coef_ = 1.0;
    double log_coef_ = 0.0;
    std::optional<std::uint64_t> hint_;
    std::shared_ptr<const std::vector<Rational>> exact_weights_;
    std::shared_ptr<const detail::DiscreteSampler> sampler_;
};

/// p_k.
inline double weight(const WeightModel& model, std::uint64_t k) { return model.weight(k); }
inline double log_weight(const WeightModel& model, std::uint64_t k) { return model.log_weight(k); }

/// sum_{k >= M} p_k.
inline double tail_sum(const WeightModel& model, std::uint64_t M) {
    if (M == 0) throw DomainError("tail_sum: M must be >= 1");
    return model.power_tail(M, 1.0);
}

/// sum_{k >= M} p_k^s; throws DivergenceError when rho * s <= 1.
inline double tilted_tail_sum(const WeightModel& model, std::uint64_t M, double s) {
    if (M == 0) throw DomainError("tilted_tail_sum: M must be >= 1");
    if (!(s > 0.0) || !std::isfinite(s)) throw DomainError("tilted_tail_sum: s must be positive");
    if (model.infinite() && !(model.rho() * s > 1.0))
        throw DivergenceError("tilted_tail_sum: rho * s <= 1, the series diverges");
    return model.power_tail(M, s);
}

/// The unique s in [0, 1] with sum_k exp(s * log_weights[k]) = 1.
/// Weights must be positive with total mass <= 1.
inline double solve_tilt_exponent(std::span<const double> log_weights) {
    if (log_weights.empty()) throw DomainError("solve_tilt_exponent: empty alphabet");
    if (log_weights.size() == 1) return 0.0;
    auto residual = [&](double s) {
        NeumaierSum acc;
        for (double l : log_weights) acc.add(std::exp(s * l));
        return acc.value() - 1.0;
    };
    if (residual(1.0) >= 0.0) return 1.0;
    return bracketed_root(residual, 0.0, 1.0, 1e-14);
}

/// s_K: root of sum_{k<=K} p_k^s = 1; s_1 = 0.
inline double solve_s_K(const WeightModel& model, std::uint64_t K) {
    if (K == 0) throw DomainError("solve_s_K: K must be >= 1");
    if (K == 1) return 0.0;
    if (auto P = model.support_size(); P && K > *P) throw DomainError("solve_s_K: K exceeds the model support");
    std::vector<double> logs(K);
    for (std::uint64_t k = 1; k <= K; ++k) logs[k - 1] = model.log_weight(k);
    return solve_tilt_exponent(logs);
}

/// |sum_{k<=K} p_k^s - 1|.
inline double s_K_residual(const WeightModel& model, std::uint64_t K, double s) {
    NeumaierSum acc;
    for (std::uint64_t k = 1; k <= K; ++k) acc.add(std::exp(s * model.log_weight(k)));
    return std::abs(acc.value() - 1.0);
}

/// Empirical Potter constants. Valid on [k_eps, scan_limit] only; the true
/// constants are not effective, so `horizon_limited` is always set.
struct PotterReport {
    double epsilon = 0.0;
    std::uint64_t k_eps = 1;
    double C_eps = 1.0;
    std::uint64_t scan_limit = 0;
    bool horizon_limited = true;
};

/// Smallest k_eps such that p_k >= k^{-rho} L(k) / 2 for all scanned
/// k in [k_eps, scan_limit], and the smallest C_eps >= 1 (1e-3 grid, rounded up)
/// with p_m / p_k >= 1 / (2^{rho+eps} C_eps) for k_eps <= k <= m < 2k.
inline PotterReport potter_scan(const WeightModel& model, double epsilon, std::uint64_t scan_limit) {
    if (!model.infinite()) throw DomainError("potter_scan: finite model has no tail index");
    if (!(epsilon > 0.0)) throw DomainError("potter_scan: epsilon must be > 0");
    if (scan_limit < 4) throw DomainError("potter_scan: scan_limit must be >= 4");
    const double rho = model.rho();

    std::vector<double> logp(2 * scan_limit + 1);
    for (std::uint64_t k = 1; k <= 2 * scan_limit; ++k) logp[k] = model.log_weight(k);

    std::uint64_t k_eps = 1;
    for (std::uint64_t k = 1; k <= scan_limit; ++k) {
        const double lower = -rho * std::log(static_cast<double>(k)) + std::log(model.slowly_varying(k)) - std::log(2.0);
        if (logp[k] < lower) k_eps = k + 1;
    }
    if (k_eps > scan_limit)
        throw HorizonExceeded("potter_scan: p_k >= k^-rho L(k)/2 still fails at scan_limit " + std::to_string(scan_limit));

    // Sliding minimum of log p over the window [k, 2k-1].
    std::deque<std::uint64_t> window;
    std::uint64_t pushed = k_eps - 1;
    double worst = 0.0;  // max over k of log p_k - min log p_m
    for (std::uint64_t k = k_eps; k <= scan_limit; ++k) {
        while (pushed < 2 * k - 1) {
            ++pushed;
            while (!window.empty() && logp[window.back()] >= logp[pushed]) window.pop_back();
            window.push_back(pushed);
        }
        while (window.front() < k) window.pop_front();
        worst = std::max(worst, logp[k] - logp[window.front()]);
    }
    const double needed = std::exp(worst - (rho + epsilon) * std::log(2.0));
    double C = std::max(1.0, needed);
    double grid = std::ceil(C * 1000.0) / 1000.0;
    if (grid < C) grid += 1e-3;

    PotterReport report;
    report.epsilon = epsilon;
    report.k_eps = k_eps;
    report.C_eps = grid;
    report.scan_limit = scan_limit;
    return report;
}

/// Inverse-CDF digit draw for u in (0, 1).
inline std::uint64_t sample_digit(const WeightModel& model, double u) {
    if (!(u > 0.0 && u < 1.0)) throw DomainError("sample_digit: u must lie in (0, 1)");
    return model.sample(u);
}

}  // namespace dds
