#pragma once

// Affine full-branch coding of [0,1): branch intervals I_k of length p_k,
// the expanding map T, digit encoding, cylinder intervals, and the Luroth
// series.
//
// Canonical layout: I_k = [sum_{j<k} p_j, sum_{j<=k} p_j), left to right.
// Classical layout: J_k = (sum_{j>k} p_j, sum_{j>=k} p_j], right to left; for
// Luroth weights this is (1/(k+1), 1/k] with T(x) = k(k+1)x - k.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "dds/errors.hpp"
#include "dds/numeric.hpp"
#include "dds/weights.hpp"

namespace dds {

enum class Layout { canonical, classical };

using DigitWord = std::vector<std::uint64_t>;

struct CodecOptions {
    Layout layout = Layout::canonical;
    bool exact = true;
    std::size_t max_exact_depth = 1000;
};

/// A cylinder set: all points whose first |word| digits equal word.
/// Canonical cylinders are [left, left + diam); classical ones are (left, left + diam].
struct Cylinder {
    DigitWord word;
    double log_diam = 0.0;
    long double left = 0.0L;
    std::optional<Rational> left_exact;
    std::optional<Rational> diam_exact;
    Layout layout = Layout::canonical;

    bool exact_mode() const noexcept { return left_exact.has_value(); }
    long double diam() const { return std::exp(static_cast<long double>(log_diam)); }
    std::optional<Rational> right_exact() const {
        if (!left_exact) return std::nullopt;
        return *left_exact + *diam_exact;
    }

    /// Exact membership; requires exact mode.
    bool contains(const Rational& x) const {
        if (!left_exact) throw PrecisionError("Cylinder::contains needs exact endpoints");
        const Rational right = *left_exact + *diam_exact;
        if (layout == Layout::canonical) return *left_exact <= x && x < right;
        return *left_exact < x && x <= right;
    }
};

namespace detail {

inline Rational exact_branch_left(const WeightModel& m, std::uint64_t k, Layout layout) {
    if (layout == Layout::canonical) return m.exact_cdf_before(k);
    return Rational(1) - m.exact_cdf_before(k + 1);
}

inline long double approx_branch_left(const WeightModel& m, std::uint64_t k, Layout layout) {
    if (m.kind() == ModelKind::luroth) {
        const long double kd = static_cast<long double>(k);
        return layout == Layout::canonical ? 1.0L - 1.0L / kd : 1.0L / (kd + 1.0L);
    }
    if (layout == Layout::canonical) return static_cast<long double>(m.cdf_before(k));
    return static_cast<long double>(tail_sum(m, k + 1));
}

inline void check_digit(std::uint64_t d) {
    if (d == 0) throw DomainError("digits must be >= 1");
}

inline std::uint64_t floor_rational(const Rational& r) {
    using boost::multiprecision::cpp_int;
    const cpp_int q = numerator(r) / denominator(r);
    return q.convert_to<std::uint64_t>();
}

}  // namespace detail

/// Cylinder of `word`: left endpoint is phi_{d_1} o ... o phi_{d_n}(0) with
/// phi_k(u) = inf I_k + p_k u; diameter is the product of the p_{d_i}.
inline Cylinder cylinder(const WeightModel& model, std::span<const std::uint64_t> word, const CodecOptions& opt = {}) {
    Cylinder c;
    c.word.assign(word.begin(), word.end());
    c.layout = opt.layout;
    for (auto d : word) detail::check_digit(d);

    NeumaierSum log_diam;
    long double left = 0.0L;
    long double scale = 1.0L;
    for (auto d : word) {
        left += scale * detail::approx_branch_left(model, d, opt.layout);
        scale *= static_cast<long double>(model.weight(d));
        log_diam.add(model.log_weight(d));
    }
    c.log_diam = log_diam.value();
    c.left = left;

    if (opt.exact && model.has_exact_partition()) {
        if (word.size() > opt.max_exact_depth)
            throw PrecisionError("word length " + std::to_string(word.size()) + " exceeds exact depth " +
                                 std::to_string(opt.max_exact_depth) + "; use log-space mode (exact = false)");
        Rational lx = 0, sc = 1;
        for (auto d : word) {
            lx += sc * detail::exact_branch_left(model, d, opt.layout);
            sc *= model.exact_weight(d);
        }
        c.left_exact = lx;
        c.diam_exact = sc;
    }
    return c;
}

/// Branch index k with x in I_k (canonical) or J_k (classical).
inline std::uint64_t branch(const WeightModel& model, const Rational& x, Layout layout = Layout::canonical) {
    if (layout == Layout::canonical) {
        if (x < 0 || x >= 1) throw DomainError("x must lie in [0, 1)");
    } else {
        if (x <= 0 || x > 1) throw DomainError("x must lie in (0, 1] for the classical layout");
    }
    if (model.kind() == ModelKind::luroth) {
        // canonical: 1/(1-x) in [k, k+1); classical: 1/x in [k, k+1)
        const Rational inv = layout == Layout::canonical ? Rational(1) / (Rational(1) - x) : Rational(1) / x;
        return detail::floor_rational(inv);
    }
    if (model.kind() == ModelKind::finite) {
        const auto P = *model.support_size();
        Rational acc = 0;
        const Rational target = layout == Layout::canonical ? x : Rational(1) - x;
        for (std::uint64_t k = 1; k <= P; ++k) {
            acc += model.exact_weight(k);
            if (target < acc) return k;
        }
        return P;
    }
    throw PrecisionError("exact coding needs rational weights; use the floating-point overloads");
}

/// One step of T: (x - inf I_k) / p_k.
inline Rational apply_T(const WeightModel& model, const Rational& x, Layout layout = Layout::canonical) {
    const auto k = branch(model, x, layout);
    return (x - detail::exact_branch_left(model, k, layout)) / model.exact_weight(k);
}

/// First n digits of x.
inline DigitWord encode(const WeightModel& model, Rational x, std::size_t n, Layout layout = Layout::canonical) {
    DigitWord out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto k = branch(model, x, layout);
        out.push_back(k);
        x = (x - detail::exact_branch_left(model, k, layout)) / model.exact_weight(k);
    }
    return out;
}

/// Floating-point branch, for models without rational weights.
inline std::uint64_t branch_approx(const WeightModel& model, long double x, Layout layout = Layout::canonical) {
    if (layout == Layout::canonical) {
        if (!(x >= 0.0L && x < 1.0L)) throw DomainError("x must lie in [0, 1)");
        if (x == 0.0L) return 1;
        return model.sample(static_cast<double>(x));
    }
    if (!(x > 0.0L && x <= 1.0L)) throw DomainError("x must lie in (0, 1] for the classical layout");
    // x in (tail(k+1), tail(k)]  <=>  1 - x in [cdf_before(k), cdf_before(k+1))
    const long double y = 1.0L - x;
    if (y == 0.0L) return 1;
    return model.sample(static_cast<double>(y));
}

inline long double apply_T_approx(const WeightModel& model, long double x, Layout layout = Layout::canonical) {
    const auto k = branch_approx(model, x, layout);
    const long double t = (x - detail::approx_branch_left(model, k, layout)) / static_cast<long double>(model.weight(k));
    if (layout == Layout::canonical) return std::clamp(t, 0.0L, std::nextafter(1.0L, 0.0L));
    return std::clamp(t, std::numeric_limits<long double>::denorm_min(), 1.0L);
}

inline DigitWord encode_approx(const WeightModel& model, long double x, std::size_t n, Layout layout = Layout::canonical) {
    DigitWord out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(branch_approx(model, x, layout));
        x = apply_T_approx(model, x, layout);
    }
    return out;
}

/// Partial sum of the Luroth series sum_n 1/(d_n prod_{j<n} d_j (d_j - 1))
/// over the first `terms` classical digits (d_i >= 2).
///
/// The partial sum is the left endpoint of the classical cylinder of those
/// digits, which is open on the left: the full expansion lies strictly above it.
inline Rational luroth_series_eval(std::span<const std::uint64_t> classical_digits, std::size_t terms) {
    if (terms == 0) throw DomainError("luroth_series_eval: terms must be >= 1");
    if (terms > classical_digits.size()) throw DomainError("luroth_series_eval: more terms than digits");
    for (auto d : classical_digits)
        if (d < 2) throw DomainError("luroth_series_eval: classical Luroth digits are >= 2");
    using boost::multiprecision::cpp_int;
    Rational sum = 0;
    cpp_int prod = 1;
    for (std::size_t i = 0; i < terms; ++i) {
        const cpp_int d = classical_digits[i];
        sum += Rational(cpp_int(1), d * prod);
        prod *= d * (d - 1);
    }
    return sum;
}

}  // namespace dds
