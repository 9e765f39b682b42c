#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <string_view>

#include "dds/errors.hpp"

namespace dds {

/// Compensated (Neumaier) summation.
class NeumaierSum {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    NeumaierSum& operator+=(double x) noexcept {
        add(x);
        return *this;
    }
    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

using u128 = unsigned __int128;

/// A nonnegative rational num/den with 64-bit parts.
///
/// Rates such as theta enter ceilings like ceil(theta * t); doing that in
/// floating point gives ceil(0.3 * 10) == 4, so every rate that feeds an
/// integer profile is held exactly.
class Fraction {
public:
    constexpr Fraction() = default;
    constexpr Fraction(std::uint64_t num, std::uint64_t den) : num_(num), den_(den) {
        if (den == 0) throw DomainError("Fraction: zero denominator");
        const std::uint64_t g = std::gcd(num, den);
        num_ /= g;
        den_ /= g;
    }

    /// Best rational approximation with denominator <= max_den; throws if
    /// it is not within 1e-12 of x.
    static Fraction from_double(double x, std::uint64_t max_den = 1'000'000'000) {
        if (!std::isfinite(x) || x < 0.0) throw DomainError("Fraction: value must be finite and >= 0");
        // Stern-Brocot style continued fraction expansion.
        std::uint64_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
        double r = x;
        for (int iter = 0; iter < 64; ++iter) {
            const double a_d = std::floor(r);
            if (a_d > 1e18) break;
            const auto a = static_cast<std::uint64_t>(a_d);
            const u128 p2 = u128(a) * p1 + p0;
            const u128 q2 = u128(a) * q1 + q0;
            if (q2 > max_den || p2 > std::numeric_limits<std::uint64_t>::max()) break;
            p0 = p1;
            q0 = q1;
            p1 = static_cast<std::uint64_t>(p2);
            q1 = static_cast<std::uint64_t>(q2);
            const double frac = r - a_d;
            if (std::abs(static_cast<double>(p1) / static_cast<double>(q1) - x) <= 1e-15 * std::max(1.0, x)) break;
            if (frac <= 0.0) break;
            r = 1.0 / frac;
        }
        if (q1 == 0) throw DomainError("Fraction: value too large");
        const double approx = static_cast<double>(p1) / static_cast<double>(q1);
        if (std::abs(approx - x) > 1e-12 * std::max(1.0, x))
            throw DomainError("Fraction: no rational approximation within 1e-12 of " + std::to_string(x));
        return Fraction(p1, q1);
    }

    /// Parses "p/q" or a plain decimal such as "0.3" exactly.
    static Fraction parse(std::string_view s) {
        if (s.empty()) throw DomainError("Fraction: empty string");
        if (const auto slash = s.find('/'); slash != std::string_view::npos) {
            return Fraction(parse_uint(s.substr(0, slash)), parse_uint(s.substr(slash + 1)));
        }
        if (s.find_first_of("eE") != std::string_view::npos) return from_double(std::stod(std::string(s)));
        const auto dot = s.find('.');
        if (dot == std::string_view::npos) return Fraction(parse_uint(s), 1);
        std::string_view int_part = s.substr(0, dot);
        std::string_view frac_part = s.substr(dot + 1);
        if (frac_part.size() > 18) return from_double(std::stod(std::string(s)));
        std::uint64_t den = 1;
        for (std::size_t i = 0; i < frac_part.size(); ++i) den *= 10;
        const std::uint64_t ip = int_part.empty() ? 0 : parse_uint(int_part);
        const std::uint64_t fp = frac_part.empty() ? 0 : parse_uint(frac_part);
        return Fraction(ip * den + fp, den);
    }

    constexpr std::uint64_t num() const noexcept { return num_; }
    constexpr std::uint64_t den() const noexcept { return den_; }
    constexpr double value() const noexcept { return static_cast<double>(num_) / static_cast<double>(den_); }

    /// ceil(value * t), exact.
    constexpr std::uint64_t ceil_mul(std::uint64_t t) const noexcept {
        const u128 prod = u128(num_) * t;
        return static_cast<std::uint64_t>((prod + den_ - 1) / den_);
    }
    /// floor(value * t), exact.
    constexpr std::uint64_t floor_mul(std::uint64_t t) const noexcept {
        return static_cast<std::uint64_t>(u128(num_) * t / den_);
    }
    /// value * t <= k, exact.
    constexpr bool times_le(std::uint64_t t, std::uint64_t k) const noexcept {
        return u128(num_) * t <= u128(den_) * k;
    }

    std::string str() const { return std::to_string(num_) + "/" + std::to_string(den_); }

    friend constexpr bool operator==(const Fraction&, const Fraction&) = default;

private:
    static std::uint64_t parse_uint(std::string_view s) {
        if (s.empty()) throw DomainError("Fraction: empty integer part");
        std::uint64_t v = 0;
        for (char c : s) {
            if (c < '0' || c > '9') throw DomainError("Fraction: invalid character in '" + std::string(s) + "'");
            if (v > (std::numeric_limits<std::uint64_t>::max() - 9) / 10) throw DomainError("Fraction: integer overflow");
            v = v * 10 + static_cast<std::uint64_t>(c - '0');
        }
        return v;
    }

    std::uint64_t num_ = 0;
    std::uint64_t den_ = 1;
};

/// Bracketed root of a strictly monotone function: bisection down to `width`,
/// then a single secant step from the final bracket. Returns whichever of the
/// bracket ends and the secant point has the smallest residual.
template <class F>
double bracketed_root(F&& f, double lo, double hi, double width = 1e-14) {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0)) throw DomainError("bracketed_root: no sign change on bracket");
    while (hi - lo > width) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
    }
    double best = std::abs(flo) <= std::abs(fhi) ? lo : hi;
    double best_res = std::min(std::abs(flo), std::abs(fhi));
    if (fhi != flo) {
        const double sec = lo - flo * (hi - lo) / (fhi - flo);
        if (sec > lo && sec < hi) {
            const double fs = f(sec);
            if (std::abs(fs) < best_res) best = sec;
        }
    }
    return best;
}

}  // namespace dds
