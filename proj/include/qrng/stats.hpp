#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "qrng/bits.hpp"
#include "qrng/log.hpp"

namespace qrng {

struct TestResult {
    std::string test_name;
    double p_value = 0.0;  // NaN when not applicable
    bool passed = false;   // p_value >= alpha; vacuously true when not applicable
    double alpha = 0.01;
    bool applicable = true;
    bool errored = false;
    std::string note;
};

namespace detail {

inline double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Regularized upper incomplete gamma Q(a, x); the chi-squared survival
// function with 2a degrees of freedom evaluated at 2x.
inline double gamma_q(double a, double x) { return boost::math::gamma_q(a, x); }

}  // namespace detail

/// Monobit frequency test: p = erfc(|S_n| / sqrt(2n)) with S_n the +/-1 sum.
inline double frequency_monobit(const BitVector& bits) {
    if (bits.empty()) throw std::invalid_argument("frequency_monobit: empty input");
    if (bits.size() < 100)
        detail::warn("frequency_monobit: fewer than 100 bits, result unreliable");
    const double n = double(bits.size());
    const double s = 2.0 * double(bits.ones()) - n;
    return std::erfc(std::fabs(s) / std::sqrt(2.0 * n));
}

/// Within-block frequency test over full blocks of block_len bits; the
/// trailing partial block is discarded.
inline double block_frequency(const BitVector& bits, std::size_t block_len = 128) {
    if (block_len < 1) throw std::invalid_argument("block_frequency: block length must be >= 1");
    const std::size_t blocks = bits.size() / block_len;
    if (blocks == 0) throw std::invalid_argument("block_frequency: input shorter than one block");
    double chi_sq = 0.0;
    for (std::size_t b = 0; b < blocks; ++b) {
        std::size_t ones = 0;
        for (std::size_t i = 0; i < block_len; ++i)
            ones += bits.get(b * block_len + i);
        const double pi = double(ones) / double(block_len);
        chi_sq += (pi - 0.5) * (pi - 0.5);
    }
    chi_sq *= 4.0 * double(block_len);
    return detail::gamma_q(double(blocks) / 2.0, chi_sq / 2.0);
}

/// Runs test; returns nullopt (not applicable) when the ones proportion
/// fails the |pi - 1/2| < 2/sqrt(n) prerequisite.
inline std::optional<double> runs_test(const BitVector& bits) {
    if (bits.empty()) throw std::invalid_argument("runs_test: empty input");
    const double n = double(bits.size());
    const double pi = double(bits.ones()) / n;
    if (std::fabs(pi - 0.5) >= 2.0 / std::sqrt(n)) return std::nullopt;

    std::size_t runs = 1;
    for (std::size_t i = 0; i + 1 < bits.size(); ++i)
        runs += bits.get(i) != bits.get(i + 1);

    const double expected = 2.0 * n * pi * (1.0 - pi);
    const double denom = 2.0 * std::sqrt(2.0 * n) * pi * (1.0 - pi);
    return std::erfc(std::fabs(double(runs) - expected) / denom);
}

enum class CusumDirection { forward, reverse };

/// Cumulative sums test: z = max_k |S_k| of the +/-1 partial sums, with the
/// sequence reversed in reverse mode; p from the normal-sum series for the
/// maximum excursion of a random walk.
inline double cumulative_sums(const BitVector& bits,
                              CusumDirection dir = CusumDirection::forward) {
    if (bits.empty()) throw std::invalid_argument("cumulative_sums: empty input");
    const std::size_t n = bits.size();
    std::int64_t sum = 0, z = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const bool b = dir == CusumDirection::forward ? bits.get(i) : bits.get(n - 1 - i);
        sum += b ? 1 : -1;
        z = std::max(z, std::int64_t(std::llabs(sum)));
    }

    const double zf = double(z);
    const double nf = double(n);
    const double sqrt_n = std::sqrt(nf);
    auto phi = detail::std_normal_cdf;

    double p = 1.0;
    {
        const auto k0 = std::int64_t(std::floor((-nf / zf + 1.0) / 4.0));
        const auto k1 = std::int64_t(std::floor((nf / zf - 1.0) / 4.0));
        for (auto k = k0; k <= k1; ++k)
            p -= phi((4.0 * double(k) + 1.0) * zf / sqrt_n) -
                 phi((4.0 * double(k) - 1.0) * zf / sqrt_n);
    }
    {
        const auto k0 = std::int64_t(std::floor((-nf / zf - 3.0) / 4.0));
        const auto k1 = std::int64_t(std::floor((nf / zf - 1.0) / 4.0));
        for (auto k = k0; k <= k1; ++k)
            p += phi((4.0 * double(k) + 3.0) * zf / sqrt_n) -
                 phi((4.0 * double(k) + 1.0) * zf / sqrt_n);
    }
    return std::clamp(p, 0.0, 1.0);
}

/// Fisher's method: X^2 = -2 sum(ln p_i) against chi-squared with 2k degrees
/// of freedom.  Zero p-values are floored at 1e-300 with a warning.
inline double fisher_combine(std::span<const double> p_values) {
    if (p_values.empty()) throw std::invalid_argument("fisher_combine: empty sequence");
    double x_sq = 0.0;
    for (double p : p_values) {
        if (!(p >= 0.0 && p <= 1.0))
            throw std::invalid_argument("fisher_combine: p-values must lie in [0, 1]");
        if (p == 0.0) {
            detail::warn("fisher_combine: zero p-value floored at 1e-300");
            p = 1e-300;
        }
        x_sq += std::log(p);
    }
    x_sq *= -2.0;
    return detail::gamma_q(double(p_values.size()), x_sq / 2.0);
}

struct SuiteReport {
    std::vector<TestResult> results;
    double fisher_p = std::numeric_limits<double>::quiet_NaN();

    bool all_passed() const {
        for (const auto& r : results)
            if (!r.passed) return false;
        return true;
    }
};

/// Runs the native core tests (monobit, block frequency, runs, cumulative
/// sums forward/reverse) and combines the applicable p-values with Fisher's
/// method.  Per-test errors become failed results rather than suite aborts;
/// not-applicable and errored results are excluded from the composite.
inline SuiteReport run_core_suite(const BitVector& bits, double alpha = 0.01) {
    if (bits.empty()) throw std::invalid_argument("run_core_suite: empty bitstream");

    SuiteReport report;
    auto add = [&](const char* name, auto&& fn) {
        TestResult r;
        r.test_name = name;
        r.alpha = alpha;
        try {
            const std::optional<double> p = fn();
            if (p) {
                r.p_value = *p;
                r.passed = *p >= alpha;
            } else {
                r.applicable = false;
                r.p_value = std::numeric_limits<double>::quiet_NaN();
                r.passed = true;
                r.note = "not applicable: proportion prerequisite failed";
            }
        } catch (const std::exception& e) {
            r.errored = true;
            r.p_value = std::numeric_limits<double>::quiet_NaN();
            r.passed = false;
            r.note = e.what();
        }
        report.results.push_back(std::move(r));
    };

    add("frequency_monobit", [&] { return std::optional<double>(frequency_monobit(bits)); });
    add("block_frequency", [&] { return std::optional<double>(block_frequency(bits)); });
    add("runs", [&] { return runs_test(bits); });
    add("cumulative_sums_forward",
        [&] { return std::optional<double>(cumulative_sums(bits, CusumDirection::forward)); });
    add("cumulative_sums_reverse",
        [&] { return std::optional<double>(cumulative_sums(bits, CusumDirection::reverse)); });

    std::vector<double> ps;
    for (const auto& r : report.results)
        if (r.applicable && !r.errored) ps.push_back(r.p_value);
    if (!ps.empty()) report.fisher_p = fisher_combine(ps);
    return report;
}

}  // namespace qrng
