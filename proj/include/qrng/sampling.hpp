#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "qrng/optics.hpp"

namespace qrng {

struct NoiseSpec {
    double mu = 0.0;          // mean voltage, V
    double sigma_q_sq = 0.0;  // quantum variance, V^2
    double sigma_c_sq = 0.0;  // classical variance, V^2

    void validate() const {
        if (!(sigma_q_sq >= 0.0) || !(sigma_c_sq >= 0.0))
            throw std::invalid_argument("NoiseSpec: variances must be >= 0");
    }
};

struct ToneSpec {
    double amplitude = 0.0;  // V
    double frequency = 0.0;  // Hz
    double phase = 0.0;      // rad

    void validate() const {
        if (!(amplitude >= 0.0)) throw std::invalid_argument("ToneSpec: amplitude must be >= 0");
        if (!(frequency >= 0.0)) throw std::invalid_argument("ToneSpec: frequency must be >= 0");
    }
};

struct TraceConfig {
    std::size_t num_samples = 0;
    double sample_rate = 1e6;     // Hz
    std::uint64_t rng_seed = 0;

    void validate() const {
        if (num_samples < 1) throw std::invalid_argument("TraceConfig: num_samples must be >= 1");
        if (!(sample_rate > 0.0))
            throw std::invalid_argument("TraceConfig: sample_rate must be > 0");
    }
};

struct QuadratureBatch {
    std::vector<double> x;  // V
    std::vector<double> p;  // V
    TraceConfig config;
};

namespace detail {

/// Uniform double in [0, 1) with 53 bits from one mt19937_64 draw.
inline double uniform53(std::mt19937_64& eng) {
    return double(eng() >> 11) * 0x1.0p-53;
}

}  // namespace detail

/// Draws one trace of X/P quadrature voltages.  Each sample is a pair of
/// independent Normal(mu, sigma_q^2 + sigma_c^2) draws produced by the
/// Box-Muller transform over std::mt19937_64 (two engine draws per sample:
/// x uses the cosine branch, p the sine branch), so a given (spec, seed)
/// yields the same trace on every platform up to libm rounding.  An optional
/// residual common-mode tone is added identically to both channels.
inline QuadratureBatch sample_quadratures(const NoiseSpec& noise,
                                          const std::optional<ToneSpec>& tone,
                                          const TraceConfig& cfg) {
    noise.validate();
    cfg.validate();
    if (tone) {
        tone->validate();
        if (tone->frequency >= cfg.sample_rate / 2.0)
            throw std::invalid_argument("sample_quadratures: tone frequency at or above Nyquist");
    }

    const double sigma = std::sqrt(noise.sigma_q_sq + noise.sigma_c_sq);
    std::mt19937_64 eng(cfg.rng_seed);

    QuadratureBatch batch;
    batch.config = cfg;
    batch.x.resize(cfg.num_samples);
    batch.p.resize(cfg.num_samples);

    const double two_pi = 2.0 * std::numbers::pi;
    for (std::size_t i = 0; i < cfg.num_samples; ++i) {
        const double u1 = 1.0 - detail::uniform53(eng);  // (0, 1]
        const double u2 = detail::uniform53(eng);        // [0, 1)
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = two_pi * u2;
        double xs = noise.mu + sigma * (r * std::cos(theta));
        double ps = noise.mu + sigma * (r * std::sin(theta));
        if (tone) {
            const double a = tone->amplitude *
                             std::sin(two_pi * tone->frequency * double(i) / cfg.sample_rate +
                                      tone->phase);
            xs += a;
            ps += a;
        }
        batch.x[i] = xs;
        batch.p[i] = ps;
    }
    return batch;
}

/// Z = X^2 + P^2, elementwise.  Units V^2.
inline std::vector<double> compute_z(const QuadratureBatch& batch) {
    std::vector<double> z(batch.x.size());
    for (std::size_t i = 0; i < z.size(); ++i)
        z[i] = batch.x[i] * batch.x[i] + batch.p[i] * batch.p[i];
    return z;
}

struct AdcConfig {
    int bits = 12;
    double v_min = -0.5;  // V
    double v_max = 0.5;   // V

    double w_bin() const { return std::ldexp(v_max - v_min, -bits); }

    void validate() const {
        if (bits < 1 || bits > 30) throw std::invalid_argument("AdcConfig: bits out of range");
        if (!(v_max > v_min)) throw std::invalid_argument("AdcConfig: v_max must exceed v_min");
    }
};

/// Mid-tread quantizer: round to nearest code (ties away from zero), then
/// clamp to the two's-complement rails.
inline std::int32_t adc_quantize(double v, const AdcConfig& adc) {
    const double w = adc.w_bin();
    const std::int64_t hi = (std::int64_t{1} << (adc.bits - 1)) - 1;
    const std::int64_t lo = -(std::int64_t{1} << (adc.bits - 1));
    const double q = std::round(v / w);
    if (q <= double(lo)) return std::int32_t(lo);
    if (q >= double(hi)) return std::int32_t(hi);
    return std::int32_t(q);
}

struct QuantizedTrace {
    std::vector<std::int32_t> codes;
    std::size_t clamped = 0;  // samples that hit a rail
};

inline QuantizedTrace quantize_trace(std::span<const double> trace, const AdcConfig& adc) {
    adc.validate();
    QuantizedTrace out;
    out.codes.resize(trace.size());
    const double w = adc.w_bin();
    const std::int64_t hi = (std::int64_t{1} << (adc.bits - 1)) - 1;
    const std::int64_t lo = -(std::int64_t{1} << (adc.bits - 1));
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const double q = std::round(trace[i] / w);
        if (q < double(lo)) {
            out.codes[i] = std::int32_t(lo);
            ++out.clamped;
        } else if (q > double(hi)) {
            out.codes[i] = std::int32_t(hi);
            ++out.clamped;
        } else {
            out.codes[i] = std::int32_t(q);
        }
    }
    return out;
}

/// Single-bin spectral power via the Goertzel recurrence, normalized so a
/// bin-aligned sinusoid of amplitude A yields A^2/2.
inline double spectral_power_at(std::span<const double> trace, double sample_rate, double f) {
    if (trace.size() < 2)
        throw std::invalid_argument("spectral_power_at: trace must hold at least 2 samples");
    if (!(f > 0.0) || !(f < sample_rate / 2.0))
        throw std::invalid_argument("spectral_power_at: frequency outside (0, Nyquist)");

    const double omega = 2.0 * std::numbers::pi * f / sample_rate;
    const double coeff = 2.0 * std::cos(omega);
    double s1 = 0.0, s2 = 0.0;
    for (double v : trace) {
        const double s0 = v + coeff * s1 - s2;
        s2 = s1;
        s1 = s0;
    }
    const double mag_sq = s1 * s1 + s2 * s2 - coeff * s1 * s2;  // |DFT bin|^2
    const double n = double(trace.size());
    return 2.0 * mag_sq / (n * n);
}

/// Standard deviation of the detector output when a common-mode tone of the
/// given amplitude leaks through a finite CMRR: the residual sinusoid RMS is
/// added in quadrature with the noise floor.
inline double sigma_out_model(double tone_amplitude, CmrrDb cmrr, double floor) {
    if (!(tone_amplitude >= 0.0) || !(floor >= 0.0))
        throw std::invalid_argument("sigma_out_model: inputs must be >= 0");
    const double residual = tone_amplitude * std::pow(10.0, -cmrr.db() / 10.0);
    return std::sqrt(floor * floor + residual * residual / 2.0);
}

}  // namespace qrng
