#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "qrng/sampling.hpp"

using namespace qrng;
using Catch::Matchers::WithinAbs;

namespace {

double sample_variance(const std::vector<double>& v) {
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
    double acc = 0.0;
    for (double x : v) acc += (x - mean) * (x - mean);
    return acc / double(v.size() - 1);
}

// One-sample Kolmogorov-Smirnov statistic against a CDF.
template <typename Cdf>
double ks_statistic(std::vector<double> xs, Cdf cdf) {
    std::sort(xs.begin(), xs.end());
    const double n = double(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = cdf(xs[i]);
        d = std::max(d, std::fabs(double(i + 1) / n - f));
        d = std::max(d, std::fabs(f - double(i) / n));
    }
    return d;
}

}  // namespace

TEST_CASE("degenerate spec produces the mean exactly") {
    const auto batch = sample_quadratures({0.1, 0.0, 0.0}, std::nullopt, {100, 1e6, 42});
    for (std::size_t i = 0; i < 100; ++i) {
        CHECK(batch.x[i] == 0.1);
        CHECK(batch.p[i] == 0.1);
    }
}

TEST_CASE("same seed, same batch") {
    const NoiseSpec noise{0.0, 5e-4, 5e-4};
    const TraceConfig cfg{5000, 1e6, 987654321};
    const auto a = sample_quadratures(noise, std::nullopt, cfg);
    const auto b = sample_quadratures(noise, std::nullopt, cfg);
    CHECK(a.x == b.x);
    CHECK(a.p == b.p);

    TraceConfig other = cfg;
    other.rng_seed = 1;
    const auto c = sample_quadratures(noise, std::nullopt, other);
    CHECK(a.x != c.x);
}

TEST_CASE("sample variance matches the spec at Monte-Carlo scale") {
    const double total_sq = 995e-6;  // V^2
    const std::size_t n = 1'000'000;
    const auto batch = sample_quadratures({0.0, total_sq, 0.0}, std::nullopt, {n, 1e6, 2024});
    // Var(sample variance) ~ 2 sigma^4 / (n-1) for Gaussian data.
    const double se = total_sq * std::sqrt(2.0 / double(n - 1));
    CHECK_THAT(sample_variance(batch.x), WithinAbs(total_sq, 3.0 * se));
    CHECK_THAT(sample_variance(batch.p), WithinAbs(total_sq, 3.0 * se));
}

TEST_CASE("tone injection") {
    const ToneSpec tone{0.2, 1e5, 0.0};
    const auto batch = sample_quadratures({0.0, 0.0, 0.0}, tone, {64, 1e6, 0});
    for (std::size_t i = 0; i < 64; ++i) {
        const double expected = 0.2 * std::sin(2.0 * std::numbers::pi * 1e5 * double(i) / 1e6);
        CHECK_THAT(batch.x[i], WithinAbs(expected, 1e-12));
        CHECK_THAT(batch.p[i], WithinAbs(expected, 1e-12));
    }

    CHECK_THROWS_AS(sample_quadratures({0.0, 0.0, 0.0}, ToneSpec{0.1, 5e5, 0.0}, {16, 1e6, 0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(sample_quadratures({0.0, 0.0, 0.0}, std::nullopt, {0, 1e6, 0}),
                    std::invalid_argument);
}

TEST_CASE("compute_z basics") {
    QuadratureBatch b;
    b.x = {0.0, 3.0};
    b.p = {0.0, 4.0};
    const auto z = compute_z(b);
    CHECK(z[0] == 0.0);
    CHECK(z[1] == 25.0);
}

TEST_CASE("compute_z statistics for zero-mean Gaussian input") {
    const double sigma_sq = 995e-6;
    const std::size_t n = 1'000'000;
    const auto batch = sample_quadratures({0.0, sigma_sq, 0.0}, std::nullopt, {n, 1e6, 555});
    const auto z = compute_z(batch);

    const double mean_z = std::accumulate(z.begin(), z.end(), 0.0) / double(n);
    CHECK_THAT(mean_z, WithinAbs(2.0 * sigma_sq, 0.01 * 2.0 * sigma_sq));

    // For zero-mean Gaussian quadratures, Z is exponential with mean 2 sigma^2.
    const std::size_t ks_n = 100'000;
    std::vector<double> head(z.begin(), z.begin() + ks_n);
    const double d = ks_statistic(std::move(head), [&](double v) {
        return 1.0 - std::exp(-v / (2.0 * sigma_sq));
    });
    const double critical_1pct = 1.628 / std::sqrt(double(ks_n));
    CHECK(d < critical_1pct);
}

TEST_CASE("adc_quantize") {
    const AdcConfig adc{};
    CHECK(adc_quantize(0.0, adc) == 0);
    CHECK(adc_quantize(0.5, adc) == 2047);    // clamped at the positive rail
    CHECK(adc_quantize(-0.6, adc) == -2048);  // clamped at the negative rail

    const AdcConfig wide{12, -0.5, 0.5};
    CHECK(wide.w_bin() == Catch::Approx(1.0 / 4096));
    CHECK(adc_quantize(0.3e-3, wide) == 1);

    SECTION("monotone, and faithful within half a bin") {
        std::mt19937_64 eng(9);
        std::uniform_real_distribution<double> volt(-0.6, 0.6);
        std::vector<double> vs(500);
        for (auto& v : vs) v = volt(eng);
        std::sort(vs.begin(), vs.end());
        for (std::size_t i = 0; i + 1 < vs.size(); ++i)
            CHECK(adc_quantize(vs[i], adc) <= adc_quantize(vs[i + 1], adc));
        for (double v : vs) {
            if (v > -0.5 && v < 0.4997) {  // inside the rails
                const double err = std::fabs(double(adc_quantize(v, adc)) * adc.w_bin() - v);
                CHECK(err <= adc.w_bin() / 2.0 + 1e-15);
            }
        }
    }
}

TEST_CASE("quantize_trace counts rail clamps") {
    const AdcConfig adc{};
    const std::vector<double> trace{0.0, 1.0, -1.0, 0.1};
    const auto q = quantize_trace(trace, adc);
    CHECK(q.codes.size() == 4);
    CHECK(q.clamped == 2);
    CHECK(q.codes[1] == 2047);
    CHECK(q.codes[2] == -2048);
}

TEST_CASE("spectral_power_at") {
    const double fs = 1e6;
    const std::size_t n = 4096;

    SECTION("bin-aligned tone normalization") {
        const double f = 16.0 * fs / double(n);
        std::vector<double> trace(n);
        for (std::size_t i = 0; i < n; ++i)
            trace[i] = 0.2 * std::sin(2.0 * std::numbers::pi * f * double(i) / fs);
        CHECK_THAT(spectral_power_at(trace, fs, f), WithinAbs(0.02, 1e-6));
    }

    SECTION("DC trace has no power at a nonzero bin") {
        const std::vector<double> trace(n, 0.37);
        CHECK_THAT(spectral_power_at(trace, fs, 8.0 * fs / double(n)), WithinAbs(0.0, 1e-12));
    }

    SECTION("tone buried in noise, Monte-Carlo tolerance") {
        const std::size_t big = 1u << 16;
        const double f = 256.0 * fs / double(big);
        const auto noise =
            sample_quadratures({0.0, 0.05 * 0.05, 0.0}, std::nullopt, {big, fs, 77});
        std::vector<double> trace(big);
        for (std::size_t i = 0; i < big; ++i)
            trace[i] = noise.x[i] + 0.2 * std::sin(2.0 * std::numbers::pi * f * double(i) / fs);
        CHECK_THAT(spectral_power_at(trace, fs, f), WithinAbs(0.02, 0.002));
    }

    SECTION("offset invariance at a bin-aligned frequency") {
        const double f = 32.0 * fs / double(n);
        std::mt19937_64 eng(4);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        std::vector<double> trace(n), shifted(n);
        for (std::size_t i = 0; i < n; ++i) {
            trace[i] = u(eng);
            shifted[i] = trace[i] + 5.0;
        }
        CHECK_THAT(spectral_power_at(shifted, fs, f),
                   WithinAbs(spectral_power_at(trace, fs, f), 1e-9));
    }

    SECTION("frequency bounds") {
        const std::vector<double> trace(16, 0.0);
        CHECK_THROWS_AS(spectral_power_at(trace, fs, 0.0), std::invalid_argument);
        CHECK_THROWS_AS(spectral_power_at(trace, fs, fs / 2.0), std::invalid_argument);
        CHECK_THROWS_AS(spectral_power_at(std::vector<double>{1.0}, fs, 1e3),
                        std::invalid_argument);
    }
}

TEST_CASE("sigma_out_model") {
    CHECK(sigma_out_model(0.1, CmrrDb::max(), 8.5e-3) == 8.5e-3);
    CHECK_THAT(sigma_out_model(1.0, CmrrDb::clamped(0.0), 0.0),
               WithinAbs(1.0 / std::sqrt(2.0), 1e-12));
    CHECK_THAT(sigma_out_model(100e-3, CmrrDb::clamped(20.0), 8.5e-3) * 1e3,
               WithinAbs(8.529, 0.01));
}
