#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qrng/bits.hpp"
#include "qrng/entropy.hpp"
#include "qrng/errors.hpp"
#include "qrng/optics.hpp"
#include "qrng/sample_file.hpp"
#include "qrng/sampling.hpp"
#include "qrng/stats.hpp"
#include "qrng/toeplitz.hpp"

namespace qrng {

enum class QuadratureMode { x, p, z };
enum class SeedSource { host_entropy, file };

inline QuadratureMode mode_from_string(std::string_view s) {
    if (s == "X" || s == "x") return QuadratureMode::x;
    if (s == "P" || s == "p") return QuadratureMode::p;
    if (s == "Z" || s == "z") return QuadratureMode::z;
    throw ConfigError("unknown quadrature mode: " + std::string(s));
}

inline const char* mode_to_string(QuadratureMode m) {
    switch (m) {
        case QuadratureMode::x: return "X";
        case QuadratureMode::p: return "P";
        default: return "Z";
    }
}

struct OutputPaths {
    std::filesystem::path bitstream;
    std::filesystem::path report;
    std::filesystem::path samples_x;
    std::filesystem::path samples_p;
    bool ascii_bitstream = false;
};

struct PipelineConfig {
    double lo_power_w = 0.1;
    DetectorModel detector = DetectorModel::calibrated();
    TraceConfig trace{1'000'000, 1e6, 1};
    AdcConfig adc{};
    HashParams hash{12, 8, 60};
    SeedSource seed_source = SeedSource::host_entropy;
    std::filesystem::path seed_file;
    QuadratureMode mode = QuadratureMode::x;
    std::optional<ToneSpec> tone;
    double suite_alpha = 0.01;
    double epsilon_target = 0.0015;
    OutputPaths out;

    void validate() const {
        try {
            detector.validate();
            trace.validate();
            adc.validate();
            hash.validate();
            if (tone) tone->validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
        if (!(lo_power_w >= 0.0)) throw ConfigError("lo_power_w must be >= 0");
        if (!(suite_alpha > 0.0 && suite_alpha < 1.0))
            throw ConfigError("suite alpha must lie in (0, 1)");
        if (!(epsilon_target > 0.0 && epsilon_target <= 1.0))
            throw ConfigError("epsilon_target must lie in (0, 1]");
        if (adc.bits > 16) throw ConfigError("adc bits above 16 unsupported by the sample codec");
        if (seed_source == SeedSource::file && seed_file.empty())
            throw ConfigError("seed_source is 'file' but no seed file given");
        const std::size_t per_sample =
            mode == QuadratureMode::z ? 2 * std::size_t(adc.bits) : std::size_t(adc.bits);
        if (hash.n != per_sample)
            throw ConfigError("hash.n must equal the per-sample input width (" +
                              std::to_string(per_sample) + " bits in " +
                              mode_to_string(mode) + " mode)");
    }

    static PipelineConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

inline PipelineConfig PipelineConfig::from_json(const nlohmann::json& j) {
    PipelineConfig cfg;
    try {
        if (j.contains("lo_power_dbm") && j.contains("lo_power_w"))
            throw ConfigError("give lo_power_dbm or lo_power_w, not both");
        if (j.contains("lo_power_dbm")) cfg.lo_power_w = dbm_to_watts(j.at("lo_power_dbm"));
        if (j.contains("lo_power_w")) cfg.lo_power_w = j.at("lo_power_w");
        if (j.contains("detector")) {
            const auto& d = j.at("detector");
            cfg.detector.g = d.value("g_v2_per_w", cfg.detector.g);
            cfg.detector.sigma_c_sq = d.value("sigma_c_sq_v2", cfg.detector.sigma_c_sq);
            cfg.detector.p_sat = d.value("p_sat_w", cfg.detector.p_sat);
            cfg.detector.sigma_floor = d.value("sigma_floor_v", cfg.detector.sigma_floor);
            cfg.detector.p_ref = d.value("p_ref_w", cfg.detector.p_ref);
        }
        if (j.contains("trace")) {
            const auto& t = j.at("trace");
            cfg.trace.num_samples = t.value("num_samples", cfg.trace.num_samples);
            cfg.trace.sample_rate = t.value("sample_rate_hz", cfg.trace.sample_rate);
            cfg.trace.rng_seed = t.value("rng_seed", cfg.trace.rng_seed);
        }
        if (j.contains("adc")) {
            const auto& a = j.at("adc");
            cfg.adc.bits = a.value("bits", cfg.adc.bits);
            cfg.adc.v_min = a.value("v_min", cfg.adc.v_min);
            cfg.adc.v_max = a.value("v_max", cfg.adc.v_max);
        }
        if (j.contains("hash")) {
            const auto& h = j.at("hash");
            cfg.hash.n = h.value("n", cfg.hash.n);
            cfg.hash.m = h.value("m", cfg.hash.m);
            cfg.hash.s = h.value("s", cfg.hash.s);
        }
        if (j.contains("seed_source")) {
            const std::string s = j.at("seed_source");
            if (s == "host")
                cfg.seed_source = SeedSource::host_entropy;
            else if (s == "file")
                cfg.seed_source = SeedSource::file;
            else
                throw ConfigError("seed_source must be 'host' or 'file'");
        }
        if (j.contains("seed_file")) cfg.seed_file = std::string(j.at("seed_file"));
        if (j.contains("mode")) cfg.mode = mode_from_string(std::string(j.at("mode")));
        if (j.contains("tone")) {
            const auto& t = j.at("tone");
            ToneSpec tone;
            tone.amplitude = t.value("amplitude_v", 0.0);
            tone.frequency = t.value("frequency_hz", 0.0);
            tone.phase = t.value("phase_rad", 0.0);
            cfg.tone = tone;
        }
        cfg.suite_alpha = j.value("alpha", cfg.suite_alpha);
        cfg.epsilon_target = j.value("epsilon_target", cfg.epsilon_target);
        if (j.contains("output")) {
            const auto& o = j.at("output");
            cfg.out.bitstream = std::string(o.value("bitstream", ""));
            cfg.out.report = std::string(o.value("report", ""));
            cfg.out.samples_x = std::string(o.value("samples_x", ""));
            cfg.out.samples_p = std::string(o.value("samples_p", ""));
            cfg.out.ascii_bitstream = o.value("ascii_bitstream", false);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad config: ") + e.what());
    }
    return cfg;
}

inline nlohmann::json PipelineConfig::to_json() const {
    nlohmann::json j;
    j["lo_power_w"] = lo_power_w;
    j["detector"] = {{"g_v2_per_w", detector.g},
                     {"sigma_c_sq_v2", detector.sigma_c_sq},
                     {"p_sat_w", detector.p_sat},
                     {"sigma_floor_v", detector.sigma_floor},
                     {"p_ref_w", detector.p_ref}};
    j["trace"] = {{"num_samples", trace.num_samples},
                  {"sample_rate_hz", trace.sample_rate},
                  {"rng_seed", trace.rng_seed}};
    j["adc"] = {{"bits", adc.bits}, {"v_min", adc.v_min}, {"v_max", adc.v_max}};
    j["hash"] = {{"n", hash.n}, {"m", hash.m}, {"s", hash.s}};
    j["seed_source"] = seed_source == SeedSource::file ? "file" : "host";
    if (!seed_file.empty()) j["seed_file"] = seed_file.string();
    j["mode"] = mode_to_string(mode);
    if (tone)
        j["tone"] = {{"amplitude_v", tone->amplitude},
                     {"frequency_hz", tone->frequency},
                     {"phase_rad", tone->phase}};
    j["alpha"] = suite_alpha;
    j["epsilon_target"] = epsilon_target;
    j["output"] = {{"bitstream", out.bitstream.string()},
                   {"report", out.report.string()},
                   {"samples_x", out.samples_x.string()},
                   {"samples_p", out.samples_p.string()},
                   {"ascii_bitstream", out.ascii_bitstream}};
    return j;
}

struct RunReport {
    EntropyReport entropy;
    SuiteReport suite;
    double throughput_samples_per_s = 0.0;
    double throughput_bits_per_s = 0.0;
    std::size_t saturation_clamps = 0;
    std::size_t samples_used = 0;
    std::size_t bits_emitted = 0;
    std::uint64_t sampler_seed = 0;
    std::string toeplitz_seed_fingerprint;
    std::vector<std::string> warnings;
    nlohmann::json config_echo;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["entropy"] = {{"h_min_bits", entropy.h_min},
                        {"m", entropy.m},
                        {"s", entropy.s},
                        {"epsilon", entropy.epsilon}};
        nlohmann::json results = nlohmann::json::array();
        for (const auto& r : suite.results) {
            nlohmann::json res;
            res["test"] = r.test_name;
            if (r.applicable && !r.errored)
                res["p_value"] = r.p_value;
            else
                res["p_value"] = nullptr;
            res["passed"] = r.passed;
            res["applicable"] = r.applicable;
            if (r.errored) res["error"] = r.note;
            else if (!r.note.empty()) res["note"] = r.note;
            results.push_back(std::move(res));
        }
        j["suite"] = {{"results", std::move(results)},
                      {"fisher_p", suite.fisher_p},
                      {"all_passed", suite.all_passed()}};
        j["throughput"] = {{"samples_per_s", throughput_samples_per_s},
                           {"bits_per_s", throughput_bits_per_s}};
        j["saturation_clamps"] = saturation_clamps;
        j["samples_used"] = samples_used;
        j["bits_emitted"] = bits_emitted;
        j["seeds"] = {{"sampler", sampler_seed},
                      {"toeplitz_fingerprint", toeplitz_seed_fingerprint}};
        j["warnings"] = warnings;
        j["config"] = config_echo;
        return j;
    }
};

namespace detail {

inline std::string fingerprint_hex(const BitVector& seed_bits) {
    const auto packed = pack_bits(seed_bits);
    const std::uint64_t h = fnv1a64(packed.bytes);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline ToeplitzSeed load_toeplitz_seed(const PipelineConfig& cfg) {
    if (cfg.seed_source == SeedSource::host_entropy)
        return ToeplitzSeed::from_host_entropy(cfg.hash);
    std::ifstream in(cfg.seed_file, std::ios::binary);
    if (!in) throw ConfigError("cannot open seed file: " + cfg.seed_file.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (bytes.size() < cfg.hash.seed_bytes())
        throw ConfigError("seed file too short: need " + std::to_string(cfg.hash.seed_bytes()) +
                          " bytes, got " + std::to_string(bytes.size()));
    return ToeplitzSeed::from_bytes(bytes, cfg.hash);
}

inline void write_bitstream_file(const BitVector& bits, const std::filesystem::path& path,
                                 bool ascii) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw PipelineError("cannot open bitstream output: " + path.string());
    if (ascii) {
        std::string s = bits.str();
        out.write(s.data(), std::streamsize(s.size()));
    } else {
        const auto packed = pack_bits(bits);
        out.write(reinterpret_cast<const char*>(packed.bytes.data()),
                  std::streamsize(packed.bytes.size()));
    }
    if (!out) throw PipelineError("bitstream write failed: " + path.string());
}

/// Renders quantized samples as extractor input codes for the given mode.
/// Z mode packs the X code above the P code (X bits first on the wire).
inline std::vector<std::int32_t> extractor_codes(const PipelineConfig& cfg,
                                                 const QuantizedTrace& qx,
                                                 const QuantizedTrace& qp) {
    switch (cfg.mode) {
        case QuadratureMode::x: return qx.codes;
        case QuadratureMode::p: return qp.codes;
        default: break;
    }
    const auto bits = unsigned(cfg.adc.bits);
    const std::uint32_t mask = (std::uint32_t{1} << bits) - 1;
    std::vector<std::int32_t> codes(qx.codes.size());
    for (std::size_t i = 0; i < codes.size(); ++i) {
        const std::uint32_t hi = std::uint32_t(qx.codes[i]) & mask;
        const std::uint32_t lo = std::uint32_t(qp.codes[i]) & mask;
        codes[i] = std::int32_t((hi << bits) | lo);
    }
    return codes;
}

}  // namespace detail

/// Full simulate -> quantize -> budget -> extract -> test run.  The extracted
/// bitstream is returned through bitstream_out when non-null, and written to
/// the configured output paths either way.
inline RunReport run_pipeline(const PipelineConfig& cfg, BitVector* bitstream_out = nullptr) {
    cfg.validate();
    RunReport report;
    report.config_echo = cfg.to_json();
    report.sampler_seed = cfg.trace.rng_seed;

    const DetectorVariances dv = detector_variances(cfg.lo_power_w, cfg.detector);
    const NoiseSpec noise{0.0, dv.sigma_q_sq, dv.sigma_c_sq};
    const QuadratureBatch batch = sample_quadratures(noise, cfg.tone, cfg.trace);

    const QuantizedTrace qx = quantize_trace(batch.x, cfg.adc);
    const QuantizedTrace qp = quantize_trace(batch.p, cfg.adc);
    switch (cfg.mode) {
        case QuadratureMode::x: report.saturation_clamps = qx.clamped; break;
        case QuadratureMode::p: report.saturation_clamps = qp.clamped; break;
        case QuadratureMode::z: report.saturation_clamps = qx.clamped + qp.clamped; break;
    }

    // Quantum entropy budget; the Gaussian bound also covers Z-mode samples.
    double h_min = 0.0;
    if (dv.sigma_q_sq > 0.0) {
        const double sigma_q = std::sqrt(dv.sigma_q_sq);
        if (cfg.adc.w_bin() > sigma_q / 10.0)
            report.warnings.push_back("ADC bin width above sigma_q/10, min-entropy bound degraded");
        h_min = min_entropy_gaussian(sigma_q, cfg.adc.w_bin());
    } else {
        report.warnings.push_back("no quantum contribution at this LO power");
    }
    const unsigned m_max = choose_m(h_min, cfg.hash.s, cfg.epsilon_target);
    if (cfg.hash.m > m_max)
        throw PipelineError("configured m=" + std::to_string(cfg.hash.m) +
                            " exceeds the entropy budget (max " + std::to_string(m_max) +
                            " bits/sample at epsilon " + std::to_string(cfg.epsilon_target) + ")");
    report.entropy = make_entropy_report(h_min, unsigned(cfg.hash.m), cfg.hash.s);

    const ToeplitzSeed seed = detail::load_toeplitz_seed(cfg);
    report.toeplitz_seed_fingerprint = detail::fingerprint_hex(seed.bits());

    const std::vector<std::int32_t> codes = detail::extractor_codes(cfg, qx, qp);
    report.samples_used = codes.size();

    const auto t0 = std::chrono::steady_clock::now();
    BitVector bits = extract_stream(codes, cfg.hash, seed);
    const auto t1 = std::chrono::steady_clock::now();
    const double dt = std::chrono::duration<double>(t1 - t0).count();
    if (dt > 0.0) {
        report.throughput_samples_per_s = double(codes.size()) / dt;
        report.throughput_bits_per_s = double(bits.size()) / dt;
    }

    report.bits_emitted = bits.size();
    const std::size_t expected = (codes.size() / cfg.hash.s) * cfg.hash.s * cfg.hash.m;
    if (report.bits_emitted != expected)
        throw std::logic_error("run_pipeline: emitted bit count violates conservation");

    if (report.saturation_clamps > 0)
        report.warnings.push_back(std::to_string(report.saturation_clamps) +
                                  " samples clamped at the ADC rails");

    if (bits.empty())
        throw PipelineError("fewer samples than one hash group; no bits extracted");
    report.suite = run_core_suite(bits, cfg.suite_alpha);

    if (!cfg.out.samples_x.empty())
        encode_samples_file(qx.codes, 'X', cfg.adc.bits, cfg.out.samples_x);
    if (!cfg.out.samples_p.empty())
        encode_samples_file(qp.codes, 'P', cfg.adc.bits, cfg.out.samples_p);
    if (!cfg.out.bitstream.empty())
        detail::write_bitstream_file(bits, cfg.out.bitstream, cfg.out.ascii_bitstream);
    if (!cfg.out.report.empty()) {
        std::ofstream out(cfg.out.report);
        if (!out) throw PipelineError("cannot open report output: " + cfg.out.report.string());
        out << report.to_json().dump(2) << '\n';
    }

    if (bitstream_out) *bitstream_out = std::move(bits);
    return report;
}

enum class FigureId { fig3_left, fig3_right, fig7, fig8 };

inline FigureId figure_id_from_string(std::string_view s) {
    if (s == "fig3-left") return FigureId::fig3_left;
    if (s == "fig3-right") return FigureId::fig3_right;
    if (s == "fig7") return FigureId::fig7;
    if (s == "fig8") return FigureId::fig8;
    throw ConfigError("unknown figure id: " + std::string(s));
}

struct FigureConfig {
    double tone_amplitude = 0.1;  // V, common-mode tone for the fig3 sweeps
    DetectorModel detector = DetectorModel::calibrated();
    std::uint64_t rng_seed = 1;
    std::size_t fig8_samples = 1u << 17;
};

inline void emit_figure_data(FigureId figure, std::ostream& out,
                             const FigureConfig& fc = {}) {
    out << std::setprecision(12);
    switch (figure) {
        case FigureId::fig3_left: {
            // Path-length sweep of the delay-line experiment: 1 GHz tone.
            out << "delta_l_mm,cmrr_db,sigma_out_mv\n";
            for (int i = -50; i <= 50; ++i) {
                const double dl_mm = 0.5 * i;
                const OpticalPath path{dl_mm * 1e-3, 1.0, 1e9};
                const CmrrDb cmrr = cmrr_path(phase_from_path_difference(path));
                const double sigma =
                    sigma_out_model(fc.tone_amplitude, cmrr, fc.detector.sigma_floor);
                out << dl_mm << ',' << cmrr.db() << ',' << sigma * 1e3 << '\n';
            }
            break;
        }
        case FigureId::fig3_right: {
            out << "kappa,cmrr_db,sigma_out_mv\n";
            for (int i = 0; i <= 100; ++i) {
                const double kappa = 0.25 + 0.005 * i;
                const CmrrDb cmrr = cmrr_split(SplitConfig{kappa});
                const double sigma =
                    sigma_out_model(fc.tone_amplitude, cmrr, fc.detector.sigma_floor);
                out << kappa << ',' << cmrr.db() << ',' << sigma * 1e3 << '\n';
            }
            break;
        }
        case FigureId::fig7: {
            out << "lo_power_dbm,lo_power_w,sigma_total_sq_mv2,sigma_q_sq_mv2,"
                   "sigma_c_sq_mv2,snc_db\n";
            for (int i = 0; i <= 72; ++i) {
                const double dbm = -14.0 + 0.5 * i;
                const double watts = dbm_to_watts(dbm);
                const DetectorVariances dv = detector_variances(watts, fc.detector);
                out << dbm << ',' << watts << ',' << dv.sigma_total_sq * 1e6 << ','
                    << dv.sigma_q_sq * 1e6 << ',' << dv.sigma_c_sq * 1e6 << ',' << dv.snc_db
                    << '\n';
            }
            break;
        }
        case FigureId::fig8: {
            // Histograms of raw ADC codes and hashed output bytes for a
            // reference-configuration run.
            const DetectorVariances dv = detector_variances(fc.detector.p_ref, fc.detector);
            const NoiseSpec noise{0.0, dv.sigma_q_sq, dv.sigma_c_sq};
            const TraceConfig trace{fc.fig8_samples, 1e6, fc.rng_seed};
            const QuadratureBatch batch = sample_quadratures(noise, std::nullopt, trace);
            const AdcConfig adc{};
            const QuantizedTrace qt = quantize_trace(batch.x, adc);

            const HashParams params{12, 8, 60};
            std::mt19937_64 eng(fc.rng_seed);
            std::vector<std::uint8_t> seed_bytes(params.seed_bytes());
            for (auto& b : seed_bytes) b = std::uint8_t(eng() & 0xff);
            const BitVector bits =
                extract_stream(qt.codes, params, ToeplitzSeed::from_bytes(seed_bytes, params));
            const PackedBits packed = pack_bits(bits);

            std::map<std::int64_t, std::uint64_t> raw, hashed;
            for (const auto code : qt.codes) ++raw[code];
            for (const auto byte : packed.bytes) ++hashed[byte];

            out << "series,value,count\n";
            for (const auto& [value, count] : raw)
                out << "raw_code," << value << ',' << count << '\n';
            for (const auto& [value, count] : hashed)
                out << "hashed_byte," << value << ',' << count << '\n';
            break;
        }
    }
}

inline void emit_figure_data_file(FigureId figure, const std::filesystem::path& path,
                                  const FigureConfig& fc = {}) {
    std::ofstream out(path);
    if (!out) throw PipelineError("cannot open figure output: " + path.string());
    emit_figure_data(figure, out, fc);
}

}  // namespace qrng
