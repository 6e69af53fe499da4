// Command-line front end for the QRNG simulation and extraction pipeline.
//
// Exit codes: 0 success, 1 configuration error, 2 pipeline failure,
// 3 statistical suite failure.

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "qrng/pipeline.hpp"
#include "qrng/service.hpp"

namespace {

std::atomic<bool> g_stop{false};

void handle_signal(int) { g_stop.store(true); }

qrng::PipelineConfig load_config(const std::string& path) {
    if (path.empty()) return {};
    std::ifstream in(path);
    if (!in) throw qrng::ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw qrng::ConfigError(std::string("config parse error: ") + e.what());
    }
    return qrng::PipelineConfig::from_json(j);
}

qrng::BitVector read_bitstream(const std::string& path, bool ascii, std::size_t bit_limit) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw qrng::PipelineError("cannot open bitstream: " + path);
    if (ascii) {
        qrng::BitVector bits;
        char c;
        while (in.get(c)) {
            if (c == '0')
                bits.append(false);
            else if (c == '1')
                bits.append(true);
            else if (!std::isspace(static_cast<unsigned char>(c)))
                throw qrng::PipelineError("ASCII bitstream holds non-bit characters");
            if (bit_limit && bits.size() == bit_limit) break;
        }
        return bits;
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    std::size_t nbits = bytes.size() * 8;
    if (bit_limit && bit_limit < nbits) nbits = bit_limit;
    return qrng::bits_from_bytes_msb_first(bytes, nbits);
}

void print_suite(const qrng::SuiteReport& suite) {
    for (const auto& r : suite.results) {
        std::cout << "  " << r.test_name << ": ";
        if (!r.applicable)
            std::cout << "not applicable";
        else if (r.errored)
            std::cout << "error (" << r.note << ")";
        else
            std::cout << "p=" << r.p_value << (r.passed ? "  pass" : "  FAIL");
        std::cout << '\n';
    }
    std::cout << "  fisher composite: p=" << suite.fisher_p << '\n';
    std::cout << (suite.all_passed() ? "suite PASSED" : "suite FAILED") << '\n';
}

int cmd_simulate(const qrng::PipelineConfig& cfg, const std::string& out_x,
                 const std::string& out_p) {
    cfg.trace.validate();
    cfg.adc.validate();
    if (out_x.empty() && out_p.empty())
        throw qrng::ConfigError("simulate: give --out-x and/or --out-p");

    const auto dv = qrng::detector_variances(cfg.lo_power_w, cfg.detector);
    const qrng::NoiseSpec noise{0.0, dv.sigma_q_sq, dv.sigma_c_sq};
    const auto batch = qrng::sample_quadratures(noise, cfg.tone, cfg.trace);
    const auto qx = qrng::quantize_trace(batch.x, cfg.adc);
    const auto qp = qrng::quantize_trace(batch.p, cfg.adc);
    if (!out_x.empty()) qrng::encode_samples_file(qx.codes, 'X', cfg.adc.bits, out_x);
    if (!out_p.empty()) qrng::encode_samples_file(qp.codes, 'P', cfg.adc.bits, out_p);

    std::cout << "simulated " << cfg.trace.num_samples << " samples at LO "
              << qrng::watts_to_dbm(cfg.lo_power_w) << " dBm (sigma_total^2 = "
              << dv.sigma_total_sq * 1e6 << " mV^2, SNC = " << dv.snc_db << " dB)\n";
    std::cout << "rail clamps: X=" << qx.clamped << " P=" << qp.clamped << '\n';
    return 0;
}

int cmd_extract(qrng::PipelineConfig cfg, const std::string& in_x, const std::string& in_p,
                const std::string& out, bool ascii, const std::string& seed_file) {
    if (out.empty()) throw qrng::ConfigError("extract: --out is required");

    std::vector<std::int32_t> codes;
    int bits = cfg.adc.bits;
    if (cfg.mode == qrng::QuadratureMode::z) {
        if (in_x.empty() || in_p.empty())
            throw qrng::ConfigError("extract: Z mode needs --in-x and --in-p");
        const auto dx = qrng::decode_samples_file(in_x);
        const auto dp = qrng::decode_samples_file(in_p);
        if (dx.bits != dp.bits)
            throw qrng::PipelineError("extract: X and P files declare different bit widths");
        if (dx.codes.size() != dp.codes.size())
            throw qrng::PipelineError("extract: X and P files hold different sample counts");
        bits = dx.bits;
        const auto mask = (std::uint32_t{1} << bits) - 1;
        codes.resize(dx.codes.size());
        for (std::size_t i = 0; i < codes.size(); ++i)
            codes[i] = std::int32_t(((std::uint32_t(dx.codes[i]) & mask) << bits) |
                                    (std::uint32_t(dp.codes[i]) & mask));
    } else {
        const std::string& in = cfg.mode == qrng::QuadratureMode::x ? in_x : in_p;
        if (in.empty())
            throw qrng::ConfigError(std::string("extract: ") +
                                    (cfg.mode == qrng::QuadratureMode::x ? "--in-x" : "--in-p") +
                                    " is required in this mode");
        auto decoded = qrng::decode_samples_file(in);
        bits = decoded.bits;
        codes = std::move(decoded.codes);
    }

    const std::size_t per_sample =
        cfg.mode == qrng::QuadratureMode::z ? 2 * std::size_t(bits) : std::size_t(bits);
    if (cfg.hash.n != per_sample)
        throw qrng::ConfigError("extract: hash.n=" + std::to_string(cfg.hash.n) +
                                " does not match the file's per-sample width of " +
                                std::to_string(per_sample) + " bits");
    cfg.hash.validate();

    if (!seed_file.empty()) {
        cfg.seed_source = qrng::SeedSource::file;
        cfg.seed_file = seed_file;
    }
    const auto seed = qrng::detail::load_toeplitz_seed(cfg);

    const auto bitstream = qrng::extract_stream(codes, cfg.hash, seed);
    qrng::detail::write_bitstream_file(bitstream, out, ascii);
    std::cout << "extracted " << bitstream.size() << " bits from " << codes.size()
              << " samples (seed fingerprint " << qrng::detail::fingerprint_hex(seed.bits())
              << ")\n";
    return 0;
}

int cmd_test(const std::string& in, bool ascii, std::size_t bit_limit, double alpha,
             const std::string& report_path) {
    const auto bits = read_bitstream(in, ascii, bit_limit);
    if (bits.empty()) throw qrng::PipelineError("test: bitstream is empty");
    const auto suite = qrng::run_core_suite(bits, alpha);
    std::cout << "tested " << bits.size() << " bits at alpha = " << alpha << '\n';
    print_suite(suite);
    if (!report_path.empty()) {
        qrng::RunReport wrapper;
        wrapper.suite = suite;
        wrapper.bits_emitted = bits.size();
        std::ofstream outf(report_path);
        if (!outf) throw qrng::PipelineError("cannot open report output: " + report_path);
        outf << wrapper.to_json()["suite"].dump(2) << '\n';
    }
    return suite.all_passed() ? 0 : 3;
}

int cmd_figures(const std::string& figure, const std::string& out, double tone_amplitude) {
    const auto id = qrng::figure_id_from_string(figure);
    qrng::FigureConfig fc;
    fc.tone_amplitude = tone_amplitude;
    if (out.empty())
        qrng::emit_figure_data(id, std::cout, fc);
    else
        qrng::emit_figure_data_file(id, out, fc);
    return 0;
}

int cmd_serve(const qrng::PipelineConfig& cfg, int port, std::size_t buffer_bytes) {
    qrng::ServiceConfig sc;
    sc.pipeline = cfg;
    sc.buffer_capacity = buffer_bytes;
    qrng::RandomService service(std::move(sc));
    const int bound = service.start(port);
    std::cout << "serving on port " << bound << " (GET /random?bytes=N, GET /health)\n"
              << std::flush;
    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);
    while (!g_stop.load()) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    service.stop();
    return 0;
}

int cmd_report(const qrng::PipelineConfig& cfg) {
    const auto report = qrng::run_pipeline(cfg);
    std::cout << "h_min = " << report.entropy.h_min << " bits/sample, m = " << report.entropy.m
              << ", s = " << report.entropy.s << ", epsilon = " << report.entropy.epsilon << '\n';
    std::cout << "extracted " << report.bits_emitted << " bits from " << report.samples_used
              << " samples (" << report.throughput_samples_per_s / 1e6 << " Msamples/s)\n";
    for (const auto& w : report.warnings) std::cout << "warning: " << w << '\n';
    print_suite(report.suite);
    if (!cfg.out.report.empty()) std::cout << "report written to " << cfg.out.report << '\n';
    return report.suite.all_passed() ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Conjugate-homodyne QRNG simulator, Toeplitz extractor and test bench"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "JSON configuration file")
        ->check(CLI::ExistingFile);

    // Common overrides, applied on top of the config file.
    std::optional<double> lo_dbm, lo_w;
    std::optional<std::size_t> samples;
    std::optional<std::uint64_t> sampler_seed;
    std::optional<std::string> mode;
    app.add_option("--lo-dbm", lo_dbm, "LO power in dBm");
    app.add_option("--lo-w", lo_w, "LO power in watts");
    app.add_option("--samples", samples, "number of samples to simulate");
    app.add_option("--seed", sampler_seed, "sampler RNG seed");
    app.add_option("--mode", mode, "quadrature mode: X, P or Z");

    auto effective_config = [&]() {
        auto cfg = load_config(config_path);
        if (lo_dbm && lo_w) throw qrng::ConfigError("give --lo-dbm or --lo-w, not both");
        if (lo_dbm) cfg.lo_power_w = qrng::dbm_to_watts(*lo_dbm);
        if (lo_w) cfg.lo_power_w = *lo_w;
        if (samples) cfg.trace.num_samples = *samples;
        if (sampler_seed) cfg.trace.rng_seed = *sampler_seed;
        if (mode) cfg.mode = qrng::mode_from_string(*mode);
        return cfg;
    };

    int exit_code = 0;

    auto* sim = app.add_subcommand("simulate", "generate quadrature samples and write them");
    std::string sim_out_x, sim_out_p;
    sim->add_option("--out-x", sim_out_x, "output sample file for the X channel");
    sim->add_option("--out-p", sim_out_p, "output sample file for the P channel");
    sim->callback([&] { exit_code = cmd_simulate(effective_config(), sim_out_x, sim_out_p); });

    auto* ext = app.add_subcommand("extract", "hash stored samples into a bitstream");
    std::string ext_in_x, ext_in_p, ext_out, ext_seed_file;
    bool ext_ascii = false;
    std::optional<std::size_t> ext_n, ext_m, ext_s;
    ext->add_option("--in-x", ext_in_x, "X-channel sample file")->check(CLI::ExistingFile);
    ext->add_option("--in-p", ext_in_p, "P-channel sample file")->check(CLI::ExistingFile);
    ext->add_option("--out", ext_out, "output bitstream file");
    ext->add_flag("--ascii", ext_ascii, "write '0'/'1' characters instead of packed bytes");
    ext->add_option("--seed-file", ext_seed_file, "Toeplitz seed file (raw bytes)")
        ->check(CLI::ExistingFile);
    ext->add_option("--hash-n", ext_n, "input bits per sample");
    ext->add_option("--hash-m", ext_m, "output bits per sample");
    ext->add_option("--hash-s", ext_s, "samples per hash");
    ext->callback([&] {
        auto cfg = effective_config();
        if (ext_n) cfg.hash.n = *ext_n;
        if (ext_m) cfg.hash.m = *ext_m;
        if (ext_s) cfg.hash.s = *ext_s;
        exit_code = cmd_extract(cfg, ext_in_x, ext_in_p, ext_out, ext_ascii, ext_seed_file);
    });

    auto* tst = app.add_subcommand("test", "run the statistical core suite on a bitstream");
    std::string tst_in, tst_report;
    bool tst_ascii = false;
    std::size_t tst_bits = 0;
    double tst_alpha = 0.01;
    tst->add_option("--in", tst_in, "bitstream file")->required()->check(CLI::ExistingFile);
    tst->add_flag("--ascii-in", tst_ascii, "input is '0'/'1' characters");
    tst->add_option("--bits", tst_bits, "test only the first N bits");
    tst->add_option("--alpha", tst_alpha, "significance level (default 0.01)");
    tst->add_option("--report", tst_report, "write the suite report as JSON");
    tst->callback(
        [&] { exit_code = cmd_test(tst_in, tst_ascii, tst_bits, tst_alpha, tst_report); });

    auto* fig = app.add_subcommand("figures", "emit CSV data for the model sweeps");
    std::string fig_id, fig_out;
    double fig_tone = 0.1;
    fig->add_option("--figure", fig_id, "fig3-left, fig3-right, fig7 or fig8")->required();
    fig->add_option("--out", fig_out, "output CSV path (default: stdout)");
    fig->add_option("--tone-amplitude", fig_tone, "common-mode tone amplitude in volts");
    fig->callback([&] { exit_code = cmd_figures(fig_id, fig_out, fig_tone); });

    auto* srv = app.add_subcommand("serve", "serve extracted bytes over HTTP");
    int srv_port = 8080;
    std::size_t srv_buffer = 1u << 20;
    srv->add_option("--port", srv_port, "listen port (default 8080)");
    srv->add_option("--buffer-bytes", srv_buffer, "entropy buffer capacity");
    srv->callback([&] { exit_code = cmd_serve(effective_config(), srv_port, srv_buffer); });

    auto* rep = app.add_subcommand("report", "run the full pipeline and print a report");
    std::string rep_out_bits, rep_out_report;
    bool rep_ascii = false;
    rep->add_option("--out-bits", rep_out_bits, "also write the extracted bitstream");
    rep->add_option("--out-report", rep_out_report, "also write the run report as JSON");
    rep->add_flag("--ascii", rep_ascii, "bitstream output as '0'/'1' characters");
    rep->callback([&] {
        auto cfg = effective_config();
        if (!rep_out_bits.empty()) cfg.out.bitstream = rep_out_bits;
        if (!rep_out_report.empty()) cfg.out.report = rep_out_report;
        if (rep_ascii) cfg.out.ascii_bitstream = true;
        exit_code = cmd_report(cfg);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    } catch (const qrng::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return exit_code;
}
