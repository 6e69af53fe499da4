#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "qrng/pipeline.hpp"

using namespace qrng;
using Catch::Matchers::WithinAbs;

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("qrng_test_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

void write_seed_file(const fs::path& path, std::size_t bytes, std::uint64_t seed) {
    std::mt19937_64 eng(seed);
    std::ofstream out(path, std::ios::binary);
    for (std::size_t i = 0; i < bytes; ++i) out.put(char(eng() & 0xff));
}

PipelineConfig small_config(const fs::path& seed_file) {
    PipelineConfig cfg;
    cfg.trace.num_samples = 60'000;
    cfg.trace.rng_seed = 424242;
    cfg.seed_source = SeedSource::file;
    cfg.seed_file = seed_file;
    return cfg;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> fields;
        std::istringstream ls(line);
        std::string field;
        while (std::getline(ls, field, ',')) fields.push_back(field);
        rows.push_back(std::move(fields));
    }
    return rows;
}

}  // namespace

TEST_CASE("sample file round trip") {
    SECTION("empty list gives a header-only file") {
        std::stringstream buf;
        encode_samples({}, 'X', 12, buf);
        CHECK(buf.str().size() == 16);
        const auto decoded = decode_samples(buf);
        CHECK(decoded.codes.empty());
        CHECK(decoded.channel == 'X');
        CHECK(decoded.bits == 12);
    }

    SECTION("rail values survive bit-exactly") {
        const std::vector<std::int32_t> codes{-2048, 0, 2047};
        std::stringstream buf;
        encode_samples(codes, 'P', 12, buf);
        CHECK(decode_samples(buf).codes == codes);
    }

    SECTION("random codes round trip and the size formula holds") {
        std::mt19937_64 eng(15);
        std::vector<std::int32_t> codes(1'000'000);
        for (auto& c : codes) c = std::int32_t(eng() % 4096) - 2048;
        std::stringstream buf;
        encode_samples(codes, 'X', 12, buf);
        CHECK(buf.str().size() == 16 + 2 * codes.size());
        CHECK(decode_samples(buf).codes == codes);
    }

    SECTION("errors: bad magic, bad version, truncation, range") {
        std::stringstream buf;
        encode_samples(std::vector<std::int32_t>{1, 2, 3}, 'X', 12, buf);
        std::string good = buf.str();

        std::string bad_magic = good;
        bad_magic[0] = 'x';
        std::stringstream b1(bad_magic);
        CHECK_THROWS_AS(decode_samples(b1), PipelineError);

        std::string bad_version = good;
        bad_version[4] = 9;
        std::stringstream b2(bad_version);
        CHECK_THROWS_AS(decode_samples(b2), PipelineError);

        std::stringstream b3(good.substr(0, good.size() - 1));
        CHECK_THROWS_AS(decode_samples(b3), PipelineError);

        CHECK_THROWS_AS(
            [] {
                std::stringstream sink;
                encode_samples(std::vector<std::int32_t>{4000}, 'X', 12, sink);
            }(),
            std::invalid_argument);
    }
}

TEST_CASE("config json round trip and validation") {
    PipelineConfig cfg;
    cfg.lo_power_w = 0.033;
    cfg.trace.num_samples = 1234;
    cfg.trace.rng_seed = 99;
    cfg.mode = QuadratureMode::z;
    cfg.hash = HashParams{24, 8, 60};
    cfg.tone = ToneSpec{0.1, 1e5, 0.25};
    cfg.out.bitstream = "bits.bin";
    cfg.out.ascii_bitstream = true;

    const auto j = cfg.to_json();
    const auto back = PipelineConfig::from_json(j);
    CHECK(back.lo_power_w == cfg.lo_power_w);
    CHECK(back.trace.num_samples == cfg.trace.num_samples);
    CHECK(back.trace.rng_seed == cfg.trace.rng_seed);
    CHECK(back.mode == QuadratureMode::z);
    CHECK(back.hash.n == 24);
    REQUIRE(back.tone.has_value());
    CHECK(back.tone->amplitude == 0.1);
    CHECK(back.out.bitstream == "bits.bin");
    CHECK(back.out.ascii_bitstream);
    CHECK_NOTHROW(back.validate());

    SECTION("dBm input converts at the boundary") {
        const auto fromdbm = PipelineConfig::from_json({{"lo_power_dbm", 20.0}});
        CHECK_THAT(fromdbm.lo_power_w, WithinAbs(0.1, 1e-12));
        CHECK_THROWS_AS(
            PipelineConfig::from_json({{"lo_power_dbm", 20.0}, {"lo_power_w", 0.1}}),
            ConfigError);
    }

    SECTION("hash width must match the mode") {
        PipelineConfig bad;
        bad.hash.n = 10;
        CHECK_THROWS_AS(bad.validate(), ConfigError);

        PipelineConfig z;
        z.mode = QuadratureMode::z;
        z.hash = HashParams{12, 8, 60};  // Z mode needs n = 24
        CHECK_THROWS_AS(z.validate(), ConfigError);
        z.hash.n = 24;
        CHECK_NOTHROW(z.validate());
    }

    SECTION("file seed source needs a path") {
        PipelineConfig bad;
        bad.seed_source = SeedSource::file;
        CHECK_THROWS_AS(bad.validate(), ConfigError);
    }
}

TEST_CASE("run_pipeline") {
    TempDir tmp;
    const auto seed_path = tmp.path / "seed.bin";
    write_seed_file(seed_path, HashParams{12, 8, 60}.seed_bytes(), 7);

    SECTION("deterministic end to end") {
        const auto cfg = small_config(seed_path);
        BitVector bits_a, bits_b;
        const auto a = run_pipeline(cfg, &bits_a);
        const auto b = run_pipeline(cfg, &bits_b);
        CHECK(bits_a == bits_b);
        CHECK(a.entropy.h_min == b.entropy.h_min);
        CHECK(a.entropy.epsilon == b.entropy.epsilon);
        CHECK(a.bits_emitted == b.bits_emitted);
        CHECK(a.toeplitz_seed_fingerprint == b.toeplitz_seed_fingerprint);
        for (std::size_t i = 0; i < a.suite.results.size(); ++i) {
            if (a.suite.results[i].applicable)
                CHECK(a.suite.results[i].p_value == b.suite.results[i].p_value);
        }
    }

    SECTION("conservation: emitted bits = floor(samples/s)*s*m") {
        auto cfg = small_config(seed_path);
        cfg.trace.num_samples = 60'037;  // deliberately not a multiple of s
        BitVector bits;
        const auto report = run_pipeline(cfg, &bits);
        CHECK(report.bits_emitted == (60'037 / 60) * 60 * 8);
        CHECK(bits.size() == report.bits_emitted);
    }

    SECTION("suite passes on the reference operating point") {
        auto cfg = small_config(seed_path);
        cfg.trace.num_samples = 120'000;
        const auto report = run_pipeline(cfg);
        CHECK(report.suite.all_passed());
        CHECK_THAT(report.entropy.h_min, WithinAbs(8.312, 0.05));
        CHECK(report.entropy.m == 8);
    }

    SECTION("zero LO power refuses extraction") {
        auto cfg = small_config(seed_path);
        cfg.lo_power_w = 0.0;
        CHECK_THROWS_AS(run_pipeline(cfg), PipelineError);
    }

    SECTION("Z mode on zero-mean data still passes the suite") {
        auto cfg = small_config(seed_path);
        cfg.mode = QuadratureMode::z;
        cfg.hash = HashParams{24, 8, 60};
        write_seed_file(tmp.path / "seed_z.bin", cfg.hash.seed_bytes(), 11);
        cfg.seed_file = tmp.path / "seed_z.bin";
        cfg.trace.num_samples = 120'000;
        const auto report = run_pipeline(cfg);
        CHECK(report.suite.all_passed());
    }

    SECTION("short seed file is a config error") {
        auto cfg = small_config(seed_path);
        write_seed_file(tmp.path / "short.bin", 10, 3);
        cfg.seed_file = tmp.path / "short.bin";
        CHECK_THROWS_AS(run_pipeline(cfg), ConfigError);
    }

    SECTION("output files are written") {
        auto cfg = small_config(seed_path);
        cfg.out.bitstream = tmp.path / "out.bits";
        cfg.out.report = tmp.path / "report.json";
        cfg.out.samples_x = tmp.path / "x.qrng";
        BitVector bits;
        const auto report = run_pipeline(cfg, &bits);

        CHECK(fs::file_size(cfg.out.bitstream) == (bits.size() + 7) / 8);
        const auto decoded = decode_samples_file(cfg.out.samples_x);
        CHECK(decoded.codes.size() == cfg.trace.num_samples);

        std::ifstream in(cfg.out.report);
        nlohmann::json j;
        in >> j;
        CHECK(j["entropy"]["h_min_bits"].get<double>() == report.entropy.h_min);
        CHECK(j["entropy"]["m"].get<unsigned>() == report.entropy.m);
        CHECK(j["entropy"]["s"].get<std::size_t>() == report.entropy.s);
        CHECK(j["entropy"].contains("epsilon"));
        CHECK(j["bits_emitted"].get<std::size_t>() == report.bits_emitted);
        CHECK(j["seeds"]["toeplitz_fingerprint"] == report.toeplitz_seed_fingerprint);
    }
}

TEST_CASE("figure data") {
    SECTION("fig3-left: floor at zero path difference, monotone in |dL|") {
        std::ostringstream out;
        emit_figure_data(FigureId::fig3_left, out);
        const auto rows = parse_csv(out.str());
        REQUIRE(rows.size() == 102);
        CHECK(rows[0] == std::vector<std::string>{"delta_l_mm", "cmrr_db", "sigma_out_mv"});

        double min_sigma = 1e9, min_dl = 1e9;
        std::vector<std::pair<double, double>> pts;
        for (std::size_t i = 1; i < rows.size(); ++i) {
            const double dl = std::stod(rows[i][0]);
            const double sigma = std::stod(rows[i][2]);
            pts.emplace_back(dl, sigma);
            if (sigma < min_sigma) {
                min_sigma = sigma;
                min_dl = dl;
            }
        }
        CHECK(min_dl == 0.0);
        CHECK_THAT(min_sigma, WithinAbs(8.5, 1e-9));
        for (const auto& [dl, sigma] : pts)
            for (const auto& [dl2, sigma2] : pts)
                if (std::fabs(dl) < std::fabs(dl2) && dl * dl2 >= 0.0)
                    CHECK(sigma <= sigma2 + 1e-12);
    }

    SECTION("fig3-right: minimum exactly at kappa = 0.5") {
        std::ostringstream out;
        emit_figure_data(FigureId::fig3_right, out);
        const auto rows = parse_csv(out.str());
        REQUIRE(rows.size() == 102);
        double min_sigma = 1e9, min_kappa = -1.0;
        for (std::size_t i = 1; i < rows.size(); ++i) {
            const double kappa = std::stod(rows[i][0]);
            const double sigma = std::stod(rows[i][2]);
            if (sigma < min_sigma) {
                min_sigma = sigma;
                min_kappa = kappa;
            }
        }
        CHECK_THAT(min_kappa, WithinAbs(0.5, 1e-12));
        CHECK_THAT(min_sigma, WithinAbs(8.5, 1e-9));
    }

    SECTION("fig7: 10 dB SNC growth per decade below saturation") {
        std::ostringstream out;
        emit_figure_data(FigureId::fig7, out);
        const auto rows = parse_csv(out.str());
        REQUIRE(rows.size() == 74);
        // -10 dBm and 0 dBm rows are one power decade apart, both below p_sat.
        double snc_m10 = 0, snc_0 = 0;
        for (std::size_t i = 1; i < rows.size(); ++i) {
            if (rows[i][0] == "-10") snc_m10 = std::stod(rows[i][5]);
            if (rows[i][0] == "0") snc_0 = std::stod(rows[i][5]);
        }
        CHECK_THAT(snc_0 - snc_m10, WithinAbs(10.0, 0.1));
    }

    SECTION("fig8: raw-code and hashed-byte histograms") {
        std::ostringstream out;
        FigureConfig fc;
        fc.fig8_samples = 12'000;
        emit_figure_data(FigureId::fig8, out, fc);
        const auto rows = parse_csv(out.str());
        REQUIRE(rows.size() > 2);
        CHECK(rows[0] == std::vector<std::string>{"series", "value", "count"});
        std::size_t raw = 0, hashed = 0;
        std::uint64_t raw_total = 0;
        for (std::size_t i = 1; i < rows.size(); ++i) {
            if (rows[i][0] == "raw_code") {
                ++raw;
                raw_total += std::stoull(rows[i][2]);
            } else if (rows[i][0] == "hashed_byte") {
                ++hashed;
            } else {
                FAIL("unexpected series " << rows[i][0]);
            }
        }
        CHECK(raw > 100);
        CHECK(raw_total == 12'000);
        CHECK(hashed == 256);  // all byte values present in a healthy stream
    }

    CHECK_THROWS_AS(figure_id_from_string("fig9"), ConfigError);
}

TEST_CASE("throughput is recorded and clears the CI floor") {
    TempDir tmp;
    const auto seed_path = tmp.path / "seed.bin";
    write_seed_file(seed_path, HashParams{12, 8, 60}.seed_bytes(), 7);
    auto cfg = small_config(seed_path);
    cfg.trace.num_samples = 600'000;
    const auto report = run_pipeline(cfg);
    CHECK(report.throughput_samples_per_s > 1e5);
    CHECK(report.throughput_bits_per_s > 8e5);
}
