#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include <json.hpp>

#include "qrng/sample_file.hpp"
#include "qrng/toeplitz.hpp"

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("qrng_cli_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

int run(const std::string& args) {
    const std::string cmd = std::string(QRNG_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

}  // namespace

TEST_CASE("cli help and bad usage") {
    CHECK(run("--help") == 0);
    CHECK(run("bogus-subcommand") == 1);
    CHECK(run("figures --figure fig9") == 1);  // unknown figure id: config error
}

TEST_CASE("cli pipeline round trip") {
    TempDir tmp;
    const auto x_file = (tmp.path / "x.qrng").string();
    const auto p_file = (tmp.path / "p.qrng").string();
    const auto seed_file = (tmp.path / "seed.bin").string();
    const auto bits_file = (tmp.path / "out.bits").string();

    {
        std::mt19937_64 eng(5);
        std::ofstream seed(seed_file, std::ios::binary);
        for (std::size_t i = 0; i < qrng::HashParams{12, 8, 60}.seed_bytes(); ++i)
            seed.put(char(eng() & 0xff));
    }

    REQUIRE(run("simulate --samples 60000 --seed 9 --out-x " + x_file + " --out-p " + p_file) ==
            0);
    const auto decoded = qrng::decode_samples_file(x_file);
    CHECK(decoded.codes.size() == 60000);
    CHECK(decoded.channel == 'X');

    REQUIRE(run("extract --in-x " + x_file + " --out " + bits_file + " --seed-file " +
                seed_file) == 0);
    CHECK(fs::file_size(bits_file) == 60000 / 60 * 60 * 8 / 8);

    // A healthy extracted stream passes; the all-zero file fails with code 3.
    CHECK(run("test --in " + bits_file) == 0);

    const auto zeros = (tmp.path / "zeros.bin").string();
    {
        std::ofstream z(zeros, std::ios::binary);
        for (int i = 0; i < 4096; ++i) z.put('\0');
    }
    CHECK(run("test --in " + zeros) == 3);

    SECTION("ascii bitstream output is consumable by test --ascii-in") {
        const auto ascii_file = (tmp.path / "out.txt").string();
        REQUIRE(run("extract --in-x " + x_file + " --out " + ascii_file + " --ascii" +
                    " --seed-file " + seed_file) == 0);
        CHECK(fs::file_size(ascii_file) == 60000 / 60 * 60 * 8);
        CHECK(run("test --in " + ascii_file + " --ascii-in") == 0);
    }

    SECTION("z-mode extraction from both channels") {
        const auto z_bits = (tmp.path / "z.bits").string();
        const auto seed24 = (tmp.path / "seed24.bin").string();
        std::mt19937_64 eng(6);
        std::ofstream seed(seed24, std::ios::binary);
        for (std::size_t i = 0; i < qrng::HashParams{24, 8, 60}.seed_bytes(); ++i)
            seed.put(char(eng() & 0xff));
        seed.close();
        REQUIRE(run("--mode Z extract --in-x " + x_file + " --in-p " + p_file +
                    " --hash-n 24 --out " + z_bits + " --seed-file " + seed24) == 0);
        CHECK(run("test --in " + z_bits) == 0);
    }
}

TEST_CASE("cli figures and report") {
    TempDir tmp;
    const auto csv = (tmp.path / "fig7.csv").string();
    REQUIRE(run("figures --figure fig7 --out " + csv) == 0);
    std::ifstream in(csv);
    std::string header;
    std::getline(in, header);
    CHECK(header.find("snc_db") != std::string::npos);

    const auto report_json = (tmp.path / "report.json").string();
    REQUIRE(run("--samples 60000 --seed 4 report --out-report " + report_json) == 0);
    std::ifstream rin(report_json);
    nlohmann::json j;
    rin >> j;
    CHECK(j["entropy"]["m"].get<int>() == 8);
    CHECK(j["suite"]["all_passed"].get<bool>());
}

TEST_CASE("cli config file with overrides") {
    TempDir tmp;
    const auto cfg_path = (tmp.path / "cfg.json").string();
    {
        nlohmann::json j;
        j["lo_power_dbm"] = 20.0;
        j["trace"] = {{"num_samples", 30000}, {"rng_seed", 77}};
        std::ofstream out(cfg_path);
        out << j.dump();
    }
    const auto x_file = (tmp.path / "x.qrng").string();
    REQUIRE(run("--config " + cfg_path + " simulate --out-x " + x_file) == 0);
    CHECK(qrng::decode_samples_file(x_file).codes.size() == 30000);

    // Flag overrides beat the file.
    REQUIRE(run("--config " + cfg_path + " --samples 500 simulate --out-x " + x_file) == 0);
    CHECK(qrng::decode_samples_file(x_file).codes.size() == 500);

    // Invalid config surfaces as exit code 1.
    const auto bad_cfg = (tmp.path / "bad.json").string();
    {
        std::ofstream out(bad_cfg);
        out << "{\"hash\": {\"n\": 3, \"m\": 8, \"s\": 60}}";
    }
    CHECK(run("--config " + bad_cfg + " report") == 1);
}
