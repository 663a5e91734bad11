#include <catch2/catch_amalgamated.hpp>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ptbloch/config.hpp"
#include "ptbloch/io.hpp"

using namespace ptbloch;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("ptbloch_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int counter() {
        static int c = 0;
        return c++;
    }
    fs::path file(const std::string& name) const { return path / name; }
};

void write(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

std::string read(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args, const fs::path& dir) {
    const std::string cmd = std::string(PTBLOCH_CLI_PATH) + " " + args + " > " +
                            (dir / "stdout.txt").string() + " 2> " +
                            (dir / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

const char* free_config = R"({
  "potential": {"coefficients": {}},
  "window": {"re_min": 0.0, "re_max": 4.0, "im_min": -0.1, "im_max": 0.1},
  "grid": {"re_points": 401, "im_points": 1},
  "output_dir": "OUT"
})";

} // namespace

TEST_CASE("config parsing validates fields", "[cli]") {
    json base = json::parse(free_config);

    SECTION("valid config round-trips the potential") {
        base["potential"]["coefficients"]["1"] = 0.2;
        base["potential"]["coefficients"]["-1"] = -0.05;
        const ExperimentConfig cfg = parse_config(base);
        CHECK(cfg.potential.coefficient(1) == 0.2);
        CHECK(cfg.potential.coefficient(-1) == -0.05);
        CHECK(cfg.grid_re == 401);
    }
    SECTION("missing potential") {
        base.erase("potential");
        CHECK_THROWS_AS(parse_config(base), ConfigError);
    }
    SECTION("bad coefficient key is named in the diagnostic") {
        base["potential"]["coefficients"]["x7"] = 0.1;
        try {
            parse_config(base);
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("x7") != std::string::npos);
        }
    }
    SECTION("empty window") {
        base["window"]["re_max"] = -5.0;
        CHECK_THROWS_AS(parse_config(base), ConfigError);
    }
    SECTION("nonpositive tolerance") {
        base["tolerances"] = {{"integrator", 0.0}};
        CHECK_THROWS_AS(parse_config(base), ConfigError);
    }
    SECTION("resonance indices below 1") {
        base["resonances"] = {0};
        CHECK_THROWS_AS(parse_config(base), ConfigError);
    }
}

TEST_CASE("discriminant command writes the expected grid", "[cli]") {
    TempDir tmp;
    write(tmp.file("cfg.json"), free_config);
    const int rc = run_cli("discriminant --config " + tmp.file("cfg.json").string() +
                               " --out " + (tmp.path / "out").string(),
                           tmp.path);
    REQUIRE(rc == 0);
    const std::string csv = read(tmp.path / "out" / "discriminant.csv");
    CHECK(csv.rfind("re_E,im_E,re_delta,im_delta\n", 0) == 0);
    // the free operator has Delta(1) = 2; E = 1 is on the 401-point grid
    bool found = false;
    std::istringstream lines(csv);
    std::string line;
    while (std::getline(lines, line)) {
        if (line.rfind("1,", 0) == 0) {
            const auto c1 = line.find(',');
            const auto c2 = line.find(',', c1 + 1);
            const auto c3 = line.find(',', c2 + 1);
            const double delta = std::stod(line.substr(c2 + 1, c3 - c2 - 1));
            CHECK(delta == Catch::Approx(2.0).margin(1e-9));
            found = true;
        }
    }
    CHECK(found);
}

TEST_CASE("malformed config exits with code 2 and a diagnostic", "[cli]") {
    TempDir tmp;
    SECTION("broken JSON") {
        write(tmp.file("bad.json"), "{ not json");
        const int rc = run_cli("discriminant --config " + tmp.file("bad.json").string(),
                               tmp.path);
        CHECK(rc == 2);
        CHECK(read(tmp.path / "stderr.txt").find("parse error") != std::string::npos);
    }
    SECTION("bad key") {
        write(tmp.file("bad.json"),
              R"({"potential": {"coefficients": {"zz": 1.0}}})");
        const int rc = run_cli("discriminant --config " + tmp.file("bad.json").string(),
                               tmp.path);
        CHECK(rc == 2);
        CHECK(read(tmp.path / "stderr.txt").find("zz") != std::string::npos);
    }
    SECTION("missing config file") {
        const int rc = run_cli("discriminant --config " +
                                   tmp.file("absent.json").string(),
                               tmp.path);
        CHECK(rc == 2);
    }
}

TEST_CASE("resonance command covers the three cases", "[cli]") {
    TempDir tmp;
    json cfg = json::parse(free_config);
    cfg["window"] = {{"re_min", -0.5}, {"re_max", 1.2}, {"im_min", -0.5}, {"im_max", 0.5}};
    cfg["resonances"] = {1};

    auto run_for = [&](json coeffs) {
        cfg["potential"] = {{"coefficients", coeffs}};
        write(tmp.file("cfg.json"), cfg.dump());
        const int rc = run_cli("resonance --config " + tmp.file("cfg.json").string() +
                                   " --out " + (tmp.path / "out").string(),
                               tmp.path);
        REQUIRE(rc == 0);
        return json::parse(read(tmp.path / "out" / "resonance.json"));
    };

    SECTION("gap case") {
        const json out = run_for({{"1", 0.05}, {"-1", 0.05}});
        REQUIRE(out.at("reports").size() == 1);
        CHECK(out["reports"][0]["verdict"] == "gap");
        CHECK_FALSE(out["reports"][0]["inconclusive"].get<bool>());
        CHECK(out["reports"][0]["first_order_warning"] == false);
        CHECK(fs::exists(tmp.path / "out" / "resonance_1.svg"));
    }
    SECTION("double point case") {
        const json out = run_for({{"1", 0.1}});
        CHECK(out["reports"][0]["verdict"] == "double-point-at-first-order");
        CHECK(out["reports"][0]["inconclusive"].get<bool>());
    }
    SECTION("transversal band case") {
        const json out = run_for({{"1", 0.2}, {"-1", -0.05}});
        CHECK(out["reports"][0]["verdict"] == "transversal-band");
        const auto bp = out["reports"][0]["numeric_branch_points"];
        REQUIRE(bp.is_array());
        const double im0 = bp[0][1].get<double>();
        const double im1 = bp[1][1].get<double>();
        CHECK(im0 * im1 < 0.0);
    }
    SECTION("empty resonance list is a no-op success") {
        cfg["potential"] = {{"coefficients", json::object()}};
        cfg["resonances"] = json::array();
        write(tmp.file("cfg.json"), cfg.dump());
        const int rc = run_cli("resonance --config " + tmp.file("cfg.json").string() +
                                   " --out " + (tmp.path / "out2").string(),
                               tmp.path);
        CHECK(rc == 0);
        const json out = json::parse(read(tmp.path / "out2" / "resonance.json"));
        CHECK(out.at("reports").empty());
    }
}

TEST_CASE("divisor command emits report, trajectory and picture", "[cli]") {
    TempDir tmp;
    json cfg = json::parse(free_config);
    cfg["potential"] = {{"coefficients", {{"1", 0.2}, {"-1", -0.05}}}};
    cfg["resonances"] = {1};
    cfg["divisor_samples"] = 96;
    write(tmp.file("cfg.json"), cfg.dump());
    const int rc = run_cli("divisor --config " + tmp.file("cfg.json").string() +
                               " --out " + (tmp.path / "out").string(),
                           tmp.path);
    REQUIRE(rc == 0);
    const json out = json::parse(read(tmp.path / "out" / "divisor.json"));
    REQUIRE(out.at("reports").size() == 1);
    const auto& rep = out["reports"][0];
    CHECK(rep["n"] == 1);
    CHECK(rep["gamma0_imag_defect"].get<double>() < 1e-6);
    CHECK(rep["scaling_table"].size() == 3);
    CHECK(fs::exists(tmp.path / "out" / "divisor_1.csv"));
    CHECK(fs::exists(tmp.path / "out" / "divisor_1.svg"));
    // config echoed for reproducibility
    CHECK(out.contains("config"));
}

TEST_CASE("dubrovin command runs a genus-1 flow", "[cli]") {
    TempDir tmp;
    json cfg = json::parse(free_config);
    cfg["dubrovin"] = {{"branch_points", {{0.0, 0.0}, {1.0, 0.0}, {2.0, 0.0}}},
                       {"initial_gamma", {{1.5, 0.0}}},
                       {"initial_w", {{0.0, 0.6123724356957945}}},
                       {"x_span", {0.0, 20.0}},
                       {"samples", 200}};
    write(tmp.file("cfg.json"), cfg.dump());
    const int rc = run_cli("dubrovin --config " + tmp.file("cfg.json").string() +
                               " --out " + (tmp.path / "out").string(),
                           tmp.path);
    REQUIRE(rc == 0);
    const std::string csv = read(tmp.path / "out" / "dubrovin.csv");
    CHECK(csv.rfind("x,re_gamma_1,im_gamma_1,re_w_1,im_w_1\n", 0) == 0);
    CHECK(fs::exists(tmp.path / "out" / "dubrovin.svg"));
    // confinement visible in the emitted data
    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line);
    while (std::getline(lines, line)) {
        const double re_gamma = std::stod(line.substr(line.find(',') + 1));
        CHECK(re_gamma > 0.999999);
        CHECK(re_gamma < 2.000001);
    }
}

TEST_CASE("dubrovin collision config surfaces the error", "[cli]") {
    TempDir tmp;
    json cfg = json::parse(free_config);
    cfg["dubrovin"] = {{"branch_points",
                        {{0.0, 0.0}, {1.0, 0.0}, {2.0, 0.0}, {3.0, 0.0}, {4.0, 0.0}}},
                       {"initial_gamma", {{1.5, 0.0}, {1.5, 0.0}}},
                       {"x_span", {0.0, 1.0}}};
    write(tmp.file("cfg.json"), cfg.dump());
    const int rc = run_cli("dubrovin --config " + tmp.file("cfg.json").string() +
                               " --out " + (tmp.path / "out").string(),
                           tmp.path);
    CHECK(rc == 1);
    CHECK(read(tmp.path / "stderr.txt").find("colli") != std::string::npos);
}

TEST_CASE("dubrovin zero-length span echoes the initial state", "[cli]") {
    TempDir tmp;
    json cfg = json::parse(free_config);
    cfg["dubrovin"] = {{"branch_points", {{0.0, 0.0}, {1.0, 0.0}, {2.0, 0.0}}},
                       {"initial_gamma", {{1.5, 0.0}}},
                       {"sheets", {1}},
                       {"x_span", {0.0, 0.0}},
                       {"samples", 4}};
    write(tmp.file("cfg.json"), cfg.dump());
    const int rc = run_cli("dubrovin --config " + tmp.file("cfg.json").string() +
                               " --out " + (tmp.path / "out").string(),
                           tmp.path);
    REQUIRE(rc == 0);
    std::istringstream lines(read(tmp.path / "out" / "dubrovin.csv"));
    std::string line;
    std::getline(lines, line);
    int rows = 0;
    while (std::getline(lines, line)) {
        CHECK(line.rfind("0,1.5,", 0) == 0);
        ++rows;
    }
    CHECK(rows == 5);
}

TEST_CASE("locus command writes the four-column CSV", "[cli]") {
    TempDir tmp;
    json cfg = json::parse(free_config);
    cfg["potential"] = {{"coefficients", {{"1", 0.2}, {"-1", -0.05}}}};
    cfg["window"] = {{"re_min", -0.5}, {"re_max", 1.0}, {"im_min", -0.5}, {"im_max", 0.5}};
    cfg["locus_starts"] = {{0.2575, 0.05}};
    write(tmp.file("cfg.json"), cfg.dump());
    const int rc = run_cli("locus --config " + tmp.file("cfg.json").string() +
                               " --out " + (tmp.path / "out").string(),
                           tmp.path);
    REQUIRE(rc == 0);
    const std::string csv = read(tmp.path / "out" / "locus.csv");
    CHECK(csv.rfind("re_E,im_E,re_delta,theta\n", 0) == 0);
    CHECK(csv.size() > 200);
}

TEST_CASE("outputs are reproducible byte for byte", "[cli]") {
    TempDir tmp;
    json cfg = json::parse(free_config);
    cfg["potential"] = {{"coefficients", {{"1", 0.05}, {"-1", 0.05}}}};
    cfg["resonances"] = {1};
    cfg["window"] = {{"re_min", -0.5}, {"re_max", 1.2}, {"im_min", -0.5}, {"im_max", 0.5}};
    write(tmp.file("cfg.json"), cfg.dump());
    REQUIRE(run_cli("resonance --config " + tmp.file("cfg.json").string() +
                        " --out " + (tmp.path / "a").string() + " --jobs 2",
                    tmp.path) == 0);
    // re-run from the config embedded in the first output
    const json first = json::parse(read(tmp.path / "a" / "resonance.json"));
    write(tmp.file("echoed.json"), first.at("config").dump());
    REQUIRE(run_cli("resonance --config " + tmp.file("echoed.json").string() +
                        " --out " + (tmp.path / "b").string() + " --jobs 2",
                    tmp.path) == 0);
    CHECK(read(tmp.path / "a" / "resonance.json") ==
          read(tmp.path / "b" / "resonance.json"));
    CHECK(read(tmp.path / "a" / "resonance_1.svg") ==
          read(tmp.path / "b" / "resonance_1.svg"));
}

TEST_CASE("csv number formatting is round-trip exact", "[cli]") {
    const double v = 0.1 + 0.2;
    CHECK(std::stod(io::csv_number(v)) == v);
    CHECK(io::csv_number(2.0) == "2");
}
