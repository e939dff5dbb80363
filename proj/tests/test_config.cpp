#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>

#include "rdstab/config.hpp"

using namespace rdstab;

namespace {

std::string write_temp(const std::string& name, const std::string& body) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path);
    out << body;
    return path.string();
}

const std::string kValidBody = R"([problem]
L = 6.283185307179586
c = 0.5
D = 1.0
y0 = parabola

[discretization]
grid_points = 400
num_modes = 6
N = 6
dt = 0.01
T = 10.0

[control]
poles = -0.5, -1

[outputs]
record_every = 5
)";

}  // namespace

TEST_CASE("shipped reference configuration") {
    const RunConfig cfg = load_config("configs/paper_sec3.cfg");
    CHECK(cfg.length == doctest::Approx(2.0 * std::numbers::pi).epsilon(1e-15));
    CHECK(cfg.c_is_constant);
    CHECK(cfg.c_value == 0.5);
    CHECK(cfg.delay == 1.0);
    CHECK(cfg.y0_kind == InitialProfile::parabola);
    CHECK(cfg.sim_modes == 6);
    REQUIRE(cfg.poles.size() == 2);
    CHECK(cfg.poles[0].real() == -0.5);
    CHECK(cfg.poles[1].real() == -1.0);
    CHECK(cfg.grid_points == 2000);
}

TEST_CASE("valid config round trip") {
    const RunConfig cfg = load_config(write_temp("rdstab_ok.cfg", kValidBody));
    CHECK(cfg.grid_points == 400);
    CHECK(cfg.record_every == 5);
    CHECK(cfg.plot);  // default
}

TEST_CASE("dt must divide D, reported with the named invariant") {
    std::string body = kValidBody;
    body.replace(body.find("dt = 0.01"), 9, "dt = 0.03");
    try {
        load_config(write_temp("rdstab_dt.cfg", body));
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("dt divides D") != std::string::npos);
    }
}

TEST_CASE("zero delay is a valid degenerate configuration") {
    std::string body = kValidBody;
    body.replace(body.find("D = 1.0"), 7, "D = 0.0");
    const RunConfig cfg = load_config(write_temp("rdstab_d0.cfg", body));
    CHECK(cfg.delay == 0.0);
}

TEST_CASE("unknown keys are rejected with their line") {
    std::string body = kValidBody;
    body += "wibble = 3\n";
    try {
        load_config(write_temp("rdstab_unknown.cfg", body));
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.line == 19);
        CHECK(std::string(e.what()).find("wibble") != std::string::npos);
    }
}

TEST_CASE("parse errors carry locations") {
    try {
        load_config(write_temp("rdstab_broken.cfg", "[problem]\nL 6.28\n"));
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.line == 2);
    }
    CHECK_THROWS_AS(load_config(write_temp("rdstab_dup.cfg", "[problem]\nL = 1\nL = 2\n")),
                    ConfigError);
    CHECK_THROWS_AS(load_config(write_temp("rdstab_sect.cfg", "[nope]\nx = 1\n")), ConfigError);
    CHECK_THROWS_AS(load_config("/does/not/exist.cfg"), ConfigError);
}

TEST_CASE("initial profile variants parse") {
    std::string body = kValidBody;
    body.replace(body.find("y0 = parabola"), 13, "y0 = zero    ");
    CHECK(load_config(write_temp("rdstab_y0zero.cfg", body)).y0_kind == InitialProfile::zero);
    body = kValidBody;
    body.replace(body.find("y0 = parabola"), 13, "y0 = csv:a.csv");
    const RunConfig cfg = load_config(write_temp("rdstab_y0csv.cfg", body));
    CHECK(cfg.y0_kind == InitialProfile::csv);
    CHECK(cfg.y0_csv_path == "a.csv");
    body = kValidBody;
    body.replace(body.find("y0 = parabola"), 13, "y0 = wiggle  ");
    CHECK_THROWS_AS(load_config(write_temp("rdstab_y0bad.cfg", body)), ConfigError);
}

TEST_CASE("pole list parsing") {
    const auto simple = parse_pole_list("-0.5, -1");
    REQUIRE(simple.size() == 2);
    CHECK(simple[0] == std::complex<double>(-0.5, 0.0));
    const auto pair = parse_pole_list("-1+0.5i, -1-0.5i");
    REQUIRE(pair.size() == 2);
    CHECK(pair[0] == std::complex<double>(-1.0, 0.5));
    CHECK(pair[1] == std::complex<double>(-1.0, -0.5));
    CHECK_THROWS(parse_pole_list(""));
    CHECK_THROWS(parse_pole_list("-1, oops"));

    std::string body = kValidBody;
    body.replace(body.find("poles = -0.5, -1"), 16, "poles = 0.5, -1.");
    CHECK_THROWS_AS(load_config(write_temp("rdstab_pole.cfg", body)), ConfigError);
}
