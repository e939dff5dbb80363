#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "rdstab/pipeline.hpp"

using namespace rdstab;

namespace {

namespace fs = std::filesystem;

std::string temp_dir(const std::string& tag) {
    const auto path = fs::temp_directory_path() / ("rdstab_pipeline_" + tag);
    fs::remove_all(path);
    return path.string();
}

// Desk-size variant of the reference problem, quick enough for unit tests.
RunConfig small_config() {
    RunConfig cfg;
    cfg.length = 6.283185307179586;
    cfg.delay = 1.0;
    cfg.c_is_constant = true;
    cfg.c_value = 0.5;
    cfg.y0_kind = InitialProfile::parabola;
    cfg.grid_points = 400;
    cfg.num_modes = 6;
    cfg.sim_modes = 6;
    cfg.dt = 0.02;
    cfg.t_final = 12.0;
    cfg.poles = {{-0.5, 0.0}, {-1.0, 0.0}};
    cfg.record_every = 5;
    cfg.profile_stride = 10;
    cfg.plot = true;
    cfg.validate();
    return cfg;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("pipeline produces self-consistent artifacts and verifies") {
    const RunConfig cfg = small_config();
    const std::string out = temp_dir("roundtrip");
    std::ostringstream log;
    const int rc = cmd_pipeline(cfg, out, log);
    INFO(log.str());
    CHECK(rc == 0);
    for (const char* name : {"basis.json", "model.json", "gains.json", "trajectory.csv", "profile.csv",
                             "history.csv", "kernel.csv", "report.txt", "plot_solution.py",
                             "plot_control.py"})
        CHECK(fs::exists(fs::path(out) / name));

    const VerifyReport report = stage_verify(cfg, out);
    CHECK(report.all_pass());
}

TEST_CASE("identical configs give byte-identical artifacts") {
    const RunConfig cfg = small_config();
    const std::string out1 = temp_dir("det1"), out2 = temp_dir("det2");
    std::ostringstream log;
    REQUIRE(cmd_pipeline(cfg, out1, log) == 0);
    REQUIRE(cmd_pipeline(cfg, out2, log) == 0);
    for (const char* name : {"trajectory.csv", "profile.csv", "history.csv", "kernel.csv", "basis.json",
                             "model.json", "gains.json"})
        CHECK(slurp(out1 + "/" + std::string(name)) == slurp(out2 + "/" + std::string(name)));
}

TEST_CASE("stable plant runs through the n = 0 path") {
    RunConfig cfg = small_config();
    cfg.c_value = -1.0;
    cfg.poles = {{-1.0, 0.0}};
    const std::string out = temp_dir("stable");
    std::ostringstream log;
    CHECK(cmd_pipeline(cfg, out, log) == 0);
    CHECK(log.str().find("n = 0") != std::string::npos);
}

TEST_CASE("zero delay degenerates to undelayed feedback") {
    RunConfig cfg = small_config();
    cfg.delay = 0.0;
    cfg.t_final = 8.0;
    const std::string out = temp_dir("d0");
    std::ostringstream log;
    CHECK(cmd_pipeline(cfg, out, log) == 0);
    // Z1 = X1: the trajectory file stores both, compare a couple of rows.
    const TrajectoryTable traj = read_trajectory_csv(out + "/trajectory.csv");
    for (std::size_t r = 0; r < traj.t.size(); r += 17) {
        CHECK(traj.Z1[r][0] == traj.uD[r]);
        CHECK(traj.Z1[r][1] == traj.w[r][0]);
    }
}

TEST_CASE("stage errors map to their exit codes") {
    SUBCASE("wrong pole count fails the gain stage") {
        RunConfig cfg = small_config();
        cfg.poles = {{-1.0, 0.0}};  // n = 1 needs two poles
        std::ostringstream log;
        CHECK(cmd_pipeline(cfg, temp_dir("badpoles"), log) == static_cast<int>(ExitCode::gain));
    }
    SUBCASE("unwritable output directory is an I/O failure") {
        const RunConfig cfg = small_config();
        std::ostringstream log;
        CHECK(cmd_pipeline(cfg, "/proc/rdstab_cannot_write/out", log) == static_cast<int>(ExitCode::io));
    }
    SUBCASE("simulation rejects N below n + 1") {
        RunConfig cfg = small_config();
        cfg.sim_modes = 1;
        cfg.num_modes = 6;
        std::ostringstream log;
        CHECK(cmd_pipeline(cfg, temp_dir("badn"), log) == static_cast<int>(ExitCode::sim));
    }
}

TEST_CASE("verify rejects tampered artifacts") {
    const RunConfig cfg = small_config();
    const std::string out = temp_dir("tamper");
    std::ostringstream log;
    REQUIRE(cmd_pipeline(cfg, out, log) == 0);

    // Flip one early alpha sample to a nonzero value: the quiet-start and
    // feedback-identity re-derivations must catch it.
    const std::string path = out + "/trajectory.csv";
    std::string body = slurp(path);
    const auto header_end = body.find('\n');
    const auto first_row_end = body.find('\n', header_end + 1);
    std::string row = body.substr(header_end + 1, first_row_end - header_end - 1);
    const auto c1 = row.find(','), c2 = row.find(',', row.find(',') + 1), c3 = row.find(',', c2 + 1);
    row.replace(c2 + 1, c3 - c2 - 1, "1e-3");
    body.replace(header_end + 1, first_row_end - header_end - 1, row);
    {
        std::ofstream outf(path, std::ios::binary | std::ios::trunc);
        outf << body;
    }
    (void)c1;
    const VerifyReport report = stage_verify(cfg, out);
    CHECK_FALSE(report.all_pass());
}

TEST_CASE("csv inputs for the coefficient and the initial profile") {
    const auto c_path = fs::temp_directory_path() / "rdstab_c.csv";
    const auto y_path = fs::temp_directory_path() / "rdstab_y0.csv";
    {
        std::ofstream c(c_path), y(y_path);
        c << "x,c\n";
        y << "x,y\n";
        const double L = 6.283185307179586;
        for (int i = 0; i <= 64; ++i) {
            const double x = L * i / 64.0;
            c << x << "," << 0.5 << "\n";
            y << x << "," << x * (L - x) << "\n";
        }
    }
    RunConfig cfg = small_config();
    cfg.c_is_constant = false;
    cfg.c_csv_path = c_path.string();
    cfg.y0_kind = InitialProfile::csv;
    cfg.y0_csv_path = y_path.string();
    const std::string out = temp_dir("csvin");
    std::ostringstream log;
    CHECK(cmd_pipeline(cfg, out, log) == 0);

    // Sampled c == 0.5 reproduces the constant-coefficient eigenvalues.
    const SpectralBasis basis = read_basis_json(out + "/basis.json");
    CHECK(std::abs(basis.modes[0].lambda - 0.25) < 1e-3);

    cfg.c_csv_path = "/missing/file.csv";
    CHECK(cmd_pipeline(cfg, temp_dir("csvmiss"), log) == static_cast<int>(ExitCode::io));
}

TEST_CASE("sweep runs independent configs into isolated directories") {
    const std::string root = temp_dir("sweep");
    const RunConfig base = small_config();
    // two configs written to disk
    auto write_cfg = [&](const std::string& name, double c_value) {
        const auto path = fs::temp_directory_path() / name;
        std::ofstream out(path);
        out << "[problem]\nL = 6.283185307179586\nc = " << c_value << "\nD = 1.0\ny0 = parabola\n"
            << "[discretization]\ngrid_points = 400\nnum_modes = 6\nN = 6\ndt = 0.02\nT = 8.0\n"
            << "[control]\npoles = " << (c_value > 0 ? "-0.5, -1" : "-1") << "\n"
            << "[outputs]\nrecord_every = 10\n";
        return path.string();
    };
    const std::string cfg_a = write_cfg("rdstab_sweep_a.cfg", 0.5);
    const std::string cfg_b = write_cfg("rdstab_sweep_b.cfg", -1.0);
    std::ostringstream log;
    const int rc = cmd_sweep({cfg_a, cfg_b}, root, 2, log);
    INFO(log.str());
    CHECK(rc == 0);
    CHECK(fs::exists(fs::path(root) / "rdstab_sweep_a" / "report.txt"));
    CHECK(fs::exists(fs::path(root) / "rdstab_sweep_b" / "report.txt"));
    (void)base;

    // A broken config inside the batch surfaces as the sweep exit code.
    std::ostringstream log2;
    CHECK(cmd_sweep({cfg_a, "/missing.cfg"}, temp_dir("sweep_bad"), 2, log2) ==
          static_cast<int>(ExitCode::config));
}
