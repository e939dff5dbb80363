#pragma once

// Run configuration: flat key = value text with [problem], [discretization],
// [control] and [outputs] sections. Unknown keys are errors; every violated
// invariant is reported with the offending line.

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace rdstab {

struct ConfigError : std::runtime_error {
    int line = 0;
    ConfigError(int line_, const std::string& what_) : std::runtime_error(what_), line(line_) {}
};

enum class InitialProfile { zero, parabola, csv };

struct RunConfig {
    // [problem]
    double length = 0.0;
    double delay = 0.0;
    bool c_is_constant = true;
    double c_value = 0.0;
    std::string c_csv_path;
    InitialProfile y0_kind = InitialProfile::parabola;
    std::string y0_csv_path;

    // [discretization]
    int grid_points = 2000;
    int num_modes = 8;
    int sim_modes = 6;   // N
    double dt = 0.0;
    double t_final = 0.0;

    // [control]; empty list means -1 repeated n+1 times
    std::vector<std::complex<double>> poles;

    // [outputs]
    int record_every = 4;
    int profile_stride = 20;
    bool plot = true;

    void validate(int line = 0) const;  // named invariants, throws ConfigError
};

RunConfig load_config(const std::string& path);

// "-0.5,-1" or conjugate pairs "-1+0.5i,-1-0.5i".
std::vector<std::complex<double>> parse_pole_list(const std::string& text);

}  // namespace rdstab
