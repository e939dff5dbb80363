#pragma once

// Artifact serialization: JSON dumps for the model/gain stages, CSV tables for
// the simulation outputs, and the plot scripts. All floating-point values are
// written with 17 significant digits so repeated runs are byte-identical.

#include <Eigen/Core>

#include <stdexcept>
#include <string>
#include <vector>

#include "rdstab/artstein.hpp"
#include "rdstab/gain.hpp"
#include "rdstab/reduction.hpp"
#include "rdstab/simulator.hpp"
#include "rdstab/spectral.hpp"

namespace rdstab {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string format_g17(double value);

struct ModelArtifact {
    ReducedModel model;
    KalmanResult kalman;
    double vandermonde = 0.0;
    CouplingNorms norms;
};

struct TrajectoryTable {
    std::vector<double> t, uD, alpha, vD, l2, h1;
    std::vector<std::vector<double>> w;   // N columns
    std::vector<std::vector<double>> Z1;  // n+1 columns
};

struct ProfileTable {
    std::vector<double> t, x, y;  // long form rows
};

void write_basis_json(const std::string& path, const SpectralBasis& basis);
SpectralBasis read_basis_json(const std::string& path);

void write_model_json(const std::string& path, const ModelArtifact& artifact);
ModelArtifact read_model_json(const std::string& path);

void write_gains_json(const std::string& path, const GainSet& gains);
GainSet read_gains_json(const std::string& path);

void write_trajectory_csv(const std::string& path, const Trajectory& traj);
TrajectoryTable read_trajectory_csv(const std::string& path);

void write_profile_csv(const std::string& path, const Trajectory& traj, int stride);
ProfileTable read_profile_csv(const std::string& path);

void write_history_csv(const std::string& path, const ControlHistory& history);
ControlHistory read_history_csv(const std::string& path);

void write_kernel_csv(const std::string& path, const KernelTable& kernel);

// Two-column (x, value) tables, e.g. user-provided c(x) or y0 profiles.
void read_xy_csv(const std::string& path, std::vector<double>& x, std::vector<double>& y);

void write_plot_scripts(const std::string& out_dir);

}  // namespace rdstab
