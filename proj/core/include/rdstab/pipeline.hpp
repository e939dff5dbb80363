#pragma once

// Pipeline orchestration: eig -> reduce -> gain -> simulate -> verify, with
// every stage writing its artifacts under the output directory. The verify
// stage re-derives its numbers from the written files only, so the emitted
// artifacts are checked for self-consistency rather than trusted.

#include <ostream>
#include <string>
#include <vector>

#include "rdstab/config.hpp"
#include "rdstab/io.hpp"
#include "rdstab/simulator.hpp"

namespace rdstab {

enum class ExitCode : int {
    ok = 0,
    failure = 1,
    config = 2,
    eig = 3,
    gain = 4,
    sim = 5,
    verify = 6,
    io = 7,
};

struct StageError : std::runtime_error {
    ExitCode code;
    StageError(ExitCode code_, const std::string& what_) : std::runtime_error(what_), code(code_) {}
};

// Problem assembly from a run configuration.
OperatorSpec operator_spec_from(const RunConfig& cfg);
std::vector<double> initial_profile(const RunConfig& cfg, const Grid1D& grid);

// Stage runners; each writes its artifacts under out_dir (created on demand).
SpectralBasis stage_eig(const RunConfig& cfg, const std::string& out_dir);
ModelArtifact stage_reduce(const RunConfig& cfg, const SpectralBasis& basis, const std::string& out_dir);
GainSet stage_gain(const RunConfig& cfg, const ModelArtifact& artifact, const std::string& out_dir);
Trajectory stage_simulate(const RunConfig& cfg, const SpectralBasis& basis, const ModelArtifact& artifact,
                          const GainSet& gains, const std::string& out_dir);

struct VerifyLine {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct VerifyReport {
    std::vector<std::string> info;
    std::vector<VerifyLine> lines;
    bool all_pass() const;
    std::string text() const;
};

// Re-derives every reported number from the files in out_dir.
VerifyReport stage_verify(const RunConfig& cfg, const std::string& out_dir);

// Full pipeline; returns the process exit code and logs one line per stage.
int cmd_pipeline(const RunConfig& cfg, const std::string& out_dir, std::ostream& log);

// Independent pipelines over several configs, run concurrently with isolated
// output directories out_root/<config-stem>/.
int cmd_sweep(const std::vector<std::string>& config_paths, const std::string& out_root, int jobs,
              std::ostream& log);

}  // namespace rdstab
