// rdstab: stabilize the 1D reaction-diffusion equation with a delayed
// Dirichlet boundary input. Stages: eig -> reduce -> gain -> simulate ->
// verify, individually or as a pipeline, plus a parallel config sweep.
//
// Exit codes: 0 ok, 2 config, 3 eigen/reduction, 4 gain, 5 simulation,
// 6 verification, 7 file I/O.

#include <CLI11.hpp>

#include <complex>
#include <iostream>
#include <string>
#include <vector>

#include "rdstab/pipeline.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir = "out";
    std::string poles_text;
    double dt_override = 0.0;
    int modes_override = 0;
    bool seedless = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool config_required = true) {
    auto* c = cmd->add_option("-c,--config", opts.config_path, "run configuration file");
    if (config_required) c->required();
    cmd->add_option("-o,--out", opts.out_dir, "output directory (default: out)");
    cmd->add_option("--poles", opts.poles_text,
                    "closed-loop poles, comma separated; complex entries as a+bi/a-bi pairs");
    cmd->add_option("--dt", opts.dt_override, "override the time step (must divide D)");
    cmd->add_option("--modes", opts.modes_override, "override the number of simulated modes N");
    cmd->add_flag("--seedless", opts.seedless,
                  "assert that no randomness is involved anywhere (it is not; the flag documents this)");
}

rdstab::RunConfig load_with_overrides(const CommonOpts& opts) {
    rdstab::RunConfig cfg = rdstab::load_config(opts.config_path);
    if (!opts.poles_text.empty()) cfg.poles = rdstab::parse_pole_list(opts.poles_text);
    if (opts.dt_override > 0.0) cfg.dt = opts.dt_override;
    if (opts.modes_override > 0) cfg.sim_modes = opts.modes_override;
    cfg.validate(0);
    if (opts.seedless) std::cout << "seedless: no random number generator is used in any stage\n";
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Boundary stabilization of the 1D reaction-diffusion equation with delayed Dirichlet control"};
    app.require_subcommand(1);

    CommonOpts eig_opts, reduce_opts, gain_opts, sim_opts, verify_opts, pipeline_opts;
    auto* cmd_eig = app.add_subcommand("eig", "solve the Dirichlet eigenproblem and write basis.json");
    add_common(cmd_eig, eig_opts);
    auto* cmd_reduce = app.add_subcommand("reduce", "assemble the reduced delay model and write model.json");
    add_common(cmd_reduce, reduce_opts);
    auto* cmd_gain = app.add_subcommand("gain", "design the predictor gain and write gains.json");
    add_common(cmd_gain, gain_opts);
    auto* cmd_simulate = app.add_subcommand("simulate", "run the closed loop and write the CSV artifacts");
    add_common(cmd_simulate, sim_opts);
    auto* cmd_verify = app.add_subcommand("verify", "re-derive the report from the written artifacts");
    add_common(cmd_verify, verify_opts);
    auto* cmd_pipe = app.add_subcommand("pipeline", "run every stage and the verification");
    add_common(cmd_pipe, pipeline_opts);

    std::vector<std::string> sweep_configs;
    std::string sweep_out = "out";
    int sweep_jobs = 4;
    bool sweep_seedless = false;
    auto* cmd_sw = app.add_subcommand("sweep", "run independent pipelines for several configs in parallel");
    cmd_sw->add_option("configs", sweep_configs, "configuration files")->required()->expected(-1);
    cmd_sw->add_option("-o,--out", sweep_out, "root output directory");
    cmd_sw->add_option("-j,--jobs", sweep_jobs, "parallel pipelines");
    cmd_sw->add_flag("--seedless", sweep_seedless, "assert that no randomness is involved anywhere");

    CLI11_PARSE(app, argc, argv);

    using rdstab::ExitCode;
    try {
        if (cmd_sw->parsed()) {
            if (sweep_seedless) std::cout << "seedless: no random number generator is used in any stage\n";
            return rdstab::cmd_sweep(sweep_configs, sweep_out, sweep_jobs, std::cout);
        }
        if (cmd_pipe->parsed())
            return rdstab::cmd_pipeline(load_with_overrides(pipeline_opts), pipeline_opts.out_dir, std::cout);

        if (cmd_eig->parsed()) {
            const auto cfg = load_with_overrides(eig_opts);
            const auto basis = rdstab::stage_eig(cfg, eig_opts.out_dir);
            std::cout << "eigenvalues:";
            for (const auto& m : basis.modes) std::cout << ' ' << rdstab::format_g17(m.lambda);
            std::cout << "\nwrote " << eig_opts.out_dir << "/basis.json\n";
            return 0;
        }
        if (cmd_reduce->parsed()) {
            const auto cfg = load_with_overrides(reduce_opts);
            const auto basis = rdstab::stage_eig(cfg, reduce_opts.out_dir);
            const auto artifact = rdstab::stage_reduce(cfg, basis, reduce_opts.out_dir);
            std::cout << "n = " << artifact.model.n << ", kalman det = "
                      << rdstab::format_g17(artifact.kalman.det)
                      << (artifact.kalman.rank_ok ? " (controllable)" : " (NOT controllable)") << "\n"
                      << "wrote " << reduce_opts.out_dir << "/model.json\n";
            return 0;
        }
        if (cmd_gain->parsed()) {
            const auto cfg = load_with_overrides(gain_opts);
            const auto basis = rdstab::stage_eig(cfg, gain_opts.out_dir);
            const auto artifact = rdstab::stage_reduce(cfg, basis, gain_opts.out_dir);
            const auto gains = rdstab::stage_gain(cfg, artifact, gain_opts.out_dir);
            std::cout << "K1 =";
            for (int j = 0; j < gains.K1.size(); ++j) std::cout << ' ' << rdstab::format_g17(gains.K1(j));
            std::cout << "\nM(D) = " << rdstab::format_g17(gains.weight_M) << "\nwrote " << gain_opts.out_dir
                      << "/gains.json\n";
            return 0;
        }
        if (cmd_simulate->parsed()) {
            const auto cfg = load_with_overrides(sim_opts);
            const auto basis = rdstab::stage_eig(cfg, sim_opts.out_dir);
            const auto artifact = rdstab::stage_reduce(cfg, basis, sim_opts.out_dir);
            const auto gains = rdstab::stage_gain(cfg, artifact, sim_opts.out_dir);
            const auto traj = rdstab::stage_simulate(cfg, basis, artifact, gains, sim_opts.out_dir);
            std::cout << "simulated " << traj.times.size() << " records to t = "
                      << rdstab::format_g17(traj.times.back()) << "\nwrote " << sim_opts.out_dir
                      << "/trajectory.csv\n";
            return 0;
        }
        if (cmd_verify->parsed()) {
            const auto cfg = load_with_overrides(verify_opts);
            const auto report = rdstab::stage_verify(cfg, verify_opts.out_dir);
            std::cout << report.text();
            return report.all_pass() ? static_cast<int>(ExitCode::ok) : static_cast<int>(ExitCode::verify);
        }
    } catch (const rdstab::ConfigError& e) {
        std::cerr << "config error (line " << e.line << "): " << e.what() << "\n";
        return static_cast<int>(ExitCode::config);
    } catch (const rdstab::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::io);
    } catch (const rdstab::StageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(e.code);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::failure);
    }
    return static_cast<int>(ExitCode::failure);
}
