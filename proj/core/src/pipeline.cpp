#include "rdstab/pipeline.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "rdstab/artstein.hpp"
#include "rdstab/gain.hpp"

namespace rdstab {

namespace fs = std::filesystem;

namespace {

void ensure_dir(const std::string& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + out_dir + ": " + ec.message());
    // Probe writability early so permission problems surface as I/O errors.
    const std::string probe = out_dir + "/.write_probe";
    {
        std::ofstream f(probe);
        if (!f) throw IoError("output directory is not writable: " + out_dir);
    }
    fs::remove(probe, ec);
}

std::string fmt(double v) { return format_g17(v); }

template <typename Fn>
auto run_stage(ExitCode code, Fn&& fn) {
    try {
        return fn();
    } catch (const IoError&) {
        throw;
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(code, e.what());
    }
}

}  // namespace

OperatorSpec operator_spec_from(const RunConfig& cfg) {
    OperatorSpec spec;
    spec.length = cfg.length;
    if (cfg.c_is_constant) {
        spec.c_samples.assign(static_cast<std::size_t>(cfg.grid_points) + 1, cfg.c_value);
    } else {
        std::vector<double> x, y;
        read_xy_csv(cfg.c_csv_path, x, y);
        spec.c_samples = resample_scattered(x, y, Grid1D{cfg.length, cfg.grid_points});
    }
    return spec;
}

std::vector<double> initial_profile(const RunConfig& cfg, const Grid1D& grid) {
    std::vector<double> y0(static_cast<std::size_t>(grid.points()), 0.0);
    switch (cfg.y0_kind) {
        case InitialProfile::zero:
            break;
        case InitialProfile::parabola:
            for (int i = 0; i < grid.points(); ++i) {
                const double x = grid.x(i);
                y0[static_cast<std::size_t>(i)] = x * (grid.length - x);
            }
            break;
        case InitialProfile::csv: {
            std::vector<double> x, y;
            read_xy_csv(cfg.y0_csv_path, x, y);
            y0 = resample_scattered(x, y, grid);
            break;
        }
    }
    return y0;
}

SpectralBasis stage_eig(const RunConfig& cfg, const std::string& out_dir) {
    ensure_dir(out_dir);
    return run_stage(ExitCode::eig, [&] {
        const OperatorSpec spec = operator_spec_from(cfg);
        SpectralBasis basis = solve_eigen(spec, cfg.num_modes, cfg.grid_points);
        write_basis_json(out_dir + "/basis.json", basis);
        return basis;
    });
}

ModelArtifact stage_reduce(const RunConfig& cfg, const SpectralBasis& basis, const std::string& out_dir) {
    return run_stage(ExitCode::eig, [&] {
        ModelArtifact artifact;
        artifact.model = build_reduced(basis, cfg.delay);
        artifact.kalman = kalman_check(artifact.model);
        artifact.vandermonde = vandermonde_det(artifact.model);
        artifact.norms = coupling_norms(basis.spec, basis.grid);
        write_model_json(out_dir + "/model.json", artifact);
        return artifact;
    });
}

GainSet stage_gain(const RunConfig& cfg, const ModelArtifact& artifact, const std::string& out_dir) {
    return run_stage(ExitCode::gain, [&] {
        std::vector<std::complex<double>> poles = cfg.poles;
        if (!poles.empty() && static_cast<int>(poles.size()) != artifact.model.n + 1)
            throw std::invalid_argument("pole count must equal n+1 = " + std::to_string(artifact.model.n + 1));
        if (!artifact.kalman.rank_ok)
            throw std::runtime_error("reduced pair fails the controllability test");
        GainSet gains = design_gains(artifact.model, poles, artifact.norms.a_norm, artifact.norms.b_norm);
        write_gains_json(out_dir + "/gains.json", gains);
        return gains;
    });
}

Trajectory stage_simulate(const RunConfig& cfg, const SpectralBasis& basis, const ModelArtifact& artifact,
                          const GainSet& gains, const std::string& out_dir) {
    return run_stage(ExitCode::sim, [&] {
        if (cfg.sim_modes < artifact.model.n + 1)
            throw std::invalid_argument("N must be at least n+1 = " + std::to_string(artifact.model.n + 1));
        SimConfig sim;
        sim.modes = cfg.sim_modes;
        sim.dt = cfg.dt;
        sim.t_final = cfg.t_final;
        sim.y0 = initial_profile(cfg, basis.grid);
        sim.record_every = cfg.record_every;
        Trajectory traj = run(sim, gains, artifact.model, basis);

        write_trajectory_csv(out_dir + "/trajectory.csv", traj);
        write_profile_csv(out_dir + "/profile.csv", traj, cfg.profile_stride);
        ControlHistory history{traj.dt, 0.0, traj.alpha_full};
        write_history_csv(out_dir + "/history.csv", history);
        if (artifact.model.delay > 0.0)
            write_kernel_csv(out_dir + "/kernel.csv",
                             kernel_table(gains, artifact.model, cfg.dt, artifact.model.delay));
        if (cfg.plot) write_plot_scripts(out_dir);
        return traj;
    });
}

bool VerifyReport::all_pass() const {
    return std::all_of(lines.begin(), lines.end(), [](const VerifyLine& l) { return l.pass; });
}

std::string VerifyReport::text() const {
    std::ostringstream out;
    for (const std::string& s : info) out << s << "\n";
    for (const VerifyLine& l : lines) out << (l.pass ? "PASS " : "FAIL ") << l.name << ": " << l.detail << "\n";
    out << (all_pass() ? "VERIFY OK" : "VERIFY FAILED") << "\n";
    return out.str();
}

VerifyReport stage_verify(const RunConfig& cfg, const std::string& out_dir) {
    return run_stage(ExitCode::verify, [&] {
        VerifyReport report;
        auto check = [&report](const std::string& name, bool pass, const std::string& detail) {
            report.lines.push_back(VerifyLine{name, pass, detail});
        };

        const SpectralBasis basis = read_basis_json(out_dir + "/basis.json");
        const ModelArtifact artifact = read_model_json(out_dir + "/model.json");
        const GainSet gains = read_gains_json(out_dir + "/gains.json");
        const TrajectoryTable traj = read_trajectory_csv(out_dir + "/trajectory.csv");
        const ProfileTable profile = read_profile_csv(out_dir + "/profile.csv");
        const ControlHistory history = read_history_csv(out_dir + "/history.csv");

        const ReducedModel& model = artifact.model;
        const double D = model.delay;
        const int n = model.n;

        {
            std::ostringstream info;
            info << "eigenvalues:";
            for (const EigenMode& m : basis.modes) info << ' ' << fmt(m.lambda);
            report.info.push_back(info.str());
            report.info.push_back("n = " + std::to_string(n) + ", margin eta = " + fmt(model.margin));
            report.info.push_back("kalman det = " + fmt(artifact.kalman.det) +
                                  ", vandermonde = " + fmt(artifact.vandermonde));
            std::ostringstream poles;
            poles << "poles:";
            for (const auto& p : gains.poles) {
                poles << ' ' << fmt(p.real());
                if (p.imag() != 0.0) poles << (p.imag() > 0 ? "+" : "") << fmt(p.imag()) << "i";
            }
            report.info.push_back(poles.str());
            report.info.push_back("lyapunov residual = " + fmt(gains.lyapunov_residual) +
                                  ", lambda_min(P) = " + fmt(gains.p_min_eigenvalue));
            report.info.push_back("M(D) = " + fmt(gains.weight_M));
        }

        // Basis: orthonormality and ordering.
        {
            double worst = 0.0;
            for (std::size_t i = 0; i < basis.modes.size(); ++i)
                for (std::size_t j = i; j < basis.modes.size(); ++j) {
                    const double g = inner_l2(basis.grid, basis.modes[i].samples, basis.modes[j].samples);
                    worst = std::max(worst, std::abs(g - (i == j ? 1.0 : 0.0)));
                }
            check("basis_orthonormal", worst <= 1e-6, "max |Gram - I| = " + fmt(worst) + " (tol 1e-6)");

            bool ordered = true;
            for (std::size_t j = 1; j < basis.modes.size(); ++j)
                ordered = ordered && basis.modes[j].lambda < basis.modes[j - 1].lambda;
            check("eigenvalues_strictly_decreasing", ordered, "strict ordering of the spectrum");
        }

        // Boundary-flux identity a_j + lambda_j b_j = -e_j'(L).
        {
            const double h = basis.grid.h();
            double worst = 0.0, allowed = 0.0;
            for (const EigenMode& m : basis.modes) {
                const double lhs = m.a_coef + m.lambda * m.b_coef;
                worst = std::max(worst, std::abs(lhs + m.flux_right));
                allowed = std::max(allowed, 10.0 * h * h * std::max(1.0, std::abs(m.lambda)));
            }
            check("flux_identity", worst <= allowed,
                  "max |a+lambda b + e'(L)| = " + fmt(worst) + " (tol " + fmt(allowed) + ")");
        }

        // Reduced-model structure and the two determinant routes.
        {
            bool structure = model.A1.rows() == n + 1 && model.B1.size() == n + 1 && model.B1(0) == 1.0;
            for (int j = 0; j <= n && structure; ++j) structure = model.A1(0, j) == 0.0;
            for (int j = 1; j <= n && structure; ++j) {
                structure = model.A1(j, 0) == basis.modes[static_cast<std::size_t>(j) - 1].a_coef &&
                            model.A1(j, j) == basis.modes[static_cast<std::size_t>(j) - 1].lambda &&
                            model.B1(j) == basis.modes[static_cast<std::size_t>(j) - 1].b_coef;
                for (int k = 1; k <= n && structure; ++k)
                    if (k != j) structure = model.A1(j, k) == 0.0;
            }
            check("model_structure", structure, "A1/B1 layout matches the modal data");

            const double det = controllability_matrix(model.A1, model.B1).determinant();
            const double rel = std::abs(det - artifact.vandermonde) / std::max(1e-300, std::abs(det));
            check("kalman_determinant", rel <= 1e-8,
                  "closed form vs direct determinant, rel err = " + fmt(rel) + " (tol 1e-8)");
        }

        // Gains: closed loop, spectrum, Lyapunov certificate, weight.
        {
            const Eigen::MatrixXd Acl = model.A1 + mat_exp(model.A1, -D) * model.B1 * gains.K1;
            const double acl_err = (Acl - gains.Acl).norm() / std::max(1.0, Acl.norm());
            check("closed_loop_matrix", acl_err <= 1e-12, "recomputed Acl rel err = " + fmt(acl_err));

            const std::vector<double> want = real_poly_from_roots(gains.poles);
            const std::vector<double> got = charpoly_coefficients(gains.Acl);
            double worst = 0.0;
            for (std::size_t i = 0; i < want.size(); ++i)
                worst = std::max(worst, std::abs(want[i] - got[i]) / std::max(1.0, std::abs(want[i])));
            check("closed_loop_spectrum", worst <= 1e-8,
                  "characteristic coefficients vs poles, err = " + fmt(worst) + " (tol 1e-8)");

            const Eigen::MatrixXd res = gains.P * gains.Acl + gains.Acl.transpose() * gains.P +
                                        Eigen::MatrixXd::Identity(n + 1, n + 1);
            const double rnorm = res.norm();
            const double sym = (gains.P - gains.P.transpose()).norm();
            check("lyapunov_residual", rnorm <= 1e-8, "||P Acl + Acl' P + I||_F = " + fmt(rnorm) + " (tol 1e-8)");
            check("p_positive_definite", gains.p_min_eigenvalue > 0.0 && sym <= 1e-12 * std::max(1.0, gains.P.norm()),
                  "lambda_min(P) = " + fmt(gains.p_min_eigenvalue) + ", asymmetry = " + fmt(sym));

            const double recomputed =
                compute_M(model, gains.K1, gains.P, artifact.norms.a_norm, artifact.norms.b_norm,
                          gains.safety_factor);
            const double bound = recomputed / gains.safety_factor;  // the strict right-hand side
            check("weight_M", gains.weight_M > bound || gains.weight_M == 1e-6,
                  "M = " + fmt(gains.weight_M) + " > bound " + fmt(bound));
        }

        // Trajectory: quiet start, transform consistency, certificate, norms.
        {
            bool quiet = true;
            for (std::size_t r = 0; r < traj.t.size(); ++r) {
                if (traj.t[r] < D && traj.alpha[r] != 0.0) quiet = false;
                if (traj.t[r] < 2.0 * D && traj.uD[r] != 0.0) quiet = false;
            }
            check("quiet_start", quiet, "alpha = 0 on [0,D) and uD = 0 on [0,2D), exactly");

            DelayPropagators props(model, history.dt);
            double z_err = 0.0, a_err = 0.0, scale = 1.0;
            for (std::size_t r = 0; r < traj.t.size(); ++r) {
                Eigen::VectorXd X1(n + 1);
                X1(0) = traj.uD[r];
                for (int j = 0; j < n; ++j) X1(j + 1) = traj.w[r][static_cast<std::size_t>(j)];
                const Eigen::VectorXd Z1 =
                    forward_transform(X1, history, props, traj.t[r]);
                Eigen::VectorXd Z1_stored(n + 1);
                for (int j = 0; j <= n; ++j) Z1_stored(j) = traj.Z1[r][static_cast<std::size_t>(j)];
                z_err = std::max(z_err, (Z1 - Z1_stored).norm());
                scale = std::max(scale, Z1_stored.norm());
                if (traj.t[r] >= D)
                    a_err = std::max(a_err, std::abs(gains.K1.dot(Z1_stored) - traj.alpha[r]));
            }
            check("transform_consistency", z_err <= 1e-9 * scale,
                  "recomputed Z1 from history.csv, max err = " + fmt(z_err));
            check("feedback_identity", a_err <= 1e-9 * scale,
                  "alpha = K1 Z1 for t >= D, max err = " + fmt(a_err));
        }

        {
            bool positive = true;
            double vd_2d = 0.0;
            bool monotone = true;
            double prev = 0.0;
            bool have_prev = false;
            for (std::size_t r = 0; r < traj.t.size(); ++r) {
                double state = std::abs(traj.uD[r]);
                for (double wj : traj.w[r]) state += std::abs(wj);
                if (state > 1e-12 && !(traj.vD[r] > 0.0)) positive = false;
                if (traj.t[r] >= 2.0 * D) {
                    if (!have_prev) {
                        vd_2d = traj.vD[r];
                        have_prev = true;
                    } else if (traj.vD[r] > prev + 1e-6 * vd_2d) {
                        monotone = false;
                    }
                    prev = traj.vD[r];
                }
            }
            check("certificate_positive", positive, "V_D > 0 whenever the state is nonzero");
            check("certificate_monotone", monotone,
                  "V_D nonincreasing for t > 2D (slack 1e-6 V_D(2D) = " + fmt(1e-6 * vd_2d) + ")");

            const double fit_lo = 2.0 * D + 5.0;
            const double fit_hi = traj.t.back();
            if (fit_hi > fit_lo + 5.0) {
                const DecayFit fit = decay_fit(traj.t, traj.vD, fit_lo, fit_hi);
                report.info.push_back("V_D log-slope = " + fmt(fit.rate) + ", r2 = " + fmt(fit.r2));
                check("certificate_exponential", fit.rate < 0.0 && fit.r2 >= 0.98,
                      "log V_D fit on [" + fmt(fit_lo) + "," + fmt(fit_hi) + "]: slope = " + fmt(fit.rate) +
                          ", r2 = " + fmt(fit.r2));
            }
        }

        // Identity ||w||_{H1_0}^2 = int c w^2 - sum lambda_j w_j^2 against the
        // grid seminorm, on every recorded state with a meaningfully nonzero w.
        {
            std::vector<double> spectral(traj.t.size()), grid_semi(traj.t.size());
            double h1_max = 0.0;
            for (std::size_t r = 0; r < traj.t.size(); ++r) {
                Eigen::VectorXd w(static_cast<Eigen::Index>(traj.w[r].size()));
                for (Eigen::Index j = 0; j < w.size(); ++j) w(j) = traj.w[r][static_cast<std::size_t>(j)];
                spectral[r] = h1_norm_spectral(w, basis);
                std::vector<double> profile_w(static_cast<std::size_t>(basis.grid.points()), 0.0);
                for (Eigen::Index j = 0; j < w.size(); ++j)
                    for (int i = 0; i < basis.grid.points(); ++i)
                        profile_w[static_cast<std::size_t>(i)] +=
                            w(j) * basis.modes[static_cast<std::size_t>(j)].samples[static_cast<std::size_t>(i)];
                grid_semi[r] = h1_seminorm_grid(profile_w, basis.grid.h());
                h1_max = std::max(h1_max, spectral[r]);
            }
            double worst_rel = 0.0;
            for (std::size_t r = 0; r < traj.t.size(); ++r) {
                if (spectral[r] <= 1e-9 * std::max(1.0, h1_max)) continue;
                worst_rel = std::max(worst_rel, std::abs(spectral[r] - grid_semi[r]) / spectral[r]);
            }
            check("h1_identity", worst_rel <= 0.01,
                  "spectral vs grid H1 seminorm, max rel err = " + fmt(worst_rel) + " (tol 1%)");
        }

        // Boundary reconstruction from the profile table.
        {
            std::vector<double> t_of_u = traj.t, u_of_t = traj.uD;
            bool left_ok = true, right_ok = true;
            for (std::size_t r = 0; r < profile.t.size(); ++r) {
                if (profile.x[r] == 0.0 && profile.y[r] != 0.0) left_ok = false;
                if (profile.x[r] == basis.grid.length) {
                    const auto it = std::lower_bound(t_of_u.begin(), t_of_u.end(), profile.t[r] - 1e-12);
                    if (it == t_of_u.end() || std::abs(*it - profile.t[r]) > 1e-9) continue;
                    const double u = u_of_t[static_cast<std::size_t>(it - t_of_u.begin())];
                    if (profile.y[r] != u) right_ok = false;
                }
            }
            check("boundary_identity", left_ok && right_ok, "y(t,0) = 0 and y(t,L) = uD(t) at every record");
        }

        // Decay of the reconstructed solution.
        {
            const double t_end = traj.t.back();
            const double fit_lo = std::max(2.0 * D, t_end / 2.0);
            bool positive = true;
            for (std::size_t r = 0; r < traj.t.size(); ++r)
                if (traj.t[r] >= fit_lo && !(traj.h1[r] > 0.0)) positive = false;
            if (positive && t_end > fit_lo + 1.0) {
                const DecayFit fit = decay_fit(traj.t, traj.h1, fit_lo, t_end);
                report.info.push_back("H1 decay rate on [" + fmt(fit_lo) + "," + fmt(t_end) +
                                      "] = " + fmt(fit.rate) + ", r2 = " + fmt(fit.r2));
                check("h1_decay", fit.rate < 0.0 && fit.r2 >= 0.9,
                      "fitted rate = " + fmt(fit.rate) + ", r2 = " + fmt(fit.r2));
            } else {
                check("h1_decay", positive, "H1 norm positive on the fit window");
            }
        }

        return report;
    });
}

int cmd_pipeline(const RunConfig& cfg, const std::string& out_dir, std::ostream& log) {
    try {
        const SpectralBasis basis = stage_eig(cfg, out_dir);
        log << "eig: " << basis.modes.size() << " modes, lambda_1 = " << fmt(basis.modes.front().lambda)
            << "\n";
        const ModelArtifact artifact = stage_reduce(cfg, basis, out_dir);
        log << "reduce: n = " << artifact.model.n << ", kalman det = " << fmt(artifact.kalman.det) << "\n";
        const GainSet gains = stage_gain(cfg, artifact, out_dir);
        log << "gain: ||K1|| = " << fmt(gains.K1.norm()) << ", M(D) = " << fmt(gains.weight_M) << "\n";
        const Trajectory traj = stage_simulate(cfg, basis, artifact, gains, out_dir);
        log << "simulate: " << traj.times.size() << " records to t = " << fmt(traj.times.back()) << "\n";
        const VerifyReport report = stage_verify(cfg, out_dir);
        {
            std::ofstream rep(out_dir + "/report.txt");
            if (!rep) throw IoError("cannot write report: " + out_dir + "/report.txt");
            rep << report.text();
        }
        log << report.text();
        return report.all_pass() ? static_cast<int>(ExitCode::ok) : static_cast<int>(ExitCode::verify);
    } catch (const IoError& e) {
        log << "io error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::io);
    } catch (const StageError& e) {
        log << "error: " << e.what() << "\n";
        return static_cast<int>(e.code);
    }
}

int cmd_sweep(const std::vector<std::string>& config_paths, const std::string& out_root, int jobs,
              std::ostream& log) {
    if (config_paths.empty()) {
        log << "sweep: no configs given\n";
        return static_cast<int>(ExitCode::config);
    }
    struct Item {
        std::string path, out;
        int code = 0;
        std::string log_text;
    };
    std::vector<Item> items;
    for (const std::string& p : config_paths) {
        Item item;
        item.path = p;
        item.out = out_root + "/" + fs::path(p).stem().string();
        items.push_back(std::move(item));
    }

    std::mutex next_mutex;
    std::size_t next = 0;
    auto worker = [&]() {
        for (;;) {
            std::size_t mine;
            {
                std::lock_guard<std::mutex> lock(next_mutex);
                if (next >= items.size()) return;
                mine = next++;
            }
            Item& item = items[mine];
            std::ostringstream local;
            try {
                const RunConfig cfg = load_config(item.path);
                item.code = cmd_pipeline(cfg, item.out, local);
            } catch (const ConfigError& e) {
                local << "config error (line " << e.line << "): " << e.what() << "\n";
                item.code = static_cast<int>(ExitCode::config);
            }
            item.log_text = local.str();
        }
    };

    const int threads = std::max(1, std::min<int>(jobs, static_cast<int>(items.size())));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    int rc = 0;
    for (const Item& item : items) {
        log << "=== " << item.path << " -> " << item.out << " (exit " << item.code << ")\n";
        log << item.log_text;
        rc = std::max(rc, item.code);
    }
    return rc;
}

}  // namespace rdstab
