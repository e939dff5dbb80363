#include "rdstab/io.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace rdstab {

using nlohmann::json;

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open for reading: " + path);
    return in;
}

void finish(std::ofstream& out, const std::string& path) {
    out.flush();
    if (!out) throw IoError("write failed: " + path);
}

json matrix_to_json(const Eigen::MatrixXd& M) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows) {
    const auto r = rows.size();
    const auto c = rows.empty() ? 0 : rows.at(0).size();
    Eigen::MatrixXd M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows.at(i).at(j).get<double>();
    return M;
}

std::vector<double> split_csv_doubles(const std::string& line) {
    std::vector<double> out;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    return out;
}

}  // namespace

std::string format_g17(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

void write_basis_json(const std::string& path, const SpectralBasis& basis) {
    json j;
    j["length"] = basis.grid.length;
    j["grid_points"] = basis.grid.intervals;
    j["c_samples"] = basis.spec.c_samples;
    json modes = json::array();
    for (const EigenMode& m : basis.modes) {
        json mj;
        mj["index"] = m.index;
        mj["lambda"] = m.lambda;
        mj["a_coef"] = m.a_coef;
        mj["b_coef"] = m.b_coef;
        mj["flux_right"] = m.flux_right;
        mj["samples"] = m.samples;
        modes.push_back(std::move(mj));
    }
    j["modes"] = std::move(modes);
    auto out = open_out(path);
    out << j.dump(1) << "\n";
    finish(out, path);
}

SpectralBasis read_basis_json(const std::string& path) {
    auto in = open_in(path);
    json j;
    try {
        in >> j;
        SpectralBasis basis;
        basis.grid = Grid1D{j.at("length").get<double>(), j.at("grid_points").get<int>()};
        basis.spec.length = basis.grid.length;
        basis.spec.c_samples = j.at("c_samples").get<std::vector<double>>();
        for (const auto& mj : j.at("modes")) {
            EigenMode m;
            m.index = mj.at("index").get<int>();
            m.lambda = mj.at("lambda").get<double>();
            m.a_coef = mj.at("a_coef").get<double>();
            m.b_coef = mj.at("b_coef").get<double>();
            m.flux_right = mj.at("flux_right").get<double>();
            m.samples = mj.at("samples").get<std::vector<double>>();
            basis.modes.push_back(std::move(m));
        }
        return basis;
    } catch (const json::exception& e) {
        throw IoError("malformed basis file " + path + ": " + e.what());
    }
}

void write_model_json(const std::string& path, const ModelArtifact& artifact) {
    json j;
    j["n"] = artifact.model.n;
    j["delay"] = artifact.model.delay;
    j["lambdas"] = artifact.model.lambdas;
    j["margin"] = artifact.model.margin;
    j["A1"] = matrix_to_json(artifact.model.A1);
    j["B1"] = std::vector<double>(artifact.model.B1.data(), artifact.model.B1.data() + artifact.model.B1.size());
    j["kalman_det"] = artifact.kalman.det;
    j["kalman_rank_ok"] = artifact.kalman.rank_ok;
    j["vandermonde_det"] = artifact.vandermonde;
    j["a_norm"] = artifact.norms.a_norm;
    j["b_norm"] = artifact.norms.b_norm;
    auto out = open_out(path);
    out << j.dump(1) << "\n";
    finish(out, path);
}

ModelArtifact read_model_json(const std::string& path) {
    auto in = open_in(path);
    json j;
    try {
        in >> j;
        ModelArtifact a;
        a.model.n = j.at("n").get<int>();
        a.model.delay = j.at("delay").get<double>();
        a.model.lambdas = j.at("lambdas").get<std::vector<double>>();
        a.model.margin = j.at("margin").get<double>();
        a.model.A1 = matrix_from_json(j.at("A1"));
        const auto b = j.at("B1").get<std::vector<double>>();
        a.model.B1 = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
        a.kalman.det = j.at("kalman_det").get<double>();
        a.kalman.rank_ok = j.at("kalman_rank_ok").get<bool>();
        a.vandermonde = j.at("vandermonde_det").get<double>();
        a.norms.a_norm = j.at("a_norm").get<double>();
        a.norms.b_norm = j.at("b_norm").get<double>();
        return a;
    } catch (const json::exception& e) {
        throw IoError("malformed model file " + path + ": " + e.what());
    }
}

void write_gains_json(const std::string& path, const GainSet& gains) {
    json j;
    j["delay"] = gains.delay;
    j["K1"] = std::vector<double>(gains.K1.data(), gains.K1.data() + gains.K1.size());
    j["P"] = matrix_to_json(gains.P);
    json poles = json::array();
    for (const auto& p : gains.poles) poles.push_back({{"re", p.real()}, {"im", p.imag()}});
    j["poles"] = std::move(poles);
    j["weight_M"] = gains.weight_M;
    j["Acl"] = matrix_to_json(gains.Acl);
    j["lyapunov_residual"] = gains.lyapunov_residual;
    j["p_min_eigenvalue"] = gains.p_min_eigenvalue;
    j["safety_factor"] = gains.safety_factor;
    auto out = open_out(path);
    out << j.dump(1) << "\n";
    finish(out, path);
}

GainSet read_gains_json(const std::string& path) {
    auto in = open_in(path);
    json j;
    try {
        in >> j;
        GainSet g;
        g.delay = j.at("delay").get<double>();
        const auto k = j.at("K1").get<std::vector<double>>();
        g.K1 = Eigen::Map<const Eigen::RowVectorXd>(k.data(), static_cast<Eigen::Index>(k.size()));
        g.P = matrix_from_json(j.at("P"));
        for (const auto& pj : j.at("poles")) g.poles.emplace_back(pj.at("re").get<double>(), pj.at("im").get<double>());
        g.weight_M = j.at("weight_M").get<double>();
        g.Acl = matrix_from_json(j.at("Acl"));
        g.lyapunov_residual = j.at("lyapunov_residual").get<double>();
        g.p_min_eigenvalue = j.at("p_min_eigenvalue").get<double>();
        g.safety_factor = j.at("safety_factor").get<double>();
        return g;
    } catch (const json::exception& e) {
        throw IoError("malformed gains file " + path + ": " + e.what());
    }
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
    auto out = open_out(path);
    out << "t,uD,alpha";
    for (int j = 1; j <= traj.modes; ++j) out << ",w_" << j;
    for (int j = 0; j <= traj.n; ++j) out << ",Z1_" << j;
    out << ",V_D,L2_norm,H1_norm\n";
    for (std::size_t r = 0; r < traj.times.size(); ++r) {
        out << format_g17(traj.times[r]) << ',' << format_g17(traj.uD[r]) << ',' << format_g17(traj.alpha[r]);
        for (int j = 0; j < traj.modes; ++j) out << ',' << format_g17(traj.w[r](j));
        for (int j = 0; j <= traj.n; ++j) out << ',' << format_g17(traj.Z1[r](j));
        out << ',' << format_g17(traj.vD[r]) << ',' << format_g17(traj.l2_y[r]) << ','
            << format_g17(traj.h1_y[r]) << '\n';
    }
    finish(out, path);
}

TrajectoryTable read_trajectory_csv(const std::string& path) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty trajectory file: " + path);
    // Count w_* and Z1_* columns from the header.
    int n_w = 0, n_z = 0;
    {
        std::stringstream ss(line);
        std::string col;
        while (std::getline(ss, col, ',')) {
            if (col.rfind("w_", 0) == 0) ++n_w;
            if (col.rfind("Z1_", 0) == 0) ++n_z;
        }
    }
    TrajectoryTable table;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const std::vector<double> v = split_csv_doubles(line);
        if (static_cast<int>(v.size()) != 3 + n_w + n_z + 3)
            throw IoError("malformed trajectory row in " + path);
        std::size_t k = 0;
        table.t.push_back(v[k++]);
        table.uD.push_back(v[k++]);
        table.alpha.push_back(v[k++]);
        table.w.emplace_back(v.begin() + static_cast<long>(k), v.begin() + static_cast<long>(k) + n_w);
        k += static_cast<std::size_t>(n_w);
        table.Z1.emplace_back(v.begin() + static_cast<long>(k), v.begin() + static_cast<long>(k) + n_z);
        k += static_cast<std::size_t>(n_z);
        table.vD.push_back(v[k++]);
        table.l2.push_back(v[k++]);
        table.h1.push_back(v[k++]);
    }
    return table;
}

void write_profile_csv(const std::string& path, const Trajectory& traj, int stride) {
    auto out = open_out(path);
    out << "t,x,y\n";
    for (std::size_t r = 0; r < traj.times.size(); r += static_cast<std::size_t>(stride)) {
        for (int i = 0; i < traj.grid.points(); ++i)
            out << format_g17(traj.times[r]) << ',' << format_g17(traj.grid.x(i)) << ','
                << format_g17(traj.y[r][static_cast<std::size_t>(i)]) << '\n';
    }
    finish(out, path);
}

ProfileTable read_profile_csv(const std::string& path) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty profile file: " + path);
    ProfileTable table;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const std::vector<double> v = split_csv_doubles(line);
        if (v.size() != 3) throw IoError("malformed profile row in " + path);
        table.t.push_back(v[0]);
        table.x.push_back(v[1]);
        table.y.push_back(v[2]);
    }
    return table;
}

void write_history_csv(const std::string& path, const ControlHistory& history) {
    auto out = open_out(path);
    out << "t,alpha\n";
    for (std::size_t i = 0; i < history.samples.size(); ++i)
        out << format_g17(history.t0 + static_cast<double>(i) * history.dt) << ','
            << format_g17(history.samples[i]) << '\n';
    finish(out, path);
}

ControlHistory read_history_csv(const std::string& path) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty history file: " + path);
    std::vector<double> t, a;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const std::vector<double> v = split_csv_doubles(line);
        if (v.size() != 2) throw IoError("malformed history row in " + path);
        t.push_back(v[0]);
        a.push_back(v[1]);
    }
    if (t.size() < 2) throw IoError("history file too short: " + path);
    ControlHistory h;
    h.t0 = t.front();
    h.dt = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
    h.samples = std::move(a);
    return h;
}

void write_kernel_csv(const std::string& path, const KernelTable& kernel) {
    auto out = open_out(path);
    const Eigen::Index m = kernel.values.empty() ? 0 : kernel.values.front().rows();
    out << "r";
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j) out << ",f_" << i << "_" << j;
    out << "\n";
    for (std::size_t p = 0; p < kernel.values.size(); ++p) {
        out << format_g17(static_cast<double>(p) * kernel.dt);
        for (Eigen::Index i = 0; i < m; ++i)
            for (Eigen::Index j = 0; j < m; ++j) out << ',' << format_g17(kernel.values[p](i, j));
        out << '\n';
    }
    finish(out, path);
}

void read_xy_csv(const std::string& path, std::vector<double>& x, std::vector<double>& y) {
    auto in = open_in(path);
    x.clear();
    y.clear();
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (first) {
            first = false;
            // tolerate an optional header row
            if (line.find_first_not_of("0123456789+-.eE, \t\r") != std::string::npos) continue;
        }
        const std::vector<double> v = split_csv_doubles(line);
        if (v.size() != 2) throw IoError("expected two columns in " + path);
        x.push_back(v[0]);
        y.push_back(v[1]);
    }
    if (x.size() < 2) throw IoError("need at least two samples in " + path);
}

void write_plot_scripts(const std::string& out_dir) {
    {
        auto out = open_out(out_dir + "/plot_solution.py");
        out << R"py(#!/usr/bin/env python3
"""Surface plot of y(t, x) from profile.csv (written next to this script)."""
import csv
import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

here = os.path.dirname(os.path.abspath(__file__))
rows = list(csv.reader(open(os.path.join(here, "profile.csv"))))[1:]
data = np.array(rows, dtype=float)
t, x, y = data[:, 0], data[:, 1], data[:, 2]
tu, xu = np.unique(t), np.unique(x)
Y = y.reshape(len(tu), len(xu))
T, X = np.meshgrid(tu, xu, indexing="ij")

fig = plt.figure(figsize=(8, 5))
ax = fig.add_subplot(projection="3d")
ax.plot_surface(T, X, Y, cmap="viridis", rstride=1, cstride=8, linewidth=0)
ax.set_xlabel("t")
ax.set_ylabel("x")
ax.set_zlabel("y(t,x)")
fig.savefig(os.path.join(here, "solution.png"), dpi=150, bbox_inches="tight")
print("wrote", os.path.join(here, "solution.png"))
)py";
        finish(out, out_dir + "/plot_solution.py");
    }
    {
        auto out = open_out(out_dir + "/plot_control.py");
        out << R"py(#!/usr/bin/env python3
"""Boundary input u_D(t) from trajectory.csv (written next to this script)."""
import csv
import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
with open(os.path.join(here, "trajectory.csv")) as fh:
    reader = csv.reader(fh)
    header = next(reader)
    it, iu = header.index("t"), header.index("uD")
    t, u = zip(*((float(r[it]), float(r[iu])) for r in reader))

fig, ax = plt.subplots(figsize=(7, 4))
ax.plot(t, u, lw=1.2)
ax.set_xlabel("t")
ax.set_ylabel("u_D(t)")
ax.grid(True, alpha=0.3)
fig.savefig(os.path.join(here, "control.png"), dpi=150, bbox_inches="tight")
print("wrote", os.path.join(here, "control.png"))
)py";
        finish(out, out_dir + "/plot_control.py");
    }
}

}  // namespace rdstab
