#include "rdstab/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace rdstab {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    if (b == std::string::npos) return {};
    return s.substr(b, e - b + 1);
}

double parse_number(const std::string& text, int line, const std::string& key) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument("trailing characters");
        if (!std::isfinite(v)) throw std::invalid_argument("not finite");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(line, "invalid number for '" + key + "': " + text);
    }
}

int parse_int(const std::string& text, int line, const std::string& key) {
    const double v = parse_number(text, line, key);
    const double r = std::round(v);
    if (std::abs(v - r) > 0.0) throw ConfigError(line, "'" + key + "' must be an integer");
    return static_cast<int>(r);
}

bool parse_bool(const std::string& text, int line, const std::string& key) {
    if (text == "true" || text == "on" || text == "1") return true;
    if (text == "false" || text == "off" || text == "0") return false;
    throw ConfigError(line, "'" + key + "' must be a boolean (true/false)");
}

bool divides(double dt, double whole) {
    if (whole == 0.0) return true;
    const double k = whole / dt;
    return std::abs(k - std::round(k)) <= 1e-12 * std::max(1.0, k);
}

}  // namespace

std::vector<std::complex<double>> parse_pole_list(const std::string& text) {
    std::vector<std::complex<double>> poles;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) throw std::invalid_argument("empty entry in pole list");
        if (item.back() == 'i' || item.back() == 'I') {
            // re{+|-}im i
            const std::string body = item.substr(0, item.size() - 1);
            std::size_t split = std::string::npos;
            for (std::size_t k = 1; k < body.size(); ++k) {
                const char ch = body[k];
                if ((ch == '+' || ch == '-') && body[k - 1] != 'e' && body[k - 1] != 'E') split = k;
            }
            if (split == std::string::npos)
                throw std::invalid_argument("complex pole must look like a+bi: " + item);
            std::size_t used = 0;
            const double re = std::stod(body.substr(0, split), &used);
            const double im = std::stod(body.substr(split), &used);
            poles.emplace_back(re, im);
        } else {
            std::size_t used = 0;
            const double re = std::stod(item, &used);
            if (used != item.size()) throw std::invalid_argument("invalid pole entry: " + item);
            poles.emplace_back(re, 0.0);
        }
    }
    if (poles.empty()) throw std::invalid_argument("pole list is empty");
    return poles;
}

void RunConfig::validate(int line) const {
    auto fail = [line](const std::string& what) { throw ConfigError(line, "invariant violated: " + what); };
    if (!(length > 0.0)) fail("L > 0");
    if (delay < 0.0) fail("D >= 0");
    if (grid_points < 16) fail("grid_points >= 16");
    if (num_modes < 1) fail("num_modes >= 1");
    if (8 * num_modes > grid_points) fail("num_modes <= grid_points / 8");
    if (sim_modes < 1) fail("N >= 1");
    if (sim_modes > num_modes) fail("N <= num_modes");
    if (!(dt > 0.0)) fail("dt > 0");
    if (!divides(dt, delay)) fail("dt divides D");
    if (!divides(dt, t_final)) fail("dt divides T");
    if (t_final < 2.0 * delay) fail("T >= 2 D");
    if (t_final < dt) fail("T >= dt");
    if (record_every < 1) fail("record_every >= 1");
    if (profile_stride < 1) fail("profile_stride >= 1");
    for (const auto& p : poles)
        if (!(p.real() < 0.0)) fail("poles have negative real parts");
    if (!c_is_constant && c_csv_path.empty()) fail("c csv path is nonempty");
    if (y0_kind == InitialProfile::csv && y0_csv_path.empty()) fail("y0 csv path is nonempty");
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(0, "cannot open config file: " + path);

    RunConfig cfg;
    std::map<std::string, int> seen;  // "section.key" -> line
    std::string section;
    std::string raw;
    int line = 0;
    bool dt_set = false, t_set = false;

    while (std::getline(in, raw)) {
        ++line;
        std::string s = raw;
        const auto hash = s.find_first_of("#;");
        if (hash != std::string::npos) s = s.substr(0, hash);
        s = trim(s);
        if (s.empty()) continue;

        if (s.front() == '[') {
            if (s.back() != ']') throw ConfigError(line, "malformed section header: " + raw);
            section = trim(s.substr(1, s.size() - 2));
            if (section != "problem" && section != "discretization" && section != "control" &&
                section != "outputs")
                throw ConfigError(line, "unknown section [" + section + "]");
            continue;
        }

        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError(line, "expected 'key = value': " + raw);
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        if (key.empty() || value.empty()) throw ConfigError(line, "expected 'key = value': " + raw);
        if (section.empty()) throw ConfigError(line, "key outside of any section: " + key);

        const std::string qualified = section + "." + key;
        if (seen.count(qualified)) throw ConfigError(line, "duplicate key '" + qualified + "'");
        seen[qualified] = line;

        if (qualified == "problem.L") {
            cfg.length = parse_number(value, line, key);
        } else if (qualified == "problem.D") {
            cfg.delay = parse_number(value, line, key);
        } else if (qualified == "problem.c") {
            if (value.rfind("csv:", 0) == 0) {
                cfg.c_is_constant = false;
                cfg.c_csv_path = trim(value.substr(4));
            } else {
                cfg.c_is_constant = true;
                cfg.c_value = parse_number(value, line, key);
            }
        } else if (qualified == "problem.y0") {
            if (value == "zero") {
                cfg.y0_kind = InitialProfile::zero;
            } else if (value == "parabola") {
                cfg.y0_kind = InitialProfile::parabola;
            } else if (value.rfind("csv:", 0) == 0) {
                cfg.y0_kind = InitialProfile::csv;
                cfg.y0_csv_path = trim(value.substr(4));
            } else {
                throw ConfigError(line, "y0 must be zero, parabola or csv:<path>");
            }
        } else if (qualified == "discretization.grid_points") {
            cfg.grid_points = parse_int(value, line, key);
        } else if (qualified == "discretization.num_modes") {
            cfg.num_modes = parse_int(value, line, key);
        } else if (qualified == "discretization.N") {
            cfg.sim_modes = parse_int(value, line, key);
        } else if (qualified == "discretization.dt") {
            cfg.dt = parse_number(value, line, key);
            dt_set = true;
        } else if (qualified == "discretization.T") {
            cfg.t_final = parse_number(value, line, key);
            t_set = true;
        } else if (qualified == "control.poles") {
            try {
                cfg.poles = parse_pole_list(value);
            } catch (const std::exception& e) {
                throw ConfigError(line, e.what());
            }
        } else if (qualified == "outputs.record_every") {
            cfg.record_every = parse_int(value, line, key);
        } else if (qualified == "outputs.profile_stride") {
            cfg.profile_stride = parse_int(value, line, key);
        } else if (qualified == "outputs.plot") {
            cfg.plot = parse_bool(value, line, key);
        } else {
            throw ConfigError(line, "unknown key '" + qualified + "'");
        }
    }

    if (!seen.count("problem.L")) throw ConfigError(line, "missing required key 'problem.L'");
    if (!seen.count("problem.D")) throw ConfigError(line, "missing required key 'problem.D'");
    if (!seen.count("problem.c")) throw ConfigError(line, "missing required key 'problem.c'");
    if (!dt_set) cfg.dt = (cfg.delay > 0.0) ? cfg.delay / 100.0 : 0.01;  // default dt = D/100
    if (!t_set) cfg.t_final = std::max(40.0, 2.0 * cfg.delay);

    cfg.validate(0);
    return cfg;
}

}  // namespace rdstab
