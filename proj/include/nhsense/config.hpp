// config.hpp — key-value config files describing a sensor scenario
//
// Sections and keys (see README for the commented schema):
//   [sensor]        n_sites, kappa, beta, tau, and exactly one of
//                   {hop_w + drive_delta | hop_j + amp_a | omega + amp_a}
//   [perturbation]  eps
//   [loss] / [gain] baths, scale, row <i> = (coeff, exp_mult) ...
//                   [gain] alternatively: balanced = true  (Y = Z)
// Site and bath indices are 1-based in files, matching all documentation.
#pragma once

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nhsense/coupling.hpp"
#include "nhsense/errors.hpp"
#include "nhsense/params.hpp"

namespace nhsense {

enum class JMode { FromWDelta, FixedJ, OmegaTied };

struct SensorConfig {
    int n_sites{3};
    double kappa{1.0};
    double beta{0.0};
    double tau{1.0};
    JMode j_mode{JMode::FixedJ};
    double hop_w{0.0};
    double drive_delta{0.0};
    double hop_j{1.0};
    double amp_a{0.0};
    double omega{0.0}; // OmegaTied: J = omega * 2 e^A / (e^{2A} + 1), i.e. w = omega fixed
    double eps{0.0};
    CouplingTemplate loss;          // rows may be 0 (no loss baths)
    CouplingTemplate gain;
    bool gain_balanced{false};      // Y = Z regardless of `gain` rows

    double resolved_amp_a() const {
        if (j_mode == JMode::FromWDelta) {
            SensorParams p{n_sites, hop_w, drive_delta, kappa, std::max(beta, 0.0), tau};
            return derive_params(p).amp_a;
        }
        return amp_a;
    }

    double resolved_hop_j() const {
        switch (j_mode) {
            case JMode::FromWDelta: {
                SensorParams p{n_sites, hop_w, drive_delta, kappa, std::max(beta, 0.0), tau};
                return derive_params(p).hop_j;
            }
            case JMode::FixedJ:
                return hop_j;
            case JMode::OmegaTied:
                return omega * 2.0 * std::exp(amp_a) / (std::exp(2.0 * amp_a) + 1.0);
        }
        return hop_j;
    }

    SensorParams sensor() const {
        if (j_mode == JMode::FromWDelta) {
            SensorParams p{n_sites, hop_w, drive_delta, kappa, beta, tau};
            p.validate();
            return p;
        }
        return SensorParams::from_amplification(n_sites, resolved_hop_j(), amp_a, kappa, beta, tau);
    }

    Eigen::MatrixXd loss_matrix() const {
        if (loss.rows == 0) return Eigen::MatrixXd::Zero(n_sites, 0);
        return loss.materialize(resolved_amp_a());
    }

    Eigen::MatrixXd gain_matrix() const {
        if (gain_balanced) return loss_matrix();
        if (gain.rows == 0) return Eigen::MatrixXd::Zero(n_sites, 0);
        return gain.materialize(resolved_amp_a());
    }

    // Sweep helpers: return a modified copy.
    SensorConfig with_amp_a(double a) const {
        SensorConfig c = *this;
        if (c.j_mode == JMode::FromWDelta) {
            // re-express (w, delta) through (J, A) and move A
            c.hop_j = resolved_hop_j();
            c.j_mode = JMode::FixedJ;
        }
        c.amp_a = a;
        return c;
    }
    SensorConfig with_alpha(double alpha) const {
        SensorConfig c = *this;
        c.loss.scale = alpha;
        if (!c.gain_balanced && c.gain.rows > 0) c.gain.scale = alpha;
        return c;
    }
    SensorConfig with_n_sites(int n) const {
        SensorConfig c = *this;
        c.n_sites = n;
        return c;
    }
    SensorConfig with_eps(double e) const {
        SensorConfig c = *this;
        c.eps = e;
        return c;
    }
};

namespace detail {

struct ConfigLine {
    int number;
    std::string section;
    std::string key;
    std::string value;
};

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

inline double parse_number(const ConfigLine& ln) {
    const std::string v = trim(ln.value);
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0' || !std::isfinite(x)) {
        throw ConfigError("expected a finite number, got '" + v + "'", ln.number, ln.key);
    }
    return x;
}

inline long parse_integer(const ConfigLine& ln) {
    const std::string v = trim(ln.value);
    char* end = nullptr;
    const long x = std::strtol(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0') {
        throw ConfigError("expected an integer, got '" + v + "'", ln.number, ln.key);
    }
    return x;
}

inline bool parse_bool(const ConfigLine& ln) {
    const std::string v = trim(ln.value);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("expected true/false, got '" + v + "'", ln.number, ln.key);
}

// "(coeff, exp_mult) (coeff, exp_mult) ..." for one template row
inline std::vector<CouplingEntry> parse_row_entries(const ConfigLine& ln) {
    std::vector<CouplingEntry> out;
    const std::string& v = ln.value;
    std::size_t i = 0;
    auto skip_ws = [&] { while (i < v.size() && std::isspace(static_cast<unsigned char>(v[i]))) ++i; };
    for (skip_ws(); i < v.size(); skip_ws()) {
        if (v[i] != '(') {
            throw ConfigError("expected '(' starting a (coeff, exp_mult) pair", ln.number, ln.key);
        }
        ++i;
        char* end = nullptr;
        const double coeff = std::strtod(v.c_str() + i, &end);
        if (end == v.c_str() + i) throw ConfigError("bad coefficient", ln.number, ln.key);
        i = static_cast<std::size_t>(end - v.c_str());
        skip_ws();
        if (i >= v.size() || v[i] != ',') throw ConfigError("expected ','", ln.number, ln.key);
        ++i;
        const long mult = std::strtol(v.c_str() + i, &end, 10);
        if (end == v.c_str() + i) throw ConfigError("bad exp_mult", ln.number, ln.key);
        i = static_cast<std::size_t>(end - v.c_str());
        skip_ws();
        if (i >= v.size() || v[i] != ')') throw ConfigError("expected ')'", ln.number, ln.key);
        ++i;
        out.push_back({coeff, static_cast<int>(mult)});
    }
    return out;
}

struct TemplateBuilder {
    int baths{-1};
    double scale{1.0};
    std::map<int, std::vector<CouplingEntry>> rows; // 1-based row -> entries
    int baths_line{0};

    CouplingTemplate build(int n_sites, const std::string& section) const {
        CouplingTemplate t;
        if (baths < 0 && rows.empty()) return t; // section absent or empty
        if (baths <= 0) {
            throw ConfigError("section [" + section + "] needs 'baths = <count>' > 0",
                              baths_line ? baths_line : 1, "baths");
        }
        t = CouplingTemplate::zero(n_sites, baths);
        t.scale = scale;
        for (const auto& [row, entries] : rows) {
            if (row < 1 || row > n_sites) {
                throw ConfigError("row index out of range 1.." + std::to_string(n_sites),
                                  baths_line, "row " + std::to_string(row));
            }
            if (static_cast<int>(entries.size()) != baths) {
                throw ConfigError("row has " + std::to_string(entries.size()) +
                                      " entries, expected " + std::to_string(baths),
                                  baths_line, "row " + std::to_string(row));
            }
            for (int j = 0; j < baths; ++j) {
                t.at(row - 1, j) = entries[static_cast<std::size_t>(j)];
            }
        }
        return t;
    }
};

} // namespace detail

inline SensorConfig parse_config(std::istream& in) {
    SensorConfig cfg;
    cfg.loss = CouplingTemplate{};
    cfg.gain = CouplingTemplate{};

    std::string section;
    std::string raw;
    int number = 0;
    bool have_n = false, have_kappa = false;
    bool have_w = false, have_delta = false, have_j = false, have_a = false, have_omega = false;
    detail::TemplateBuilder loss_b, gain_b;

    while (std::getline(in, raw)) {
        ++number;
        std::string line = raw;
        const std::size_t hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("unterminated section header", number, line);
            section = detail::trim(line.substr(1, line.size() - 2));
            if (section != "sensor" && section != "perturbation" && section != "loss" &&
                section != "gain") {
                throw ConfigError("unknown section [" + section + "]", number, section);
            }
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("expected 'key = value'", number, line);
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (section.empty()) throw ConfigError("key outside any [section]", number, key);
        const detail::ConfigLine ln{number, section, key, value};

        if (section == "sensor") {
            if (key == "n_sites") { cfg.n_sites = static_cast<int>(detail::parse_integer(ln)); have_n = true; }
            else if (key == "kappa") { cfg.kappa = detail::parse_number(ln); have_kappa = true; }
            else if (key == "beta") cfg.beta = detail::parse_number(ln);
            else if (key == "tau") cfg.tau = detail::parse_number(ln);
            else if (key == "hop_w") { cfg.hop_w = detail::parse_number(ln); have_w = true; }
            else if (key == "drive_delta") { cfg.drive_delta = detail::parse_number(ln); have_delta = true; }
            else if (key == "hop_j") { cfg.hop_j = detail::parse_number(ln); have_j = true; }
            else if (key == "amp_a") { cfg.amp_a = detail::parse_number(ln); have_a = true; }
            else if (key == "omega") { cfg.omega = detail::parse_number(ln); have_omega = true; }
            else throw ConfigError("unknown key in [sensor]", number, key);
        } else if (section == "perturbation") {
            if (key == "eps") cfg.eps = detail::parse_number(ln);
            else throw ConfigError("unknown key in [perturbation]", number, key);
        } else if (section == "loss" || section == "gain") {
            detail::TemplateBuilder& b = (section == "loss") ? loss_b : gain_b;
            if (key == "baths") { b.baths = static_cast<int>(detail::parse_integer(ln)); b.baths_line = number; }
            else if (key == "scale") b.scale = detail::parse_number(ln);
            else if (key == "balanced" && section == "gain") cfg.gain_balanced = detail::parse_bool(ln);
            else if (key.rfind("row", 0) == 0) {
                const std::string idx = detail::trim(key.substr(3));
                char* end = nullptr;
                const long row = std::strtol(idx.c_str(), &end, 10);
                if (idx.empty() || *end != '\0') {
                    throw ConfigError("row key must look like 'row <index>'", number, key);
                }
                b.rows[static_cast<int>(row)] = detail::parse_row_entries(ln);
            } else {
                throw ConfigError("unknown key in [" + section + "]", number, key);
            }
        }
    }

    if (!have_n || !have_kappa) {
        throw ConfigError("[sensor] must set n_sites and kappa", number ? number : 1, "sensor");
    }
    const bool wd = have_w || have_delta;
    const bool ja = have_j;
    const bool oa = have_omega;
    if ((wd && (ja || oa)) || (ja && oa)) {
        throw ConfigError("choose exactly one of hop_w/drive_delta, hop_j + amp_a, omega + amp_a",
                          number, "sensor");
    }
    if (wd) {
        if (!have_w || !have_delta) {
            throw ConfigError("hop_w and drive_delta must be given together", number, "sensor");
        }
        cfg.j_mode = JMode::FromWDelta;
    } else if (oa) {
        if (!have_a) throw ConfigError("omega requires amp_a", number, "omega");
        cfg.j_mode = JMode::OmegaTied;
    } else if (ja) {
        if (!have_a) throw ConfigError("hop_j requires amp_a", number, "hop_j");
        cfg.j_mode = JMode::FixedJ;
    } else {
        throw ConfigError("no hopping specification in [sensor]", number ? number : 1, "sensor");
    }

    cfg.loss = loss_b.build(cfg.n_sites, "loss");
    cfg.gain = gain_b.build(cfg.n_sites, "gain");
    cfg.sensor(); // validates ranges now, with a clear message
    return cfg;
}

inline SensorConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file: " + path);
    return parse_config(in);
}

} // namespace nhsense
