#pragma once

/// Plain-text run configuration: [section] headers with key = value lines.
/// Unknown sections or keys are rejected with the offending line number.

#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "efr/orchestrate.hpp"

namespace efr {

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

struct ConfigEntry {
    std::string value;
    int line = 0;
    mutable bool used = false;
};

using ConfigMap = std::map<std::string, ConfigEntry>;  // "section.key" -> entry

inline ConfigMap read_config_map(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    ConfigMap out;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(path + ":" + std::to_string(lineno) + ": malformed section");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || section.empty())
            throw ConfigError(path + ":" + std::to_string(lineno) + ": key outside a section");
        const std::string full = section + "." + key;
        if (out.count(full))
            throw ConfigError(path + ":" + std::to_string(lineno) + ": duplicate key " + full);
        out[full] = ConfigEntry{value, lineno, false};
    }
    return out;
}

class ConfigView {
public:
    ConfigView(const ConfigMap& map, std::string path) : map_(map), path_(std::move(path)) {}

    bool has(const std::string& key) const { return map_.count(key) > 0; }

    std::string str(const std::string& key, const std::string& fallback) const {
        const auto it = map_.find(key);
        if (it == map_.end()) return fallback;
        it->second.used = true;
        return it->second.value;
    }

    double num(const std::string& key, double fallback) const {
        const auto it = map_.find(key);
        if (it == map_.end()) return fallback;
        it->second.used = true;
        char* end = nullptr;
        const double v = std::strtod(it->second.value.c_str(), &end);
        if (end == it->second.value.c_str() || *end != '\0')
            throw ConfigError(path_ + ":" + std::to_string(it->second.line) +
                              ": not a number: " + it->second.value);
        return v;
    }

    long integer(const std::string& key, long fallback) const {
        const double v = num(key, static_cast<double>(fallback));
        const long l = static_cast<long>(v);
        if (static_cast<double>(l) != v) {
            const auto it = map_.find(key);
            throw ConfigError(path_ + ":" + std::to_string(it->second.line) +
                              ": expected an integer");
        }
        return l;
    }

    void reject_unused() const {
        for (const auto& [key, entry] : map_)
            if (!entry.used)
                throw ConfigError(path_ + ":" + std::to_string(entry.line) +
                                  ": unknown key " + key);
    }

    const std::string& path() const { return path_; }

private:
    const ConfigMap& map_;
    std::string path_;
};

inline RunVariant parse_variant(const std::string& s, const std::string& where) {
    for (const RunVariant v :
         {RunVariant::dns, RunVariant::no_efr, RunVariant::standard_efr, RunVariant::standard_ef,
          RunVariant::chi_opt, RunVariant::delta_opt_ef, RunVariant::delta_chi_opt})
        if (s == to_string(v)) return v;
    throw ConfigError(where + ": unknown variant " + s);
}

inline InitialCondition parse_initial(const std::string& s, const std::string& where) {
    if (s == "zero") return InitialCondition::zero;
    if (s == "taylor_green") return InitialCondition::taylor_green;
    if (s == "shear_layer") return InitialCondition::shear_layer;
    throw ConfigError(where + ": unknown initial condition " + s);
}

}  // namespace detail

/// Parse and validate a run configuration file. Defaults are the benchmark
/// choices: channel at Re=1000, delta0 = eta, chi0 = 5 dt, cadence 10,
/// bounds delta in [1e-5, 1e-3] and chi in [0, 1], gamma 0.
inline RunConfig parse_config(const std::string& path) {
    const detail::ConfigMap map = detail::read_config_map(path);
    const detail::ConfigView v(map, path);

    RunConfig cfg = RunConfig::defaults();

    // [geometry]
    const std::string kind = v.str("geometry.kind", "channel_cylinder");
    if (kind == "channel_cylinder") {
        cfg.geometry = GeometrySpec::channel();
        cfg.geometry.length = v.num("geometry.length", cfg.geometry.length);
        cfg.geometry.height = v.num("geometry.height", cfg.geometry.height);
        cfg.geometry.cyl_x = v.num("geometry.cyl_x", cfg.geometry.cyl_x);
        cfg.geometry.cyl_y = v.num("geometry.cyl_y", cfg.geometry.cyl_y);
        cfg.geometry.cyl_r = v.num("geometry.cyl_r", cfg.geometry.cyl_r);
    } else if (kind == "periodic_box") {
        cfg.geometry = GeometrySpec::box(v.num("geometry.box_lx", 1.0),
                                         v.num("geometry.box_ly", 1.0));
    } else {
        throw ConfigError(path + ": unknown geometry kind " + kind);
    }
    cfg.nx = static_cast<int>(v.integer("geometry.nx", cfg.nx));
    cfg.ny = static_cast<int>(v.integer("geometry.ny", cfg.ny));

    // [flow]
    cfg.flow.nu = v.num("flow.nu", cfg.flow.nu);
    cfg.flow.dt = v.num("flow.dt", cfg.flow.dt);
    cfg.flow.t0 = v.num("flow.t0", cfg.flow.t0);
    cfg.flow.t_end = v.num("flow.t_end", cfg.flow.t_end);
    cfg.flow.inlet_peak = v.num("flow.inlet_peak", cfg.flow.inlet_peak);
    cfg.flow.u_ref = v.num("flow.u_ref", cfg.flow.u_ref);
    cfg.flow.l_ref = v.num("flow.l_ref", cfg.flow.l_ref);
    cfg.flow.upwind_blend = v.num("flow.upwind_blend", cfg.flow.upwind_blend);
    cfg.flow.solver_tol = v.num("flow.solver_tol", cfg.flow.solver_tol);
    cfg.flow.initial = detail::parse_initial(v.str("flow.initial", "zero"), path);

    // [reference]
    cfg.fine_nx = static_cast<int>(v.integer("reference.fine_nx", cfg.fine_nx));
    cfg.fine_ny = static_cast<int>(v.integer("reference.fine_ny", cfg.fine_ny));

    // [efr]
    const bool chi0_explicit = v.has("efr.chi0");
    cfg.delta0 = v.num("efr.delta0", cfg.flow.kolmogorov_eta());
    cfg.chi0 = v.num("efr.chi0", 5.0 * cfg.flow.dt);
    cfg.filter.grad_div_gamma = v.num("efr.gamma", cfg.filter.grad_div_gamma);
    cfg.filter.solver_tol = v.num("efr.filter_tol", cfg.filter.solver_tol);

    // [run]
    cfg.variant = detail::parse_variant(v.str("run.variant", "standard_efr"), path);
    const std::string loss_kind = v.str("run.loss", "global");
    if (loss_kind == "local")
        cfg.loss.kind = LossKind::local;
    else if (loss_kind == "global")
        cfg.loss.kind = LossKind::global;
    else
        throw ConfigError(path + ": unknown loss kind " + loss_kind);
    cfg.loss.w_u = v.num("run.w_u", 1.0);
    cfg.loss.w_gradu = v.num("run.w_gradu", 0.0);
    cfg.loss.w_p = v.num("run.w_p", 0.0);
    cfg.cadence = v.integer("run.cadence", cfg.cadence);
    const double delta_lo = v.num("run.delta_lo", cfg.bounds.box[0][0]);
    const double delta_hi = v.num("run.delta_hi", cfg.bounds.box[0][1]);
    const double chi_lo = v.num("run.chi_lo", cfg.bounds.box[1][0]);
    const double chi_hi = v.num("run.chi_hi", cfg.bounds.box[1][1]);
    cfg.snapshot_stride = v.integer("run.snapshot_stride", cfg.snapshot_stride);

    v.reject_unused();

    if (delta_lo > delta_hi || chi_lo > chi_hi)
        throw ConfigError(path + ": parameter bounds are inverted");
    cfg.bounds = Bounds::rect(delta_lo, delta_hi, chi_lo, chi_hi);

    if (cfg.variant == RunVariant::delta_opt_ef) {
        if (chi0_explicit && cfg.chi0 != 1.0)
            throw ConfigError(path + ": delta_opt_ef fixes chi = 1, remove or fix efr.chi0");
        cfg.chi0 = 1.0;
    }

    try {
        cfg.validate();
    } catch (const InvalidSpec& e) {
        throw ConfigError(path + ": " + e.what());
    } catch (const std::domain_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return cfg;
}

}  // namespace efr
