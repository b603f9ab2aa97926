#pragma once

// Run configuration: strict-schema JSON, validated with a full list of
// violations. Times in the config (horizon, sample_dt) are in units of 1/J.

#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "latmon/fock.hpp"
#include "latmon/geometry.hpp"

namespace latmon {

using nlohmann::json;

enum class Engine { exact, oracle, gaussian, sme, moments_jump, moments_diffusion };

inline std::string engine_name(Engine e) {
    switch (e) {
        case Engine::exact: return "exact";
        case Engine::oracle: return "oracle";
        case Engine::gaussian: return "gaussian";
        case Engine::sme: return "sme";
        case Engine::moments_jump: return "moments-jump";
        case Engine::moments_diffusion: return "moments-diffusion";
    }
    return "?";
}

struct GeometryConfig {
    std::string kind = "traveling"; // traveling | standing | explicit
    double delta = 0.0;
    double phase_offset = 0.0;
    std::vector<cd> jjj; // explicit only
    std::string boundary = "periodic";
    double tol = 1e-9;
};

struct GaussianConfig {
    std::string jumps = "rate"; // rate | none | replay-exact
    double flow_gamma_scale = 1.0;
    double p_cap = 0.01;
};

struct RunConfig {
    Engine engine = Engine::exact;
    int N = 0, M = 0;
    double J = 1.0, U = 0.0, gamma = 0.0, eta = 1.0;
    GeometryConfig geometry;
    double horizon = 10.0;   // units of 1/J
    double sample_dt = 0.05; // units of 1/J
    int n_trajectories = 1;
    std::uint64_t master_seed = 1;
    std::string output_dir = "out";
    bool record_distribution = false;
    int distribution_mode = 0;
    int distribution_stride = 1;
    GaussianConfig gaussian;
    double moments_dt = 1e-3;
    std::vector<double> eta_sweep; // sme only; empty = single eta run
    json raw;

    std::string hash() const {
        std::uint64_t h = 1469598103934665603ULL;
        for (char ch : raw.dump()) {
            h ^= static_cast<unsigned char>(ch);
            h *= 1099511628211ULL;
        }
        std::ostringstream os;
        os << std::hex << h;
        return os.str();
    }

    MeasurementGeometry make_geom() const {
        Boundary b = geometry.boundary == "open" ? Boundary::open : Boundary::periodic;
        LatticeSpec lat{M, b};
        if (geometry.kind == "explicit") return partition_modes(geometry.jjj, lat, geometry.tol);
        ProbeSpec probe;
        probe.kind = geometry.kind == "standing" ? ProbeKind::standing : ProbeKind::traveling;
        probe.delta = geometry.delta;
        probe.phase_offset = geometry.phase_offset;
        return make_geometry(lat, probe, geometry.tol);
    }
};

namespace detail {

inline void check_keys(const json& j, const std::set<std::string>& allowed,
                       const std::string& path, std::vector<std::string>& errors) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            errors.push_back(path + ": unknown key '" + it.key() + "'");
}

} // namespace detail

inline RunConfig parse_config_json(const json& j) {
    std::vector<std::string> errors;
    RunConfig c;
    c.raw = j;

    detail::check_keys(j,
                       {"engine", "physics", "geometry", "horizon", "sample_dt", "n_trajectories",
                        "master_seed", "output_dir", "record_distribution", "distribution_mode",
                        "distribution_stride", "gaussian", "moments", "eta_sweep", "description"},
                       "config", errors);

    const std::map<std::string, Engine> engines = {
        {"exact", Engine::exact},           {"oracle", Engine::oracle},
        {"gaussian", Engine::gaussian},     {"sme", Engine::sme},
        {"moments-jump", Engine::moments_jump}, {"moments-diffusion", Engine::moments_diffusion}};
    if (!j.contains("engine") || !j["engine"].is_string() || !engines.count(j["engine"]))
        errors.push_back("config.engine: must be one of exact|oracle|gaussian|sme|moments-jump|moments-diffusion");
    else
        c.engine = engines.at(j["engine"]);

    if (!j.contains("physics") || !j["physics"].is_object()) {
        errors.push_back("config.physics: required object");
    } else {
        const json& p = j["physics"];
        detail::check_keys(p, {"N", "M", "J", "U", "gamma", "eta"}, "config.physics", errors);
        c.N = p.value("N", 0);
        c.M = p.value("M", 0);
        c.J = p.value("J", 1.0);
        c.U = p.value("U", 0.0);
        c.gamma = p.value("gamma", 0.0);
        c.eta = p.value("eta", 1.0);
        if (c.N < 1) errors.push_back("config.physics.N: must be >= 1");
        if (c.M < 2) errors.push_back("config.physics.M: must be >= 2");
        if (c.gamma < 0.0) errors.push_back("config.physics.gamma: must be >= 0");
        if (c.J < 0.0) errors.push_back("config.physics.J: must be >= 0");
        if (c.eta < 0.0 || c.eta > 1.0) errors.push_back("config.physics.eta: must be in [0,1]");
    }

    if (j.contains("geometry")) {
        const json& g = j["geometry"];
        detail::check_keys(g, {"kind", "delta", "phase_offset", "jjj", "boundary", "tol"},
                           "config.geometry", errors);
        c.geometry.kind = g.value("kind", "traveling");
        if (c.geometry.kind != "traveling" && c.geometry.kind != "standing" &&
            c.geometry.kind != "explicit")
            errors.push_back("config.geometry.kind: must be traveling|standing|explicit");
        c.geometry.delta = g.value("delta", 0.0);
        c.geometry.phase_offset = g.value("phase_offset", 0.0);
        c.geometry.boundary = g.value("boundary", "periodic");
        if (c.geometry.boundary != "periodic" && c.geometry.boundary != "open")
            errors.push_back("config.geometry.boundary: must be periodic|open");
        c.geometry.tol = g.value("tol", 1e-9);
        if (!(c.geometry.tol > 0.0)) errors.push_back("config.geometry.tol: must be > 0");
        if (g.contains("jjj")) {
            for (const auto& v : g["jjj"]) {
                if (v.is_number())
                    c.geometry.jjj.emplace_back(v.get<double>(), 0.0);
                else if (v.is_array() && v.size() == 2)
                    c.geometry.jjj.emplace_back(v[0].get<double>(), v[1].get<double>());
                else
                    errors.push_back("config.geometry.jjj: entries must be numbers or [re,im]");
            }
            if (c.geometry.kind == "explicit" && c.M > 0 &&
                static_cast<int>(c.geometry.jjj.size()) != c.M)
                errors.push_back("config.geometry.jjj: length must equal physics.M");
        } else if (c.geometry.kind == "explicit") {
            errors.push_back("config.geometry.jjj: required for kind=explicit");
        }
    } else {
        errors.push_back("config.geometry: required object");
    }

    c.horizon = j.value("horizon", 10.0);
    if (!(c.horizon > 0.0)) errors.push_back("config.horizon: must be > 0");
    c.sample_dt = j.value("sample_dt", 0.05);
    if (!(c.sample_dt > 0.0)) errors.push_back("config.sample_dt: must be > 0");
    c.n_trajectories = j.value("n_trajectories", 1);
    if (c.n_trajectories < 1) errors.push_back("config.n_trajectories: must be >= 1");
    c.master_seed = j.value("master_seed", std::uint64_t(1));
    c.output_dir = j.value("output_dir", std::string("out"));
    c.record_distribution = j.value("record_distribution", false);
    c.distribution_mode = j.value("distribution_mode", 0);
    c.distribution_stride = j.value("distribution_stride", 1);
    if (c.distribution_stride < 1) errors.push_back("config.distribution_stride: must be >= 1");

    if (j.contains("gaussian")) {
        const json& g = j["gaussian"];
        detail::check_keys(g, {"jumps", "flow_gamma_scale", "p_cap"}, "config.gaussian", errors);
        c.gaussian.jumps = g.value("jumps", "rate");
        if (c.gaussian.jumps != "rate" && c.gaussian.jumps != "none" &&
            c.gaussian.jumps != "replay-exact")
            errors.push_back("config.gaussian.jumps: must be rate|none|replay-exact");
        c.gaussian.flow_gamma_scale = g.value("flow_gamma_scale", 1.0);
        c.gaussian.p_cap = g.value("p_cap", 0.01);
    }
    if (j.contains("moments")) {
        const json& m = j["moments"];
        detail::check_keys(m, {"dt"}, "config.moments", errors);
        c.moments_dt = m.value("dt", 1e-3);
        if (!(c.moments_dt > 0.0)) errors.push_back("config.moments.dt: must be > 0");
    }
    if (j.contains("eta_sweep")) {
        if (c.engine != Engine::sme) errors.push_back("config.eta_sweep: only valid for engine=sme");
        for (const auto& v : j["eta_sweep"]) c.eta_sweep.push_back(v.get<double>());
    }

    // engine caps and physical consistency
    if (errors.empty()) {
        MeasurementGeometry geom;
        bool geom_ok = true;
        try {
            geom = c.make_geom();
        } catch (const std::exception& e) {
            errors.push_back(std::string("config.geometry: ") + e.what());
            geom_ok = false;
        }
        if (geom_ok) {
            if (c.engine == Engine::exact) {
                if (geom.R == 2 && c.N > 10000) errors.push_back("exact R=2: N must be <= 10000");
                if (geom.R == 3 && c.N > 300) errors.push_back("exact R=3: N must be <= 300");
                if (geom.R > 3) errors.push_back("exact: R <= 3 supported");
            }
            if (c.engine == Engine::oracle && FockBasis::dimension(c.M, c.N) > 200000)
                errors.push_back("oracle: Fock dimension exceeds 2e5");
            if (c.engine == Engine::sme) {
                if (c.N > 150) errors.push_back("sme: N must be <= 150");
                if (geom.R != 2) errors.push_back("sme: two-mode geometries only");
            }
            if (c.engine == Engine::gaussian && geom.R != 2)
                errors.push_back("gaussian: two-mode geometries only");
        }
    }

    if (!errors.empty()) {
        std::string msg = "invalid config:";
        for (const auto& e : errors) msg += "\n  - " + e;
        throw std::invalid_argument(msg);
    }
    return c;
}

inline RunConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw std::runtime_error("config parse error in " + path + ": " + e.what());
    }
    return parse_config_json(j);
}

} // namespace latmon
