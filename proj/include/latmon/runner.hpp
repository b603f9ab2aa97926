#pragma once

// Batch orchestration: per-trajectory seeding, engine dispatch, output
// files (JSONL trajectories, summaries, ensemble statistics), the eta sweep
// driver and the cross-engine consistency report.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "latmon/config.hpp"
#include "latmon/fock.hpp"
#include "latmon/gaussian.hpp"
#include "latmon/moments.hpp"
#include "latmon/presets.hpp"
#include "latmon/record.hpp"
#include "latmon/runner_summary.hpp"
#include "latmon/sme.hpp"
#include "latmon/trajectory.hpp"

namespace latmon {

namespace detail {

inline void scale_times(TrajectoryRecord& rec, double tscale) {
    if (tscale == 1.0) return;
    for (double& t : rec.times) t *= tscale;
    for (double& t : rec.jump_times) t *= tscale;
}

} // namespace detail

// One trajectory of whichever engine the config selects. Times in the record
// are in units of 1/J (matching the config's horizon/sample_dt convention).
inline TrajectoryRecord run_single(const RunConfig& c, std::uint64_t traj_index) {
    const double tscale = c.J > 0.0 ? c.J : 1.0;
    const double horizon = c.horizon / tscale;
    const double sample_dt = c.sample_dt / tscale;
    MeasurementGeometry geom = c.make_geom();
    TrajectoryRecord rec;

    switch (c.engine) {
        case Engine::exact:
        case Engine::oracle: {
            TrajectoryOptions opt;
            opt.horizon = horizon;
            opt.sample_dt = sample_dt;
            if (c.record_distribution) {
                opt.distribution_mode = c.distribution_mode;
                opt.distribution_stride = c.distribution_stride;
            }
            TrajectoryProblem prob =
                c.engine == Engine::exact
                    ? make_mode_problem(geom, c.J, c.U, c.gamma, c.N)
                    : make_fock_problem(geom,
                                        c.geometry.boundary == "open" ? Boundary::open
                                                                      : Boundary::periodic,
                                        c.J, c.U, c.gamma, c.N);
            rec = run_trajectory_problem(prob, opt, Rng(c.master_seed, traj_index), traj_index);
            break;
        }
        case Engine::gaussian: {
            GaussianParams P = GaussianParams::from_physics(c.J, c.gamma, c.N, c.U, c.M);
            GaussianRunOptions opt;
            opt.horizon = horizon;
            opt.sample_dt = sample_dt;
            opt.p_cap = c.gaussian.p_cap;
            opt.flow_gamma_scale = c.gaussian.flow_gamma_scale;
            if (c.gaussian.jumps == "none") {
                opt.jumps = GaussianJumps::none;
            } else if (c.gaussian.jumps == "replay-exact") {
                opt.jumps = GaussianJumps::replay;
                TrajectoryOptions eopt;
                eopt.horizon = horizon;
                eopt.sample_dt = sample_dt;
                auto exact = run_trajectory(geom, c.J, c.U, c.gamma, c.N, eopt,
                                            c.master_seed, traj_index);
                opt.replay_times = exact.jump_times;
            } else {
                opt.jumps = GaussianJumps::rate;
            }
            rec = run_gaussian_trajectory(P, Rng(c.master_seed, traj_index), opt, traj_index);
            break;
        }
        case Engine::sme: {
            SmeOperator op = make_sme_operator(geom, c.J, c.gamma, c.N);
            SmeOptions opt;
            opt.horizon = horizon;
            opt.sample_dt = sample_dt;
            rec = run_sme(op, geom, c.eta, opt, Rng(c.master_seed, traj_index), traj_index);
            break;
        }
        case Engine::moments_jump:
        case Engine::moments_diffusion: {
            MomentParams P{c.J, c.gamma, c.N};
            MomentRunOptions opt;
            opt.horizon = horizon;
            opt.sample_dt = sample_dt;
            opt.dt = c.moments_dt / tscale;
            opt.scheme =
                c.engine == Engine::moments_jump ? MomentScheme::jump : MomentScheme::diffusion;
            rec = run_moments(P, opt, Rng(c.master_seed, traj_index), traj_index);
            break;
        }
    }
    detail::scale_times(rec, tscale);
    rec.config_hash = c.hash();
    return rec;
}

inline nlohmann::json geometry_report(const MeasurementGeometry& geom) {
    nlohmann::json j;
    auto cplx = [](const cd& z) { return nlohmann::json::array({z.real(), z.imag()}); };
    nlohmann::json jjj = nlohmann::json::array();
    for (const auto& v : geom.jjj) jjj.push_back(cplx(v));
    j["jjj"] = jjj;
    j["mode_of_site"] = geom.mode_of_site;
    j["R"] = geom.R;
    nlohmann::json beta = nlohmann::json::array();
    for (const auto& v : geom.beta) beta.push_back(cplx(v));
    j["beta"] = beta;
    j["mode_size"] = geom.mode_size;
    j["coupling"] = geom.coupling;
    j["total_bonds"] = geom.total_bonds;
    j["local_warning"] = geom.local_warning;
    j["collective_g"] = geom.collective_g();
    return j;
}

inline nlohmann::json stability_report(const GaussianParams& P) {
    auto sp = stationary_point(P);
    nlohmann::json j;
    j["alpha"] = sp.alpha;
    j["b2_inf"] = sp.state.b2;
    j["phi_inf"] = sp.state.phi;
    j["z0_inf"] = sp.state.z0;
    j["c_inf"] = sp.state.c;
    nlohmann::json eigs = nlohmann::json::array();
    for (const auto& ev : sp.eigenvalues) eigs.push_back({ev.real(), ev.imag()});
    j["eigenvalues"] = eigs;
    if (P.Gamma > 0.0) {
        auto ts = regime_timescales(P);
        j["Omega"] = ts.Omega;
        j["dt_damp"] = ts.dt_damp;
        j["dt_jump"] = ts.dt_jump;
        j["Omega_dt_damp"] = ts.Omega_dt_damp;
        j["Omega_dt_jump"] = ts.Omega_dt_jump;
    }
    return j;
}

struct BatchResult {
    std::vector<TrajectoryRecord> records; // quarantined failures excluded
    std::vector<std::string> failures;
    EnsembleSummary summary;
};

// n_trajectories runs with counter-derived seeds; per-trajectory failures are
// quarantined. Worker count never changes the outputs.
inline BatchResult run_batch(const RunConfig& c, int jobs = 1, bool write_files = true) {
    namespace fs = std::filesystem;
    BatchResult out;
    std::vector<TrajectoryRecord> recs(c.n_trajectories);
    std::vector<std::string> errs(c.n_trajectories);

    auto work = [&](int k) {
        try {
            recs[k] = run_single(c, k);
        } catch (const std::exception& e) {
            errs[k] = e.what();
        }
    };
    if (jobs <= 1) {
        for (int k = 0; k < c.n_trajectories; ++k) work(k);
    } else {
        std::vector<std::thread> pool;
        std::mutex mtx;
        int next = 0;
        for (int w = 0; w < jobs; ++w)
            pool.emplace_back([&]() {
                while (true) {
                    int k;
                    {
                        std::lock_guard<std::mutex> lk(mtx);
                        if (next >= c.n_trajectories) return;
                        k = next++;
                    }
                    work(k);
                }
            });
        for (auto& th : pool) th.join();
    }

    for (int k = 0; k < c.n_trajectories; ++k) {
        if (!errs[k].empty())
            out.failures.push_back("trajectory " + std::to_string(k) + ": " + errs[k]);
        else
            out.records.push_back(std::move(recs[k]));
    }
    out.summary = summarize_ensemble(out.records);

    if (write_files) {
        fs::create_directories(c.output_dir);
        std::ofstream(fs::path(c.output_dir) / "config.json") << c.raw.dump(2) << "\n";
        std::ofstream(fs::path(c.output_dir) / "geometry.json")
            << geometry_report(c.make_geom()).dump(2) << "\n";
        if (c.engine == Engine::gaussian) {
            GaussianParams P = GaussianParams::from_physics(c.J, c.gamma, c.N, c.U, c.M);
            std::ofstream(fs::path(c.output_dir) / "stability.json")
                << stability_report(P).dump(2) << "\n";
        }
        int idx = 0;
        for (const auto& rec : out.records) {
            char name[64];
            std::snprintf(name, sizeof(name), "trajectory_%04d.jsonl", int(rec.seed));
            std::ofstream os(fs::path(c.output_dir) / name);
            write_jsonl(rec, os);
            std::snprintf(name, sizeof(name), "trajectory_%04d.summary.json", int(rec.seed));
            std::ofstream(fs::path(c.output_dir) / name) << summary_json(rec).dump(2) << "\n";
            ++idx;
        }
        if (!out.failures.empty()) {
            std::ofstream log(fs::path(c.output_dir) / "errors.log");
            for (const auto& f : out.failures) log << f << "\n";
        }
        write_ensemble_files(out.summary, c.output_dir);
    }
    return out;
}

// eta sweep for the sme engine: one sub-run per eta plus a combined table of
// photocounts normalized to the eta = 1 run
inline std::vector<BatchResult> run_eta_sweep(const RunConfig& base, int jobs = 1,
                                              bool write_files = true) {
    namespace fs = std::filesystem;
    std::vector<double> etas = base.eta_sweep.empty() ? std::vector<double>{base.eta}
                                                      : base.eta_sweep;
    std::vector<BatchResult> results;
    std::vector<std::string> dirs;
    for (double eta : etas) {
        RunConfig c = base;
        c.eta = eta;
        c.eta_sweep.clear();
        char sub[32];
        std::snprintf(sub, sizeof(sub), "eta_%g", eta);
        c.output_dir = (fs::path(base.output_dir) / sub).string();
        c.raw["physics"]["eta"] = eta;
        c.raw.erase("eta_sweep");
        c.raw["output_dir"] = c.output_dir;
        dirs.push_back(c.output_dir);
        results.push_back(run_batch(c, jobs, write_files));
    }
    if (write_files && !results.empty()) {
        fs::create_directories(base.output_dir);
        // normalized photocount comparison, first trajectory of each run
        std::ofstream csv(fs::path(base.output_dir) / "nph_normalized.csv");
        csv << "t";
        for (double eta : etas) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), ",nph_eta_%g", eta);
            csv << buf;
        }
        csv << "\n";
        const auto* ref = &results.back(); // last eta (largest, typically 1)
        for (std::size_t r = 0; r < results.size(); ++r)
            if (etas[r] == 1.0) ref = &results[r];
        if (!ref->records.empty()) {
            const auto& rt = ref->records.front();
            const auto& refn = rt.extra.at("n_ph");
            for (std::size_t k = 0; k < rt.times.size(); ++k) {
                double denom = std::max(1.0, refn[k]);
                char buf[64];
                std::snprintf(buf, sizeof(buf), "%.17g", rt.times[k]);
                csv << buf;
                for (const auto& res : results) {
                    double v = 0.0;
                    if (!res.records.empty()) {
                        const auto& col = res.records.front().extra.at("n_ph");
                        if (k < col.size()) v = col[k] / denom;
                    }
                    std::snprintf(buf, sizeof(buf), ",%.17g", v);
                    csv << buf;
                }
                csv << "\n";
            }
        }
    }
    return results;
}

// consistency table across engines run at matched physics
inline nlohmann::json cross_engine_report(const std::vector<RunConfig>& configs, int jobs = 1) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& c : configs) {
        BatchResult res = run_batch(c, jobs, false);
        nlohmann::json row;
        row["engine"] = engine_name(c.engine);
        row["n_trajectories"] = int(res.records.size());
        row["spectral_peak_median"] = res.summary.spectral_median;
        row["envelope_slope_median"] = res.summary.envelope_slope_median;
        row["envelope_positive_fraction"] = res.summary.envelope_positive_fraction;
        row["growth_ratio"] = res.summary.growth_ratio;
        if (c.engine == Engine::gaussian && c.gamma > 0.0) {
            GaussianParams P = GaussianParams::from_physics(c.J, c.gamma, c.N, c.U, c.M);
            auto sp = stationary_point(P);
            auto d = derivatives(sp.state, P);
            double resid = std::sqrt(d.db2 * d.db2 + d.dphi * d.dphi + d.dz0 * d.dz0 + d.dc * d.dc);
            row["stationary_residual"] = resid;
        }
        rows.push_back(row);
    }
    nlohmann::json rep;
    rep["rows"] = rows;
    if (rows.size() >= 2) {
        double lo = 1e300, hi = -1e300;
        for (const auto& r : rows) {
            double v = r["spectral_peak_median"];
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        rep["spectral_peak_spread"] = (hi - lo) / std::max(1e-300, 0.5 * (hi + lo));
    }
    return rep;
}

} // namespace latmon
