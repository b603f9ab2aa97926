#pragma once

// Ensemble aggregation: per-time quantile bands of the monitored mode
// occupation, oscillation envelopes with regression slopes, spectral peaks
// and averaged distribution snapshots.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "latmon/record.hpp"
#include "latmon/signal.hpp"

namespace latmon {

struct EnsembleSummary {
    std::vector<double> times;
    std::vector<double> mean, q05, q25, q50, q75, q95;

    std::vector<double> envelope_slopes;
    std::vector<double> early_amps, late_amps;
    double envelope_positive_fraction = 0.0;
    double envelope_slope_median = 0.0;
    double growth_ratio = 0.0; // median late amplitude / median early amplitude

    std::vector<double> spectral_peaks;
    double spectral_median = 0.0;

    std::vector<long> jump_counts;

    std::vector<double> snapshot_times;
    std::vector<std::vector<double>> snapshot_distributions; // seed-averaged P(N_1)
};

// normalized imbalance of the monitored mode, z = 2 n_0 / N - 1
inline std::vector<double> imbalance_series(const TrajectoryRecord& rec) {
    std::vector<double> z(rec.samples());
    for (std::size_t k = 0; k < rec.samples(); ++k) {
        double n0 = rec.mode_means[k][0];
        double n = 0.0;
        for (double v : rec.mode_means[k]) n += v;
        z[k] = n > 0.0 ? 2.0 * n0 / n - 1.0 : 0.0;
    }
    return z;
}

inline EnsembleSummary summarize_ensemble(const std::vector<TrajectoryRecord>& recs,
                                          double baseline_window = 3.2) {
    EnsembleSummary s;
    if (recs.empty()) return s;
    const std::size_t ns = recs.front().samples();
    s.times = recs.front().times;

    for (std::size_t k = 0; k < ns; ++k) {
        std::vector<double> vals;
        vals.reserve(recs.size());
        for (const auto& r : recs)
            if (k < r.samples()) vals.push_back(r.mode_means[k][0]);
        s.mean.push_back(signal::mean(vals));
        s.q05.push_back(signal::quantile(vals, 0.05));
        s.q25.push_back(signal::quantile(vals, 0.25));
        s.q50.push_back(signal::quantile(vals, 0.50));
        s.q75.push_back(signal::quantile(vals, 0.75));
        s.q95.push_back(signal::quantile(vals, 0.95));
    }

    const double T = s.times.back();
    for (const auto& r : recs) {
        auto z = imbalance_series(r);
        auto env = signal::oscillation_envelope(r.times, z, baseline_window);
        if (env.t.size() >= 3) {
            s.envelope_slopes.push_back(env.fit.slope);
            double early = 0.0, late = 0.0;
            for (std::size_t i = 0; i < env.t.size(); ++i) {
                if (env.t[i] <= 0.2 * T) early = std::max(early, env.amp[i]);
                if (env.t[i] >= 0.8 * T) late = std::max(late, env.amp[i]);
            }
            s.early_amps.push_back(early);
            s.late_amps.push_back(late);
        }
        if (r.samples() >= 64) {
            double dt = (r.times.back() - r.times.front()) / double(r.samples() - 1);
            s.spectral_peaks.push_back(signal::spectral_peak(z, dt));
        }
        s.jump_counts.push_back(long(r.jump_times.size()));
    }
    if (!s.envelope_slopes.empty()) {
        int pos = 0;
        for (double v : s.envelope_slopes) pos += v > 0.0 ? 1 : 0;
        s.envelope_positive_fraction = double(pos) / double(s.envelope_slopes.size());
        s.envelope_slope_median = signal::quantile(s.envelope_slopes, 0.5);
    }
    if (!s.early_amps.empty()) {
        double e = signal::quantile(s.early_amps, 0.5);
        double l = signal::quantile(s.late_amps, 0.5);
        s.growth_ratio = e > 0.0 ? l / e : (l > 0.0 ? 1e300 : 0.0);
    }
    if (!s.spectral_peaks.empty()) s.spectral_median = signal::quantile(s.spectral_peaks, 0.5);

    // seed-averaged distribution snapshots at the recorded sample indices
    if (!recs.front().distributions.empty()) {
        for (const auto& [idx, dist0] : recs.front().distributions) {
            std::vector<double> acc(dist0.size(), 0.0);
            int cnt = 0;
            for (const auto& r : recs) {
                for (const auto& [i2, d2] : r.distributions)
                    if (i2 == idx && d2.size() == acc.size()) {
                        for (std::size_t q = 0; q < acc.size(); ++q) acc[q] += d2[q];
                        ++cnt;
                        break;
                    }
            }
            if (cnt > 0) {
                for (double& v : acc) v /= cnt;
                s.snapshot_times.push_back(recs.front().times[idx]);
                s.snapshot_distributions.push_back(std::move(acc));
            }
        }
    }
    return s;
}

inline nlohmann::json ensemble_json(const EnsembleSummary& s) {
    nlohmann::json j;
    j["times"] = s.times;
    j["mean"] = s.mean;
    j["q05"] = s.q05;
    j["q25"] = s.q25;
    j["q50"] = s.q50;
    j["q75"] = s.q75;
    j["q95"] = s.q95;
    j["envelope"] = {{"slopes", s.envelope_slopes},
                     {"positive_fraction", s.envelope_positive_fraction},
                     {"slope_median", s.envelope_slope_median},
                     {"early_amps", s.early_amps},
                     {"late_amps", s.late_amps},
                     {"growth_ratio", s.growth_ratio}};
    j["spectral"] = {{"peaks", s.spectral_peaks}, {"median", s.spectral_median}};
    j["jump_counts"] = s.jump_counts;
    j["snapshot_times"] = s.snapshot_times;
    j["snapshot_distributions"] = s.snapshot_distributions;
    return j;
}

inline void write_ensemble_files(const EnsembleSummary& s, const std::string& dir) {
    namespace fs = std::filesystem;
    std::ofstream(fs::path(dir) / "ensemble.json") << ensemble_json(s).dump(2) << "\n";
    std::ofstream csv(fs::path(dir) / "ensemble.csv");
    csv << "t,mean,q05,q25,q50,q75,q95\n";
    char buf[160];
    for (std::size_t k = 0; k < s.times.size(); ++k) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", s.times[k],
                      s.mean[k], s.q05[k], s.q25[k], s.q50[k], s.q75[k], s.q95[k]);
        csv << buf;
    }
}

} // namespace latmon
