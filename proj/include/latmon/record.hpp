#pragma once

// Per-trajectory sample record and its JSONL/JSON serialization. All engines
// emit the same core columns; engine-specific series go into `extra`.

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace latmon {

struct TrajectoryRecord {
    std::string engine;
    std::uint64_t seed = 0;
    std::string config_hash;

    std::vector<double> times;
    std::vector<std::vector<double>> mode_means; // [sample][mode]
    std::vector<double> norm2;                   // pre-renormalization norm^2
    std::vector<long> jumps;                     // cumulative count
    std::vector<double> ccdag;                   // <c^dag c> on the normalized state
    std::map<std::string, std::vector<double>> extra;

    std::vector<double> jump_times;
    std::vector<std::pair<std::size_t, std::vector<double>>> distributions; // (sample idx, P(N_1))
    std::vector<double> final_distribution;

    std::size_t samples() const { return times.size(); }
};

inline void write_jsonl(const TrajectoryRecord& rec, std::ostream& os) {
    for (std::size_t k = 0; k < rec.samples(); ++k) {
        nlohmann::json line;
        line["t"] = rec.times[k];
        if (!rec.mode_means.empty()) line["n"] = rec.mode_means[k];
        if (!rec.norm2.empty()) line["norm2"] = rec.norm2[k];
        if (!rec.jumps.empty()) line["jumps"] = rec.jumps[k];
        if (!rec.ccdag.empty()) line["ccdag"] = rec.ccdag[k];
        for (const auto& [name, col] : rec.extra)
            if (k < col.size()) line[name] = col[k];
        os << line.dump() << "\n";
    }
}

inline nlohmann::json summary_json(const TrajectoryRecord& rec) {
    nlohmann::json j;
    j["engine"] = rec.engine;
    j["seed"] = rec.seed;
    j["config_hash"] = rec.config_hash;
    j["n_samples"] = rec.samples();
    j["n_jumps"] = rec.jump_times.size();
    j["jump_times"] = rec.jump_times;
    if (!rec.final_distribution.empty()) j["final_distribution"] = rec.final_distribution;
    return j;
}

} // namespace latmon
