#pragma once

// Built-in run presets mirroring the study's standard parameter sets. The
// same JSON ships as files under presets/; a unit test keeps both in sync.

#include <map>
#include <string>
#include <vector>

namespace latmon {

struct Preset {
    const char* name;
    const char* description;
    const char* config;
};

inline const std::vector<Preset>& presets() {
    static const std::vector<Preset> v = {
        {"fig2a",
         "exact two-mode run, odd-site probe (J_jj = [1,0,1,0,...]), N=100, gamma/J=0.02",
         R"({
  "description": "occupation distribution, odd-site probe, single-peak regime",
  "engine": "exact",
  "physics": {"N": 100, "M": 100, "J": 1.0, "U": 0.0, "gamma": 0.02},
  "geometry": {"kind": "standing", "delta": 1.5707963267948966},
  "horizon": 100.0,
  "sample_dt": 0.05,
  "n_trajectories": 50,
  "master_seed": 20201,
  "output_dir": "out/fig2a",
  "record_distribution": true,
  "distribution_mode": 0,
  "distribution_stride": 10
})"},
        {"fig2b",
         "exact two-mode run, diffraction minimum (J_jj = (-1)^j), N=100, gamma/J=0.02",
         R"({
  "description": "occupation distribution, diffraction minimum, cat-state regime",
  "engine": "exact",
  "physics": {"N": 100, "M": 100, "J": 1.0, "U": 0.0, "gamma": 0.02},
  "geometry": {"kind": "traveling", "delta": 3.141592653589793},
  "horizon": 100.0,
  "sample_dt": 0.05,
  "n_trajectories": 50,
  "master_seed": 20202,
  "output_dir": "out/fig2b",
  "record_distribution": true,
  "distribution_mode": 0,
  "distribution_stride": 10
})"},
        {"fig2c",
         "exact three-mode run, RGBG pattern (J_jj = [0,1/2,1,1/2,...]), N=99, gamma/J=0.02",
         R"({
  "description": "occupation distributions, standing-wave three-mode pattern",
  "engine": "exact",
  "physics": {"N": 99, "M": 100, "J": 1.0, "U": 0.0, "gamma": 0.02},
  "geometry": {"kind": "standing", "delta": 0.7853981633974483, "phase_offset": 1.5707963267948966},
  "horizon": 50.0,
  "sample_dt": 0.05,
  "n_trajectories": 4,
  "master_seed": 20203,
  "output_dir": "out/fig2c",
  "record_distribution": true,
  "distribution_mode": 0,
  "distribution_stride": 10
})"},
        {"fig2d",
         "exact three-mode run, RGB pattern (J_jj = e^{i 2 pi j / 3}), N=99, gamma/J=0.02",
         R"({
  "description": "occupation distributions, traveling-wave three-mode pattern",
  "engine": "exact",
  "physics": {"N": 99, "M": 99, "J": 1.0, "U": 0.0, "gamma": 0.02},
  "geometry": {"kind": "traveling", "delta": 2.0943951023931953},
  "horizon": 50.0,
  "sample_dt": 0.05,
  "n_trajectories": 4,
  "master_seed": 20204,
  "output_dir": "out/fig2d",
  "record_distribution": true,
  "distribution_mode": 0,
  "distribution_stride": 10
})"},
        {"fig3",
         "Gaussian flow at Gamma=0, no jumps: closed orbits around the stable point",
         R"({
  "description": "width and imbalance phase portraits, conservative limit",
  "engine": "gaussian",
  "physics": {"N": 100, "M": 100, "J": 1.0, "U": 0.0, "gamma": 0.0},
  "geometry": {"kind": "standing", "delta": 1.5707963267948966},
  "horizon": 20.0,
  "sample_dt": 0.01,
  "n_trajectories": 1,
  "master_seed": 20301,
  "output_dir": "out/fig3",
  "gaussian": {"jumps": "none"}
})"},
        {"fig4",
         "Gaussian flow at Gamma=0 with jumps replayed from the exact engine",
         R"({
  "description": "spiral growth of the phase-plane orbits under photocount backaction",
  "engine": "gaussian",
  "physics": {"N": 100, "M": 100, "J": 1.0, "U": 0.0, "gamma": 0.005},
  "geometry": {"kind": "standing", "delta": 1.5707963267948966},
  "horizon": 10.0,
  "sample_dt": 0.01,
  "n_trajectories": 4,
  "master_seed": 20401,
  "output_dir": "out/fig4",
  "gaussian": {"jumps": "replay-exact", "flow_gamma_scale": 0.0}
})"},
        {"fig5",
         "Gaussian flow, weak measurement (Gamma=0.001 J), no jumps: under-damped spiral",
         R"({
  "description": "under-damped relaxation towards the stationary point",
  "engine": "gaussian",
  "physics": {"N": 100, "M": 100, "J": 1.0, "U": 0.0, "gamma": 2e-05},
  "geometry": {"kind": "standing", "delta": 1.5707963267948966},
  "horizon": 3000.0,
  "sample_dt": 0.25,
  "n_trajectories": 1,
  "master_seed": 20501,
  "output_dir": "out/fig5",
  "gaussian": {"jumps": "none"}
})"},
        {"fig6",
         "Gaussian model, weak measurement (Gamma=0.001 J), full conditional dynamics",
         R"({
  "description": "growing imbalance oscillations under the full photocount process",
  "engine": "gaussian",
  "physics": {"N": 100, "M": 100, "J": 1.0, "U": 0.0, "gamma": 2e-05},
  "geometry": {"kind": "standing", "delta": 1.5707963267948966},
  "horizon": 3000.0,
  "sample_dt": 0.25,
  "n_trajectories": 4,
  "master_seed": 20601,
  "output_dir": "out/fig6",
  "gaussian": {"jumps": "rate"}
})"},
        {"fig7",
         "SME efficiency sweep (eta = 0, 0.01, 0.1, 1), N=100, gamma/J=0.01",
         R"({
  "description": "conditional dynamics and photocounts for different detector efficiencies",
  "engine": "sme",
  "physics": {"N": 100, "M": 100, "J": 1.0, "U": 0.0, "gamma": 0.01, "eta": 1.0},
  "geometry": {"kind": "standing", "delta": 1.5707963267948966},
  "horizon": 40.0,
  "sample_dt": 0.05,
  "n_trajectories": 1,
  "master_seed": 20701,
  "output_dir": "out/fig7",
  "eta_sweep": [0.0, 0.01, 0.1, 1.0]
})"},
        {"fig8",
         "Gaussian flow, strong measurement (Gamma=100 J), no jumps: over-damped decay",
         R"({
  "description": "over-damped approach to the squeezed stationary point",
  "engine": "gaussian",
  "physics": {"N": 100, "M": 100, "J": 1.0, "U": 0.0, "gamma": 2.0},
  "geometry": {"kind": "standing", "delta": 1.5707963267948966},
  "horizon": 2.0,
  "sample_dt": 0.002,
  "n_trajectories": 1,
  "master_seed": 20801,
  "output_dir": "out/fig8",
  "gaussian": {"jumps": "none"}
})"},
        {"fig8b",
         "Gaussian model, strong measurement (Gamma=100 J), full conditional dynamics",
         R"({
  "description": "strong-measurement conditional dynamics with photocounts",
  "engine": "gaussian",
  "physics": {"N": 100, "M": 100, "J": 1.0, "U": 0.0, "gamma": 2.0},
  "geometry": {"kind": "standing", "delta": 1.5707963267948966},
  "horizon": 2.0,
  "sample_dt": 0.002,
  "n_trajectories": 4,
  "master_seed": 20802,
  "output_dir": "out/fig8b",
  "gaussian": {"jumps": "rate"}
})"},
        {"demo",
         "small exact ensemble for a quick end-to-end check",
         R"({
  "description": "small deterministic demonstration run",
  "engine": "exact",
  "physics": {"N": 20, "M": 20, "J": 1.0, "U": 0.0, "gamma": 0.05},
  "geometry": {"kind": "standing", "delta": 1.5707963267948966},
  "horizon": 20.0,
  "sample_dt": 0.1,
  "n_trajectories": 8,
  "master_seed": 7,
  "output_dir": "out/demo",
  "record_distribution": true,
  "distribution_mode": 0,
  "distribution_stride": 20
})"},
    };
    return v;
}

inline const Preset* find_preset(const std::string& name) {
    for (const auto& p : presets())
        if (name == p.name) return &p;
    return nullptr;
}

} // namespace latmon
