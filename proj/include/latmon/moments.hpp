#pragma once

// Gaussian-closed stochastic moment equations for the monitored mode
// occupation <N_odd>, the inter-mode current <Delta> and their second moments,
// in jump-process form (point process dN) and diffusion form (shared Wiener
// increment), plus the Stratonovich drift-consistency check and the
// forced-oscillator reduction.

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "latmon/gaussian.hpp"
#include "latmon/record.hpp"
#include "latmon/rng.hpp"

namespace latmon {

struct MomentParams {
    double J = 1.0;
    double gamma = 0.0;
    int N = 0;
};

struct MomentState {
    double n_odd = 0.0;
    double delta = 0.0;
    double var_n = 0.0;
    double var_d = 0.0;
    double cov = 0.0;

    void check(const MomentParams& P) const {
        if (var_n < 0.0 || var_d < 0.0)
            throw std::runtime_error("moments: negative variance (closure breakdown)");
        if (cov * cov > var_n * var_d * (1.0 + 1e-9))
            throw std::runtime_error("moments: Cauchy-Schwarz violated (closure breakdown)");
        if (n_odd < -1e-9 || n_odd > P.N + 1e-9)
            throw std::runtime_error("moments: n_odd left [0, N]");
    }
};

// superfluid initial values: <N_odd> = N/2, Var = N/4, Delta = 2 S_y
inline MomentState initial_moments(const MomentParams& P) {
    return {P.N / 2.0, 0.0, P.N / 4.0, double(P.N), 0.0};
}

struct MomentDeriv {
    double n_odd, delta, var_n, var_d, cov;
};

// deterministic (dt) parts of the closed jump-form equations
inline MomentDeriv closed_drift(const MomentState& m, const MomentParams& P) {
    const double J = P.J, g = P.gamma;
    MomentDeriv d;
    d.n_odd = -(J * m.delta + 2.0 * g * m.n_odd * m.var_n);
    d.delta = -2.0 * (J * (P.N - 2.0 * m.n_odd) + g * m.n_odd * m.cov);
    d.var_n = -2.0 * (J * m.cov + g * m.var_n * m.var_n);
    d.var_d = -2.0 * (4.0 * J * m.cov + g * m.cov * m.cov);
    d.cov = J * (4.0 * m.var_n - m.var_d) - 2.0 * g * m.var_n * m.cov;
    return d;
}

// state change at a photocount (the dN coefficients)
inline MomentDeriv jump_increment(const MomentState& m) {
    if (m.n_odd <= 1e-12)
        throw std::runtime_error("moments: jump pending with n_odd ~ 0 (division guard)");
    MomentDeriv d;
    const double n2 = m.n_odd * m.n_odd;
    d.n_odd = 2.0 * m.var_n / m.n_odd;
    d.delta = 2.0 * m.cov / m.n_odd;
    d.var_n = -2.0 * m.var_n * m.var_n / n2;
    d.var_d = -2.0 * m.cov * m.cov / n2;
    d.cov = 2.0 * m.cov * m.var_n / n2;
    return d;
}

struct MomentStepInfo {
    bool jumped = false;
    double dw = 0.0;
};

inline MomentState closed_jump_step(const MomentState& m, double dt, const MomentParams& P,
                                    Rng& rng, MomentStepInfo* info = nullptr) {
    const double p = P.gamma * m.n_odd * m.n_odd * dt;
    if (p >= 0.1) throw std::invalid_argument("closed_jump_step: gamma n^2 dt must be < 0.1");
    MomentDeriv d = closed_drift(m, P);
    MomentState out = m;
    out.n_odd += d.n_odd * dt;
    out.delta += d.delta * dt;
    out.var_n += d.var_n * dt;
    out.var_d += d.var_d * dt;
    out.cov += d.cov * dt;
    if (P.gamma > 0.0 && rng.uniform() < p) {
        MomentDeriv j = jump_increment(m);
        out.n_odd += j.n_odd;
        out.delta += j.delta;
        out.var_n += j.var_n;
        out.var_d += j.var_d;
        out.cov += j.cov;
        if (info) info->jumped = true;
    }
    out.check(P);
    return out;
}

// diffusion-limit drift and shared-noise coefficients
inline MomentDeriv diffusion_drift(const MomentState& m, const MomentParams& P) {
    const double J = P.J, g = P.gamma;
    MomentDeriv d;
    d.n_odd = -J * m.delta;
    d.delta = -2.0 * J * (P.N - 2.0 * m.n_odd);
    d.var_n = -2.0 * (J * m.cov + 2.0 * g * m.var_n * m.var_n);
    d.var_d = -4.0 * (2.0 * J * m.cov + g * m.cov * m.cov);
    d.cov = J * (4.0 * m.var_n - m.var_d);
    return d;
}

inline MomentDeriv diffusion_noise(const MomentState& m, const MomentParams& P) {
    if (m.n_odd <= 1e-12)
        throw std::runtime_error("moments: diffusion step with n_odd ~ 0");
    const double sg = 2.0 * std::sqrt(P.gamma);
    MomentDeriv b;
    b.n_odd = sg * m.var_n;
    b.delta = sg * m.cov;
    b.var_n = -sg * m.var_n * m.var_n / m.n_odd;
    b.var_d = -sg * m.cov * m.cov / m.n_odd;
    b.cov = sg * m.cov * m.var_n / m.n_odd;
    return b;
}

inline MomentState diffusion_step(const MomentState& m, double dt, const MomentParams& P,
                                  Rng& rng, MomentStepInfo* info = nullptr) {
    MomentDeriv a = diffusion_drift(m, P);
    MomentDeriv b = diffusion_noise(m, P);
    const double dw = std::sqrt(dt) * rng.normal();
    if (info) info->dw = dw;
    MomentState out = m;
    out.n_odd += a.n_odd * dt + b.n_odd * dw;
    out.delta += a.delta * dt + b.delta * dw;
    out.var_n += a.var_n * dt + b.var_n * dw;
    out.var_d += a.var_d * dt + b.var_d * dw;
    out.cov += a.cov * dt + b.cov * dw;
    out.check(P);
    return out;
}

// Ito -> Stratonovich drift correction 1/2 (db/dx) b for the shared-noise
// system, evaluated analytically. The Stratonovich forms' explicit
// leading-order drifts equal the Ito drifts, so the correction norm is the
// residual between the two readings; it vanishes at gamma = 0 and is O(gamma).
struct StratCheck {
    MomentDeriv correction;
    double residual_norm;
    double drift_norm;
    double relative;
};

inline StratCheck stratonovich_drift_check(const MomentState& m, const MomentParams& P) {
    const double g = P.gamma, n = m.n_odd, V = m.var_n, C = m.cov;
    if (n <= 1e-12) throw std::runtime_error("stratonovich check: n_odd ~ 0");
    StratCheck out;
    out.correction.n_odd = -2.0 * g * V * V / n;
    out.correction.delta = 2.0 * g * C * V / n;
    out.correction.var_n = 6.0 * g * V * V * V / (n * n);
    out.correction.var_d = -2.0 * g * V * C * C / (n * n);
    out.correction.cov = -2.0 * g * C * V * V / (n * n);
    MomentDeriv a = diffusion_drift(m, P);
    auto norm5 = [](const MomentDeriv& d) {
        return std::sqrt(d.n_odd * d.n_odd + d.delta * d.delta + d.var_n * d.var_n +
                         d.var_d * d.var_d + d.cov * d.cov);
    };
    out.residual_norm = norm5(out.correction);
    out.drift_norm = norm5(a);
    out.relative = out.drift_norm > 0.0 ? out.residual_norm / out.drift_norm : 0.0;
    return out;
}

// Gaussian closure of higher moments
inline double gaussian_third_moment(double mu, double var) { return mu * mu * mu + 3.0 * mu * var; }
inline double gaussian_fourth_moment(double mu, double var) {
    return mu * mu * mu * mu + 6.0 * mu * mu * var + 3.0 * var * var;
}

enum class MomentScheme { jump, diffusion };

struct MomentRunOptions {
    double horizon = 10.0;
    double sample_dt = 0.05;
    double dt = 1e-3;
    MomentScheme scheme = MomentScheme::jump;
};

inline TrajectoryRecord run_moments(const MomentParams& P, const MomentRunOptions& opt, Rng rng,
                                    std::uint64_t seed_label = 0) {
    TrajectoryRecord rec;
    rec.engine = opt.scheme == MomentScheme::jump ? "moments-jump" : "moments-diffusion";
    rec.seed = seed_label;
    MomentState m = initial_moments(P);
    long jump_count = 0;
    double wiener = 0.0;
    double t = 0.0;

    auto sample = [&]() {
        rec.times.push_back(t);
        rec.mode_means.push_back({m.n_odd, P.N - m.n_odd});
        rec.jumps.push_back(jump_count);
        rec.ccdag.push_back(P.gamma * m.n_odd * m.n_odd);
        rec.extra["delta"].push_back(m.delta);
        rec.extra["var_n"].push_back(m.var_n);
        rec.extra["var_d"].push_back(m.var_d);
        rec.extra["cov"].push_back(m.cov);
        rec.extra["wiener"].push_back(wiener);
    };
    sample();

    std::size_t next_sample = 1;
    while (t < opt.horizon - 1e-12) {
        double ts = std::min(next_sample * opt.sample_dt, opt.horizon);
        double seg = ts - t;
        // automatic halving on closure breakdown, floor dt/1024
        double advanced = 0.0;
        double sub = std::min(opt.dt, seg);
        while (advanced < seg - 1e-15) {
            try {
                MomentStepInfo info;
                if (opt.scheme == MomentScheme::jump)
                    m = closed_jump_step(m, sub, P, rng, &info);
                else
                    m = diffusion_step(m, sub, P, rng, &info);
                if (info.jumped) ++jump_count;
                wiener += info.dw;
                advanced += sub;
                sub = std::min(std::min(opt.dt, sub * 2.0), seg - advanced);
            } catch (const std::runtime_error&) {
                sub *= 0.5;
                if (sub < opt.dt / 1024.0) throw;
            }
        }
        t = ts;
        sample();
        ++next_sample;
    }
    return rec;
}

} // namespace latmon
