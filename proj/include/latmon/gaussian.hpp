#pragma once

// Semiclassical model for odd-site probing: a Gaussian wave packet in the
// imbalance coordinate z with width b^2, quadratic phase phi, mean z0, linear
// phase c and complex log-amplitude a. Covers the ODE flow, the closed-form
// p/q solutions, the stationary point with its spectrum, the photocount jump
// map and rate, the averaged-jump flow and the regime timescales.

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "latmon/geometry.hpp"
#include "latmon/integrator.hpp"
#include "latmon/record.hpp"
#include "latmon/rng.hpp"

namespace latmon {

struct GaussianParams {
    double J = 1.0;
    double Gamma = 0.0; // N gamma / 2
    double h = 0.01;    // 1/N
    double Lambda = 0.0; // U N / M

    double omega() const { return 2.0 * std::sqrt(1.0 + Lambda - h); }

    void validate() const {
        if (!(h > 0.0 && h < 1.0)) throw std::invalid_argument("gaussian: h must be in (0,1)");
        if (Gamma < 0.0) throw std::invalid_argument("gaussian: Gamma must be >= 0");
    }

    static GaussianParams from_physics(double J, double gamma, int N, double U, int M) {
        GaussianParams P;
        P.J = J;
        P.Gamma = N * gamma / 2.0;
        P.h = 1.0 / N;
        P.Lambda = U * N / M;
        P.validate();
        return P;
    }
};

struct GaussianState {
    double b2 = 0.0;
    double phi = 0.0;
    double z0 = 0.0;
    double c = 0.0;
    cd a = 0.0; // Re: global phase (not evolved), Im: -1/2 log norm^2
};

inline GaussianState initial_gaussian(const GaussianParams& P) {
    return {2.0 * P.h, 0.0, 0.0, 0.0, cd(0.0, 0.0)};
}

struct GaussianDeriv {
    double db2, dphi, dz0, dc, dim_a;
};

inline GaussianDeriv derivatives(const GaussianState& s, const GaussianParams& P) {
    if (s.b2 <= 0.0) throw std::invalid_argument("gaussian derivatives: b^2 must be > 0");
    const double J = P.J, G = P.Gamma, h = P.h, w = P.omega();
    const double b2 = s.b2, phi = s.phi, z0 = s.z0, c = s.c;
    GaussianDeriv d;
    d.db2 = 8.0 * h * J * phi - (G / (2.0 * h)) * b2 * b2;
    d.dphi = -(J * w * w / (4.0 * h)) * b2 - (G / (2.0 * h)) * b2 * phi +
             (4.0 * h * J / b2) * (1.0 + phi * phi);
    d.dz0 = -(G / (2.0 * h)) * b2 * (1.0 + z0) + (2.0 * h * J / b2) * (2.0 * z0 * phi + c);
    d.dc = -(G / (2.0 * h)) * b2 * c + (4.0 * h * J / b2) * (phi * c - 2.0 * z0);
    d.dim_a = (G / (4.0 * h)) * ((1.0 + z0) * (1.0 + z0) + b2 / 2.0);
    return d;
}

struct PQState {
    cd p, q;
};

inline PQState to_pq(const GaussianState& s) {
    return {cd(1.0, -s.phi) / s.b2, cd(s.z0, s.c / 2.0) / s.b2};
}

inline GaussianState from_pq(const PQState& pq, cd a = 0.0) {
    double rp = pq.p.real();
    if (rp <= 0.0) throw std::runtime_error("pq state: Re(p) must be > 0 (normalizable packet)");
    GaussianState s;
    s.b2 = 1.0 / rp;
    s.phi = -pq.p.imag() / rp;
    s.z0 = pq.q.real() / rp;
    s.c = 2.0 * pq.q.imag() / rp;
    s.a = a;
    return s;
}

// closed-form flow of the auxiliary variables; time in the same units as 1/J
inline PQState analytic_pq(double t, cd p0, cd q0, const GaussianParams& P) {
    const double J = P.J, G = P.Gamma, h = P.h, w = P.omega();
    if (J * w == 0.0) throw std::invalid_argument("analytic_pq: J*omega must be nonzero");
    const cd zeta = std::sqrt(cd(1.0, -2.0 * G / (J * w * w))); // Re > 0, Im <= 0
    const cd zw = zeta * w;
    const cd X = zw + 4.0 * h * p0;
    const cd Y = zw - 4.0 * h * p0;
    // F = exp(-i J zeta w t) decays for t > 0 since Im(zeta) <= 0
    const cd F = std::exp(cd(0.0, -1.0) * J * zw * t);
    const cd F2 = F * F;

    cd denom_p = X + Y * F2;
    if (std::abs(denom_p) < 1e-300) throw std::runtime_error("analytic_pq: caustic at t");
    PQState out;
    out.p = (zw / (4.0 * h)) * (X - Y * F2) / denom_p;

    // q = [u(0) q0 - (Gamma/2h) int_0^t u] / u(t), with u = X e^{iJzwt} + Y e^{-iJzwt}
    const cd iJzw = cd(0.0, 1.0) * J * zw;
    cd num = 2.0 * zw * q0 * F - (G / (2.0 * h)) / iJzw * (1.0 - F) * (X + Y * F);
    out.q = num / denom_p;
    return out;
}

inline GaussianState analytic_state(double t, const GaussianState& s0, const GaussianParams& P) {
    auto pq0 = to_pq(s0);
    return from_pq(analytic_pq(t, pq0.p, pq0.q, P), s0.a);
}

struct StationaryPoint {
    double alpha = 0.0;
    GaussianState state;
    std::array<cd, 4> eigenvalues;
};

inline StationaryPoint stationary_point(const GaussianParams& P) {
    const double J = P.J, G = P.Gamma, h = P.h, w = P.omega();
    StationaryPoint sp;
    if (G == 0.0) {
        // weak limit: formulas are singular, the fixed point is the center
        sp.alpha = 0.0;
        sp.state = {4.0 * h / w, 0.0, 0.0, 0.0, cd(0.0, 0.0)};
        sp.eigenvalues = {cd(0.0, J * w), cd(0.0, -J * w), cd(0.0, 2.0 * J * w),
                          cd(0.0, -2.0 * J * w)};
        return sp;
    }
    const double r = 4.0 * G * G / (J * J * w * w * w * w);
    const double alpha = std::sqrt(-0.5 + 0.5 * std::sqrt(r + 1.0));
    sp.alpha = alpha;
    sp.state.b2 = 4.0 * h * J * w * alpha / G;
    sp.state.phi = J * w * w * alpha * alpha / G;
    sp.state.z0 = -1.0 + 1.0 / (2.0 * alpha * alpha + 1.0);
    sp.state.c = 4.0 * G / (J * w * w * (2.0 * alpha * alpha + 1.0));
    const double re1 = -J * w * alpha, im1 = G / (w * alpha);
    sp.eigenvalues = {cd(re1, im1), cd(re1, -im1), cd(2.0 * re1, 2.0 * im1),
                      cd(2.0 * re1, -2.0 * im1)};
    return sp;
}

inline Eigen::Matrix4d jacobian_numeric(const GaussianState& s, const GaussianParams& P) {
    auto pack = [](const GaussianState& st) {
        return Eigen::Vector4d(st.b2, st.phi, st.z0, st.c);
    };
    auto unpack = [&s](const Eigen::Vector4d& v) {
        GaussianState st = s;
        st.b2 = v[0];
        st.phi = v[1];
        st.z0 = v[2];
        st.c = v[3];
        return st;
    };
    auto fvec = [&P, &unpack](const Eigen::Vector4d& v) {
        auto d = derivatives(unpack(v), P);
        return Eigen::Vector4d(d.db2, d.dphi, d.dz0, d.dc);
    };
    Eigen::Vector4d x = pack(s);
    Eigen::Matrix4d Jm;
    for (int i = 0; i < 4; ++i) {
        double e = 1e-6 * std::max(std::abs(x[i]), 1e-2);
        Eigen::Vector4d xp = x, xm = x;
        xp[i] += e;
        xm[i] -= e;
        Jm.col(i) = (fvec(xp) - fvec(xm)) / (2.0 * e);
    }
    return Jm;
}

inline GaussianState jump_map(const GaussianState& s) {
    if (1.0 + s.z0 <= 0.0)
        throw std::runtime_error("jump_map: empty odd mode (z0 <= -1), jump impossible");
    const double zp = 1.0 + s.z0;
    const double denom = zp * zp + s.b2;
    GaussianState out = s;
    out.b2 = s.b2 * zp * zp / denom;
    out.phi = s.phi * zp * zp / denom;
    out.z0 = s.z0 + s.b2 * zp / denom;
    out.c = s.c * zp * zp / denom;
    return out;
}

inline double jump_probability(const GaussianState& s, const GaussianParams& P, double dt) {
    return (P.Gamma / (2.0 * P.h)) * ((1.0 + s.z0) * (1.0 + s.z0) + s.b2 / 2.0) * dt;
}

struct MeanJumpFlow {
    double db2_jump, dz0_jump;                      // average photocurrent acting alone
    double db2_comb, dphi_comb, dz0_comb, dc_comb;  // flow with the averaged jumps folded in
};

inline MeanJumpFlow mean_jump_flow(const GaussianState& s, const GaussianParams& P) {
    const double J = P.J, G = P.Gamma, h = P.h, w = P.omega();
    const double b2 = s.b2, phi = s.phi, z0 = s.z0, c = s.c;
    const double zp = 1.0 + z0;
    MeanJumpFlow f;
    const double red = b2 > 0.0 ? 1.0 - 0.5 * b2 / (zp * zp + b2) : 1.0;
    f.db2_jump = -(G / (2.0 * h)) * b2 * b2 * red;
    f.dz0_jump = (G / (2.0 * h)) * b2 * zp * red;
    if (b2 <= 0.0) {
        f.db2_comb = f.dphi_comb = f.dz0_comb = f.dc_comb = 0.0;
        return f;
    }
    f.db2_comb = 8.0 * h * J * phi - (G / h) * b2 * b2;
    f.dphi_comb = -(J * w * w / (4.0 * h)) * b2 - (G / h) * b2 * phi +
                  (4.0 * h * J / b2) * (1.0 + phi * phi);
    f.dz0_comb = (2.0 * h * J / b2) * (2.0 * z0 * phi + c);
    f.dc_comb = -(G / h) * b2 * c + (4.0 * h * J / b2) * (phi * c - 2.0 * z0);
    return f;
}

// growth-vs-decay exponent difference Gamma (b^2/2h - 1/omega)
inline double growth_exponent_margin(double b2, const GaussianParams& P) {
    return P.Gamma * (b2 / (2.0 * P.h) - 1.0 / P.omega());
}

struct RegimeTimescales {
    double Omega;    // oscillation frequency around the stable point
    double dt_damp;  // damping time
    double dt_jump;  // mean photocount interval near z0 = 0
    double Omega_dt_damp;
    double Omega_dt_jump;
};

inline RegimeTimescales regime_timescales(const GaussianParams& P) {
    if (!(P.Gamma > 0.0)) throw std::invalid_argument("regime_timescales: Gamma must be > 0");
    const double alpha = stationary_point(P).alpha;
    RegimeTimescales r;
    r.Omega = 2.0 * P.Gamma / (P.omega() * alpha);
    r.dt_damp = 1.0 / (2.0 * P.J * P.omega() * alpha);
    r.dt_jump = 2.0 * P.h / P.Gamma;
    r.Omega_dt_damp = r.Omega * r.dt_damp;
    r.Omega_dt_jump = r.Omega * r.dt_jump;
    return r;
}

// effective mass-one potential before the harmonic expansion, diagnostics only
inline double v_potential(double z, const GaussianParams& P) {
    const double h = P.h, s = 1.0 - z * z;
    if (s <= 0.0) throw std::invalid_argument("v_potential: |z| must be < 1");
    return -P.J * std::sqrt(s) * (1.0 + h / s - h * h * (1.0 + z * z) / (s * s)) +
           0.5 * P.Lambda * z * z;
}

enum class GaussianJumps { none, rate, replay };

struct GaussianRunOptions {
    double horizon = 10.0;
    double sample_dt = 0.05;
    GaussianJumps jumps = GaussianJumps::rate;
    std::vector<double> replay_times;
    double flow_gamma_scale = 1.0; // 0 freezes the flow's Gamma (jump-only studies)
    double p_cap = 0.01;           // per-step jump probability bound
    double rtol = 1e-10;
    double atol = 1e-12;
};

inline TrajectoryRecord run_gaussian_trajectory(const GaussianParams& P, Rng rng,
                                                const GaussianRunOptions& opt,
                                                std::uint64_t seed_label = 0) {
    GaussianParams flowP = P;
    flowP.Gamma *= opt.flow_gamma_scale;

    using Vec = Eigen::VectorXd;
    auto rhs = [&flowP](double, const Vec& y, Vec& dy) {
        GaussianState s{y[0], y[1], y[2], y[3], cd(0.0, y[4])};
        auto d = derivatives(s, flowP);
        dy.resize(5);
        dy << d.db2, d.dphi, d.dz0, d.dc, d.dim_a;
    };
    Dopri5<Vec, decltype(rhs)> stepper(rhs, opt.rtol, opt.atol);

    GaussianState s = initial_gaussian(P);
    Vec y(5);
    y << s.b2, s.phi, s.z0, s.c, 0.0;
    stepper.start(0.0, y);

    TrajectoryRecord rec;
    rec.engine = "gaussian";
    rec.seed = seed_label;
    long jump_count = 0;
    const double N = 1.0 / P.h;

    auto record_sample = [&](double t) {
        const Vec& v = stepper.y();
        GaussianState cur{v[0], v[1], v[2], v[3], cd(0.0, v[4])};
        auto d = derivatives(cur, flowP);
        rec.times.push_back(t);
        double n_odd = N * (1.0 + cur.z0) / 2.0;
        rec.mode_means.push_back({n_odd, N - n_odd});
        rec.norm2.push_back(std::exp(-2.0 * v[4]));
        rec.jumps.push_back(jump_count);
        rec.ccdag.push_back(jump_probability(cur, P, 1.0));
        rec.extra["b2"].push_back(cur.b2);
        rec.extra["b2dot"].push_back(d.db2);
        rec.extra["z0"].push_back(cur.z0);
        rec.extra["z0dot"].push_back(d.dz0);
        rec.extra["phi"].push_back(cur.phi);
        rec.extra["c"].push_back(cur.c);
        rec.extra["im_a"].push_back(v[4]);
    };
    record_sample(0.0);

    auto integrate_to = [&](double t_target) {
        while (stepper.t() < t_target - 1e-14 * std::max(1.0, t_target)) stepper.step(t_target);
    };
    auto do_jump = [&](double t) {
        const Vec& v = stepper.y();
        GaussianState cur{v[0], v[1], v[2], v[3], cd(0.0, v[4])};
        GaussianState nxt = jump_map(cur);
        Vec ny(5);
        ny << nxt.b2, nxt.phi, nxt.z0, nxt.c, v[4];
        stepper.reset_state(t, ny);
        ++jump_count;
        rec.jump_times.push_back(t);
    };

    std::size_t next_sample = 1, next_replay = 0;
    double t = 0.0;
    while (t < opt.horizon - 1e-12) {
        double t_next = next_sample * opt.sample_dt;
        if (opt.jumps == GaussianJumps::rate && P.Gamma > 0.0) {
            const Vec& v = stepper.y();
            GaussianState cur{v[0], v[1], v[2], v[3], 0.0};
            double rate = jump_probability(cur, P, 1.0);
            if (rate > 0.0) t_next = std::min(t_next, t + opt.p_cap / rate);
        }
        if (opt.jumps == GaussianJumps::replay && next_replay < opt.replay_times.size())
            t_next = std::min(t_next, opt.replay_times[next_replay]);
        t_next = std::min(t_next, opt.horizon);

        integrate_to(t_next);
        double dt = t_next - t;
        t = t_next;

        if (opt.jumps == GaussianJumps::replay && next_replay < opt.replay_times.size() &&
            t >= opt.replay_times[next_replay] - 1e-12) {
            do_jump(t);
            ++next_replay;
        } else if (opt.jumps == GaussianJumps::rate && P.Gamma > 0.0 && dt > 0.0) {
            const Vec& v = stepper.y();
            GaussianState cur{v[0], v[1], v[2], v[3], 0.0};
            if (rng.uniform() < jump_probability(cur, P, dt)) do_jump(t);
        }
        if (t >= next_sample * opt.sample_dt - 1e-12) {
            record_sample(t);
            ++next_sample;
        }
    }
    return rec;
}

} // namespace latmon
