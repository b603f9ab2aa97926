#pragma once

// Stochastic master equation for photon counting with finite detector
// efficiency on the two-mode subspace. Between detections the conditioned
// density matrix follows the nonlinear no-count drift
//   drho/dt = -i[H0,rho] - 1/2 {c+c, rho} + (1-eta) c rho c+ + eta <c+c> rho,
// a detection (probability eta Tr[c rho c+] dt per step) applies
// rho -> c rho c+ / Tr[c rho c+]. The jump operator is diagonal in the
// partition basis, c = sqrt(gamma) sum_j beta_j N_j.

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "latmon/mode_space.hpp"
#include "latmon/record.hpp"
#include "latmon/rng.hpp"

namespace latmon {

struct SmeOperator {
    Eigen::VectorXd h_off;   // off-diagonal of H0 (real): H0(l+1,l) = H0(l,l+1)
    Eigen::VectorXd cdagc;   // gamma |sum beta N|^2 per index
    Eigen::MatrixXcd wjump;  // w_i conj(w_j), jump sandwich weights
    Eigen::VectorXd n_odd;   // occupation of the monitored mode per index
    int N = 0;
    double gamma = 0.0;

    int dim() const { return static_cast<int>(cdagc.size()); }
};

inline SmeOperator make_sme_operator(const MeasurementGeometry& geom, double J, double gamma,
                                     int N) {
    if (geom.R != 2) throw std::invalid_argument("sme: two-mode geometries only");
    EffectiveOperator op = build_effective_operator(geom, J, 0.0, gamma, N);
    SmeOperator s;
    s.N = N;
    s.gamma = gamma;
    const int d = N + 1;
    s.h_off.resize(d - 1);
    for (int l = 0; l < d - 1; ++l) s.h_off[l] = op.heff.coeff(l + 1, l).real();
    s.cdagc = op.cdagc;
    Eigen::VectorXcd w = std::sqrt(gamma) * op.jump_eigs;
    s.wjump = w * w.adjoint();
    s.n_odd.resize(d);
    for (int l = 0; l < d; ++l) s.n_odd[l] = op.basis->occupation(l)[0];
    return s;
}

struct ConditionalDensityMatrix {
    Eigen::MatrixXcd rho;
    double eta = 1.0;

    double trace() const { return rho.trace().real(); }
    double purity() const { return (rho * rho).trace().real(); }

    void check_invariants(double pos_tol = 1e-9) const {
        if (std::abs(trace() - 1.0) > 1e-9) throw std::runtime_error("sme: trace drifted from 1");
        if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > 1e-12)
            throw std::runtime_error("sme: Hermiticity lost");
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -pos_tol)
            throw std::runtime_error("sme: positivity lost (step too large)");
    }
};

inline ConditionalDensityMatrix initial_sme_state(const SmeOperator& op,
                                                  const MeasurementGeometry& geom, double eta) {
    ModeState st = initial_superfluid(geom, op.N);
    ConditionalDensityMatrix r;
    r.rho = st.amps * st.amps.adjoint();
    r.eta = eta;
    return r;
}

namespace detail {

// drift of the no-count evolution; wcoef holds -1/2(d_i+d_j) + (1-eta) w_i conj(w_j)
inline void sme_drift(const SmeOperator& op, const Eigen::MatrixXcd& wcoef, double eta,
                      const Eigen::MatrixXcd& rho, Eigen::MatrixXcd& out) {
    const int d = op.dim();
    out.resize(d, d);
    const auto& off = op.h_off;
    double mean = 0.0;
    for (int i = 0; i < d; ++i) mean += op.cdagc[i] * rho(i, i).real();
    const cd mi(0.0, -1.0);
    for (int j = 0; j < d; ++j) {
        for (int i = 0; i < d; ++i) {
            // (H0 rho)(i,j) and (rho H0)(i,j), H0 tridiagonal with zero diagonal
            cd hr = 0.0, rh = 0.0;
            if (i > 0) hr += off[i - 1] * rho(i - 1, j);
            if (i < d - 1) hr += off[i] * rho(i + 1, j);
            if (j > 0) rh += rho(i, j - 1) * off[j - 1];
            if (j < d - 1) rh += rho(i, j + 1) * off[j];
            out(i, j) = mi * (hr - rh) + wcoef(i, j) * rho(i, j) + eta * mean * rho(i, j);
        }
    }
}

} // namespace detail

// Photon-counting SME step: Bernoulli detection with probability
// eta Tr[c rho c+] dt, otherwise RK4 on the no-count drift. Returns dN.
inline int sme_step(ConditionalDensityMatrix& state, const SmeOperator& op, double dt, Rng& rng) {
    const double eta = state.eta;
    double rate = 0.0;
    for (int i = 0; i < op.dim(); ++i) rate += op.cdagc[i] * state.rho(i, i).real();
    if (eta * rate * dt >= 0.1)
        throw std::invalid_argument("sme_step: eta Tr[c rho c+] dt must be < 0.1");

    if (eta > 0.0 && rng.uniform() < eta * rate * dt) {
        if (rate < 1e-300) throw std::runtime_error("sme_step: detection with vanishing rate");
        state.rho = op.wjump.cwiseProduct(state.rho) / rate;
        return 1;
    }
    Eigen::MatrixXcd wcoef(op.dim(), op.dim());
    for (int j = 0; j < op.dim(); ++j)
        for (int i = 0; i < op.dim(); ++i)
            wcoef(i, j) = -0.5 * (op.cdagc[i] + op.cdagc[j]) + (1.0 - eta) * op.wjump(i, j);
    Eigen::MatrixXcd k1, k2, k3, k4, tmp;
    detail::sme_drift(op, wcoef, eta, state.rho, k1);
    tmp = state.rho + 0.5 * dt * k1;
    detail::sme_drift(op, wcoef, eta, tmp, k2);
    tmp = state.rho + 0.5 * dt * k2;
    detail::sme_drift(op, wcoef, eta, tmp, k3);
    tmp = state.rho + dt * k3;
    detail::sme_drift(op, wcoef, eta, tmp, k4);
    state.rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    double tr = state.rho.trace().real();
    if (tr < 1e-12) throw std::runtime_error("sme_step: trace collapsed");
    state.rho /= tr;
    state.rho = 0.5 * (state.rho + state.rho.adjoint()).eval();
    return 0;
}

inline double photocurrent(const ConditionalDensityMatrix& state, const SmeOperator& op) {
    double rate = 0.0;
    for (int i = 0; i < op.dim(); ++i) rate += op.cdagc[i] * state.rho(i, i).real();
    return state.eta * rate;
}

struct SmeOptions {
    double horizon = 10.0;
    double sample_dt = 0.05;
    double p_cap = 0.01;       // detection probability bound per step
    double drift_cap = 1e-3;   // ||drift||_F dt bound
    double dt_max = 0.05;
    bool check_positivity = true;
    int positivity_stride = 20; // full eigenvalue check every k-th sample
};

// One conditioned SME trajectory. Record extras: sigma band, photocounts,
// photocurrent; jump_times holds the detection times.
inline TrajectoryRecord run_sme(const SmeOperator& op, const MeasurementGeometry& geom, double eta,
                                const SmeOptions& opt, Rng rng, std::uint64_t seed_label = 0) {
    ConditionalDensityMatrix state = initial_sme_state(op, geom, eta);
    TrajectoryRecord rec;
    rec.engine = "sme";
    rec.seed = seed_label;

    const int d = op.dim();
    Eigen::MatrixXcd wcoef(d, d);
    for (int j = 0; j < d; ++j)
        for (int i = 0; i < d; ++i)
            wcoef(i, j) = -0.5 * (op.cdagc[i] + op.cdagc[j]) + (1.0 - eta) * op.wjump(i, j);

    long n_ph = 0;
    double t = 0.0;
    auto sample = [&]() {
        double n1 = 0.0, n2m = 0.0, rate = 0.0;
        for (int i = 0; i < d; ++i) {
            double pii = state.rho(i, i).real();
            n1 += pii * op.n_odd[i];
            n2m += pii * op.n_odd[i] * op.n_odd[i];
            rate += op.cdagc[i] * pii;
        }
        rec.times.push_back(t);
        rec.mode_means.push_back({n1, op.N - n1});
        rec.norm2.push_back(state.trace());
        rec.jumps.push_back(n_ph);
        rec.ccdag.push_back(rate);
        rec.extra["sigma"].push_back(std::sqrt(std::max(0.0, n2m - n1 * n1)));
        rec.extra["n_ph"].push_back(double(n_ph));
        rec.extra["photocurrent"].push_back(eta * rate);
        if (opt.check_positivity && (rec.times.size() - 1) % opt.positivity_stride == 0)
            state.check_invariants();
    };
    sample();

    Eigen::MatrixXcd drift;
    std::size_t next_sample = 1;
    while (t < opt.horizon - 1e-12) {
        double rate = 0.0;
        for (int i = 0; i < d; ++i) rate += op.cdagc[i] * state.rho(i, i).real();
        detail::sme_drift(op, wcoef, eta, state.rho, drift);
        double dnorm = drift.norm();
        double dt = opt.dt_max;
        if (eta * rate > 0.0) dt = std::min(dt, opt.p_cap / (eta * rate));
        if (dnorm > 0.0) dt = std::min(dt, opt.drift_cap / dnorm);
        double ts = next_sample * opt.sample_dt;
        dt = std::min(dt, std::min(ts, opt.horizon) - t);

        if (eta > 0.0 && rng.uniform() < eta * rate * dt) {
            if (rate < 1e-300) throw std::runtime_error("run_sme: detection with vanishing rate");
            state.rho = op.wjump.cwiseProduct(state.rho) / rate;
            ++n_ph;
            rec.jump_times.push_back(t + dt);
        } else {
            Eigen::MatrixXcd k2, k3, k4, tmp;
            tmp = state.rho + 0.5 * dt * drift;
            detail::sme_drift(op, wcoef, eta, tmp, k2);
            tmp = state.rho + 0.5 * dt * k2;
            detail::sme_drift(op, wcoef, eta, tmp, k3);
            tmp = state.rho + dt * k3;
            detail::sme_drift(op, wcoef, eta, tmp, k4);
            state.rho += (dt / 6.0) * (drift + 2.0 * k2 + 2.0 * k3 + k4);
            double tr = state.rho.trace().real();
            if (tr < 1e-12) throw std::runtime_error("run_sme: trace collapsed");
            state.rho /= tr;
            state.rho = 0.5 * (state.rho + state.rho.adjoint()).eval();
        }
        t += dt;
        if (t >= ts - 1e-12) {
            sample();
            ++next_sample;
        }
    }
    return rec;
}

// deterministic unconditional reference (the eta = 0 Lindblad flow)
inline TrajectoryRecord run_lindblad(const SmeOperator& op, const MeasurementGeometry& geom,
                                     const SmeOptions& opt) {
    return run_sme(op, geom, 0.0, opt, Rng(0, 0), 0);
}

// Bernoulli thinning of a detection record: keep each event with probability eta
inline std::vector<double> thin_detections(const std::vector<double>& times, double eta, Rng& rng) {
    std::vector<double> kept;
    for (double t : times)
        if (rng.uniform() < eta) kept.push_back(t);
    return kept;
}

} // namespace latmon
