#pragma once

// Quantum-trajectory driver shared by the reduced mode engine and the
// full-lattice oracle. Both problems have a sparse non-Hermitian generator and
// a diagonal jump operator; the waiting time to the next photocount is sampled
// by the inverse-norm method (draw r ~ U(0,1], integrate until ||psi||^2 = r).

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <cmath>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "latmon/integrator.hpp"
#include "latmon/mode_space.hpp"
#include "latmon/record.hpp"
#include "latmon/rng.hpp"

namespace latmon {

// common surface for the trajectory loop; jump operator is diagonal in basis
struct TrajectoryProblem {
    Eigen::SparseMatrix<cd> heff;   // non-Hermitian generator (decay included)
    Eigen::VectorXcd jump_eigs;     // diagonal of the jump operator (up to sqrt(gamma))
    Eigen::VectorXd cdagc;          // gamma |jump_eigs|^2
    Eigen::MatrixXi mode_occ;       // [basis state][mode] occupation
    Eigen::VectorXcd psi0;          // normalized initial state
    Eigen::MatrixXcd subspace;      // optional: orthonormal S_R vectors (oracle leakage)
    int n_modes = 0;
    int n_atoms = 0;
    double gamma = 0.0;
    std::string name;

    Eigen::Index dim() const { return heff.rows(); }

    void rhs(const Eigen::VectorXcd& psi, Eigen::VectorXcd& dpsi) const {
        dpsi.noalias() = heff * psi;
        dpsi *= cd(0.0, -1.0);
    }

    std::vector<double> mode_means(const Eigen::VectorXcd& psi) const {
        std::vector<double> acc(n_modes, 0.0);
        double n2 = 0.0;
        for (Eigen::Index k = 0; k < psi.size(); ++k) {
            double w = std::norm(psi[k]);
            n2 += w;
            for (int m = 0; m < n_modes; ++m) acc[m] += w * mode_occ(k, m);
        }
        for (double& v : acc) v /= n2;
        return acc;
    }

    std::vector<double> occupation_distribution(const Eigen::VectorXcd& psi, int mode) const {
        std::vector<double> p(n_atoms + 1, 0.0);
        double n2 = 0.0;
        for (Eigen::Index k = 0; k < psi.size(); ++k) {
            double w = std::norm(psi[k]);
            n2 += w;
            p[mode_occ(k, mode)] += w;
        }
        for (double& v : p) v /= n2;
        return p;
    }

    double ccdag_mean(const Eigen::VectorXcd& psi) const {
        double num = 0.0, n2 = 0.0;
        for (Eigen::Index k = 0; k < psi.size(); ++k) {
            double w = std::norm(psi[k]);
            num += w * cdagc[k];
            n2 += w;
        }
        return num / n2;
    }

    double leakage(const Eigen::VectorXcd& psi) const {
        if (subspace.cols() == 0) return 0.0;
        double inside = (subspace.adjoint() * psi).squaredNorm();
        return 1.0 - inside / psi.squaredNorm();
    }

    void apply_jump(Eigen::VectorXcd& psi) const {
        psi.array() *= jump_eigs.array();
        double n2 = psi.squaredNorm();
        if (n2 < 1e-300)
            throw std::runtime_error("apply_jump: state lies in the kernel of the jump operator");
        psi /= std::sqrt(n2);
    }
};

inline TrajectoryProblem make_mode_problem(const MeasurementGeometry& geom, double J, double U,
                                           double gamma, int N) {
    EffectiveOperator op = build_effective_operator(geom, J, U, gamma, N);
    ModeState init = initial_superfluid(geom, N);
    TrajectoryProblem p;
    p.heff = std::move(op.heff);
    p.jump_eigs = std::move(op.jump_eigs);
    p.cdagc = std::move(op.cdagc);
    p.psi0 = init.amps;
    p.n_modes = geom.R;
    p.n_atoms = N;
    p.gamma = gamma;
    p.name = "exact";
    const auto& basis = *op.basis;
    p.mode_occ.resize(basis.dim(), geom.R);
    for (std::size_t k = 0; k < basis.dim(); ++k)
        for (int m = 0; m < geom.R; ++m) p.mode_occ(k, m) = basis.occupation(k)[m];
    return p;
}

struct TrajectoryOptions {
    double horizon = 10.0;
    double sample_dt = 0.05;
    double rtol = 1e-10;
    double atol = 1e-12;
    int distribution_mode = -1;  // record P(N_mode) snapshots for this mode if >= 0
    int distribution_stride = 1; // every k-th sample
};

struct EvolveOutcome {
    bool hit = false;
    double elapsed = 0.0;
};

namespace detail {

// Integrate i dpsi/dt = H_eff psi from (t, psi) until t_end or until
// ||psi||^2 first reaches target (target <= 0 disables the event).
// on_segment(dense_stepper, t0, t1) is invoked for every committed segment.
template <class Stepper, class SegmentFn>
EvolveOutcome advance(Stepper& stepper, double t_end, double target, SegmentFn&& on_segment) {
    Eigen::VectorXcd scratch;
    while (stepper.t() < t_end - 1e-14 * std::max(1.0, t_end)) {
        stepper.step(t_end);
        double t0 = stepper.dense_t0();
        double h = stepper.last_h();
        bool evt = target > 0.0 && stepper.y().squaredNorm() <= target;
        if (!evt) {
            on_segment(stepper, t0, stepper.t());
            continue;
        }
        double coeff[9];
        stepper.norm2_poly(coeff);
        double theta = solve_norm_theta(coeff, target);
        double t_evt = t0 + theta * h;
        // polish by re-integration: one fixed step to t_evt, one Newton correction
        Eigen::VectorXcd y_evt;
        const Eigen::VectorXcd y_start = stepper.dense_start();
        for (int it = 0; it < 2; ++it) {
            stepper.fixed_step(t0, y_start, t_evt - t0, y_evt);
            double n2 = y_evt.squaredNorm();
            if (std::abs(n2 - target) < 1e-13 * target) break;
            stepper.rhs(t_evt, y_evt, scratch);
            double slope = 2.0 * std::real(y_evt.dot(scratch));
            if (slope >= 0.0) break;
            double t_next = t_evt - (n2 - target) / slope;
            t_evt = std::min(std::max(t_next, t0), t0 + h);
        }
        on_segment(stepper, t0, t_evt);
        stepper.reset_state(t_evt, y_evt);
        return {true, t_evt};
    }
    return {false, t_end};
}

} // namespace detail

// Spec-level operation: non-Hermitian evolution of a normalized state until
// the squared norm decays to target_norm2 (or t_max elapses). The state is
// left unnormalized at the stopping point.
inline EvolveOutcome evolve_between_jumps(ModeState& state, const EffectiveOperator& op,
                                          double target_norm2, double t_max, double rtol = 1e-10,
                                          double atol = 1e-12) {
    if (!(target_norm2 > 0.0 && target_norm2 < 1.0))
        throw std::invalid_argument("evolve_between_jumps: target norm^2 must be in (0,1)");
    auto rhs = [&op](double, const Eigen::VectorXcd& y, Eigen::VectorXcd& dy) { op.rhs(y, dy); };
    Dopri5<Eigen::VectorXcd, decltype(rhs)> stepper(rhs, rtol, atol);
    stepper.start(0.0, state.amps);
    auto out = detail::advance(stepper, t_max, op.gamma > 0.0 ? target_norm2 : -1.0,
                               [](auto&, double, double) {});
    state.amps = stepper.y();
    return out;
}

// Full conditioned trajectory: deterministic decay segments separated by
// photocount jumps, observables sampled on a fixed grid via dense output.
inline TrajectoryRecord run_trajectory_problem(const TrajectoryProblem& prob,
                                               const TrajectoryOptions& opt, Rng rng,
                                               std::uint64_t seed_label) {
    TrajectoryRecord rec;
    rec.engine = prob.name;
    rec.seed = seed_label;

    const bool track_leak = prob.subspace.cols() > 0;
    long jump_count = 0;

    Eigen::VectorXcd psi = prob.psi0;
    auto rhs = [&prob](double, const Eigen::VectorXcd& y, Eigen::VectorXcd& dy) {
        prob.rhs(y, dy);
    };
    Dopri5<Eigen::VectorXcd, decltype(rhs)> stepper(rhs, opt.rtol, opt.atol);
    stepper.start(0.0, psi);

    std::size_t next_sample = 0;
    Eigen::VectorXcd dense_buf;
    auto record_sample = [&](double t, const Eigen::VectorXcd& y) {
        rec.times.push_back(t);
        rec.mode_means.push_back(prob.mode_means(y));
        rec.norm2.push_back(y.squaredNorm());
        rec.jumps.push_back(jump_count);
        rec.ccdag.push_back(prob.ccdag_mean(y));
        if (track_leak) rec.extra["leakage"].push_back(prob.leakage(y));
        std::size_t k = rec.times.size() - 1;
        if (opt.distribution_mode >= 0 && k % opt.distribution_stride == 0)
            rec.distributions.emplace_back(
                k, prob.occupation_distribution(y, opt.distribution_mode));
    };
    record_sample(0.0, psi);
    ++next_sample;

    auto on_segment = [&](auto& stp, double t0, double t1) {
        while (true) {
            double ts = next_sample * opt.sample_dt;
            if (ts > t1 + 1e-12 * std::max(1.0, t1) || ts > opt.horizon) break;
            if (ts >= t0) {
                double h = stp.last_h();
                double theta = h > 0.0 ? (ts - stp.dense_t0()) / h : 0.0;
                stp.eval_dense(std::min(std::max(theta, 0.0), 1.0), dense_buf);
                record_sample(ts, dense_buf);
            }
            ++next_sample;
        }
    };

    double target = prob.gamma > 0.0 ? rng.uniform_pos() : -1.0;
    while (stepper.t() < opt.horizon - 1e-12 * std::max(1.0, opt.horizon)) {
        auto out = detail::advance(stepper, opt.horizon, target, on_segment);
        if (!out.hit) break;
        Eigen::VectorXcd y = stepper.y();
        prob.apply_jump(y);
        ++jump_count;
        rec.jump_times.push_back(out.elapsed);
        stepper.reset_state(out.elapsed, y);
        target = rng.uniform_pos();
    }
    rec.final_distribution =
        prob.occupation_distribution(stepper.y(), std::max(opt.distribution_mode, 0));
    return rec;
}

inline TrajectoryRecord run_trajectory(const MeasurementGeometry& geom, double J, double U,
                                       double gamma, int N, const TrajectoryOptions& opt,
                                       std::uint64_t master_seed, std::uint64_t traj_index) {
    auto prob = make_mode_problem(geom, J, U, gamma, N);
    return run_trajectory_problem(prob, opt, Rng(master_seed, traj_index), traj_index);
}

} // namespace latmon
