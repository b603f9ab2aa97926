#pragma once

// Reduced description on S_R: states over occupation partitions, the
// non-Hermitian effective operator (collective hopping + rescaled interaction
// + measurement decay), the jump map and the initial superfluid decomposition.

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <vector>

#include "latmon/geometry.hpp"
#include "latmon/partitions.hpp"

namespace latmon {

struct ModeState {
    std::shared_ptr<const PartitionBasis> basis;
    Eigen::VectorXcd amps;

    double norm2() const { return amps.squaredNorm(); }

    void normalize() {
        double n2 = norm2();
        if (n2 <= 0.0) throw std::runtime_error("mode state: zero norm");
        amps /= std::sqrt(n2);
    }

    // <N_j> for each mode, normalized
    std::vector<double> mode_means() const {
        const auto& b = *basis;
        std::vector<double> acc(b.modes(), 0.0);
        double n2 = 0.0;
        for (std::size_t k = 0; k < b.dim(); ++k) {
            double w = std::norm(amps[k]);
            n2 += w;
            const auto& occ = b.occupation(k);
            for (int m = 0; m < b.modes(); ++m) acc[m] += w * occ[m];
        }
        for (double& v : acc) v /= n2;
        return acc;
    }

    // marginal occupation distribution of one mode, normalized
    std::vector<double> occupation_distribution(int mode) const {
        const auto& b = *basis;
        std::vector<double> p(b.atoms() + 1, 0.0);
        double n2 = 0.0;
        for (std::size_t k = 0; k < b.dim(); ++k) {
            double w = std::norm(amps[k]);
            n2 += w;
            p[b.occupation(k)[mode]] += w;
        }
        for (double& v : p) v /= n2;
        return p;
    }
};

struct EffectiveOperator {
    std::shared_ptr<const PartitionBasis> basis;
    Eigen::SparseMatrix<cd> heff;  // includes -i(gamma/2)|sum beta_j N_j|^2 on the diagonal
    Eigen::VectorXcd jump_eigs;    // sum_j beta_j N_j per partition (phase-canonical beta)
    Eigen::VectorXd cdagc;         // gamma |sum beta_j N_j|^2 per partition
    double J = 0.0, U = 0.0, gamma = 0.0;

    std::size_t dim() const { return basis->dim(); }

    // i d psi/dt = H_eff psi
    void rhs(const Eigen::VectorXcd& psi, Eigen::VectorXcd& dpsi) const {
        dpsi.noalias() = cd(0.0, -1.0) * (heff * psi);
    }
};

inline EffectiveOperator build_effective_operator(const MeasurementGeometry& geom, double J, double U,
                                                  double gamma, int N) {
    if (geom.R < 1) throw std::invalid_argument("effective operator: empty geometry");
    if (!geom.uniform_neighbors)
        throw std::invalid_argument("effective operator: mode structure is not closed under tunneling");

    EffectiveOperator op;
    op.basis = std::make_shared<PartitionBasis>(geom.R, N);
    op.J = J;
    op.U = U;
    op.gamma = gamma;
    const auto& basis = *op.basis;
    const int R = geom.R;
    const auto beta = geom.canonical_beta();

    op.jump_eigs.resize(basis.dim());
    op.cdagc.resize(basis.dim());

    std::vector<Eigen::Triplet<cd>> trip;
    trip.reserve(basis.dim() * (R * R + 1));
    for (std::size_t k = 0; k < basis.dim(); ++k) {
        const auto& occ = basis.occupation(k);
        cd ceig(0.0, 0.0);
        for (int m = 0; m < R; ++m) ceig += beta[m] * double(occ[m]);
        op.jump_eigs[k] = ceig;
        op.cdagc[k] = gamma * std::norm(ceig);

        cd diag(0.0, -0.5 * op.cdagc[k]);
        if (U != 0.0)
            for (int m = 0; m < R; ++m)
                diag += 0.5 * (U / geom.mode_size[m]) * double(occ[m]) * double(occ[m] - 1);
        trip.emplace_back(k, k, diag);

        // one atom from mode a to mode b, collective amplitude -J sqrt(N_a (N_b + 1))
        for (int a = 0; a < R; ++a) {
            for (int b = 0; b < R; ++b) {
                if (a == b || geom.total_bonds[a][b] == 0) continue;
                auto k2 = basis.hop_index(k, a, b);
                if (k2 < 0) continue;
                double amp = -J * std::sqrt(double(occ[a]) * double(occ[b] + 1));
                trip.emplace_back(k2, k, cd(amp, 0.0));
            }
        }
    }
    op.heff.resize(basis.dim(), basis.dim());
    op.heff.setFromTriplets(trip.begin(), trip.end());
    return op;
}

// decomposition of the lattice superfluid over mode-occupation partitions:
// square roots of the multinomial pmf with weights M_j / M
inline ModeState initial_superfluid(const MeasurementGeometry& geom, int N) {
    ModeState st;
    st.basis = std::make_shared<PartitionBasis>(geom.R, N);
    const auto& basis = *st.basis;
    const int M = geom.sites();

    std::vector<double> logp(geom.R);
    for (int m = 0; m < geom.R; ++m) {
        if (geom.mode_size[m] == 0) throw std::invalid_argument("initial superfluid: empty mode");
        logp[m] = std::log(double(geom.mode_size[m]) / M);
    }
    st.amps.resize(basis.dim());
    for (std::size_t k = 0; k < basis.dim(); ++k) {
        const auto& occ = basis.occupation(k);
        double lg = std::lgamma(N + 1.0);
        for (int m = 0; m < geom.R; ++m) lg += occ[m] * logp[m] - std::lgamma(occ[m] + 1.0);
        st.amps[k] = std::exp(0.5 * lg);
    }
    st.normalize(); // exact up to rounding; the pmf sums to 1
    return st;
}

// photocount backaction: amplitudes scaled by the jump eigenvalue, renormalized
inline void apply_jump(ModeState& state, const EffectiveOperator& op) {
    state.amps.array() *= op.jump_eigs.array();
    double n2 = state.norm2();
    if (n2 < 1e-300)
        throw std::runtime_error("apply_jump: state lies in the kernel of the jump operator");
    state.amps /= std::sqrt(n2);
}

} // namespace latmon
