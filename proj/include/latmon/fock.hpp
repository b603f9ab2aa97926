#pragma once

// Full-lattice reference: N bosons on M sites in the complete Fock basis,
// evolved with the same trajectory protocol as the reduced engine. Used to
// verify subspace closure and the reduced dynamics on small instances.
//
// The configured J is the collective inter-mode rate of the reduced problem;
// the per-bond lattice amplitude here is J/g with g the geometry's collective
// enhancement (2 for even/odd, 1 for RGB, sqrt(2) for RGBG).

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "latmon/geometry.hpp"
#include "latmon/partitions.hpp"
#include "latmon/trajectory.hpp"

namespace latmon {

class FockBasis {
  public:
    FockBasis(int sites, int atoms) : M_(sites), N_(atoms) {
        std::vector<int> occ(M_, 0);
        enumerate(occ, 0, N_);
        for (std::size_t k = 0; k < states_.size(); ++k) index_[key(states_[k])] = k;
    }

    int sites() const { return M_; }
    int atoms() const { return N_; }
    std::size_t dim() const { return states_.size(); }
    const std::vector<int>& occupation(std::size_t k) const { return states_[k]; }

    std::ptrdiff_t hop_index(std::size_t k, int from, int to) const {
        const auto& occ = states_[k];
        if (occ[from] == 0) return -1;
        std::vector<int> moved = occ;
        --moved[from];
        ++moved[to];
        auto it = index_.find(key(moved));
        return it == index_.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
    }

    static std::size_t dimension(int sites, int atoms) {
        // C(N + M - 1, N)
        double v = 1.0;
        for (int i = 1; i <= atoms; ++i) v *= double(sites - 1 + i) / i;
        return static_cast<std::size_t>(v + 0.5);
    }

  private:
    void enumerate(std::vector<int>& occ, int site, int remaining) {
        if (site == M_ - 1) {
            occ[site] = remaining;
            states_.push_back(occ);
            return;
        }
        for (int n = remaining; n >= 0; --n) {
            occ[site] = n;
            enumerate(occ, site + 1, remaining - n);
        }
    }

    std::uint64_t key(const std::vector<int>& occ) const {
        std::uint64_t k = 0;
        for (int i = 0; i < M_; ++i) k = k * (N_ + 1) + occ[i];
        return k;
    }

    int M_, N_;
    std::vector<std::vector<int>> states_;
    std::unordered_map<std::uint64_t, std::size_t> index_;
};

// orthonormal S_R basis vectors (products of per-mode superfluids) in Fock space
inline Eigen::MatrixXcd subspace_vectors(const FockBasis& fock, const MeasurementGeometry& geom) {
    PartitionBasis part(geom.R, fock.atoms());
    Eigen::MatrixXcd B = Eigen::MatrixXcd::Zero(fock.dim(), part.dim());
    for (std::size_t k = 0; k < fock.dim(); ++k) {
        const auto& occ = fock.occupation(k);
        std::vector<int> nmode(geom.R, 0);
        for (int s = 0; s < fock.sites(); ++s) nmode[geom.mode_of_site[s]] += occ[s];
        std::size_t col = part.index(nmode);
        // prod_m sqrt(N_m! / (M_m^{N_m} prod_{s in m} n_s!))
        double lg = 0.0;
        for (int m = 0; m < geom.R; ++m)
            lg += std::lgamma(nmode[m] + 1.0) - nmode[m] * std::log(double(geom.mode_size[m]));
        for (int s = 0; s < fock.sites(); ++s) lg -= std::lgamma(occ[s] + 1.0);
        B(k, col) = std::exp(0.5 * lg);
    }
    for (Eigen::Index c = 0; c < B.cols(); ++c) B.col(c).normalize();
    return B;
}

inline TrajectoryProblem make_fock_problem(const MeasurementGeometry& geom, Boundary boundary,
                                           double J, double U, double gamma, int N,
                                           bool with_subspace = true,
                                           std::size_t dim_cap = 200000) {
    const int M = geom.sites();
    if (FockBasis::dimension(M, N) > dim_cap)
        throw std::invalid_argument("oracle: Fock dimension exceeds the cap");
    FockBasis fock(M, N);
    LatticeSpec lat{M, boundary};
    const double j_bond = J / geom.collective_g();

    TrajectoryProblem p;
    p.n_modes = geom.R;
    p.n_atoms = N;
    p.gamma = gamma;
    p.name = "oracle";

    // per-site coefficients from the snapped, phase-canonical mode weights so
    // the jump operator matches the reduced engine exactly
    const auto beta = geom.canonical_beta();
    std::vector<cd> jjj(M);
    for (int s = 0; s < M; ++s) jjj[s] = beta[geom.mode_of_site[s]];

    p.jump_eigs.resize(fock.dim());
    p.cdagc.resize(fock.dim());
    p.mode_occ.resize(fock.dim(), geom.R);

    std::vector<Eigen::Triplet<cd>> trip;
    trip.reserve(fock.dim() * (2 * M + 1));
    for (std::size_t k = 0; k < fock.dim(); ++k) {
        const auto& occ = fock.occupation(k);
        cd ceig(0.0, 0.0);
        double uterm = 0.0;
        for (int s = 0; s < M; ++s) {
            ceig += jjj[s] * double(occ[s]);
            uterm += 0.5 * U * occ[s] * (occ[s] - 1);
        }
        p.jump_eigs[k] = ceig;
        p.cdagc[k] = gamma * std::norm(ceig);
        trip.emplace_back(k, k, cd(uterm, -0.5 * p.cdagc[k]));

        std::vector<int> nmode(geom.R, 0);
        for (int s = 0; s < M; ++s) nmode[geom.mode_of_site[s]] += occ[s];
        for (int m = 0; m < geom.R; ++m) p.mode_occ(k, m) = nmode[m];

        for (int s = 0; s < M; ++s) {
            for (int nb : site_neighbors(lat, s)) {
                auto k2 = fock.hop_index(k, s, nb);
                if (k2 < 0) continue;
                double amp = -j_bond * std::sqrt(double(occ[s]) * double(occ[nb] + 1));
                trip.emplace_back(k2, k, cd(amp, 0.0));
            }
        }
    }
    p.heff.resize(fock.dim(), fock.dim());
    p.heff.setFromTriplets(trip.begin(), trip.end());

    // initial lattice superfluid, sqrt(N!/(M^N prod n_s!))
    p.psi0.resize(fock.dim());
    for (std::size_t k = 0; k < fock.dim(); ++k) {
        const auto& occ = fock.occupation(k);
        double lg = std::lgamma(N + 1.0) - N * std::log(double(M));
        for (int s = 0; s < M; ++s) lg -= std::lgamma(occ[s] + 1.0);
        p.psi0[k] = std::exp(0.5 * lg);
    }
    p.psi0.normalize();

    if (with_subspace) p.subspace = subspace_vectors(fock, geom);
    return p;
}

inline TrajectoryRecord oracle_full_lattice(const MeasurementGeometry& geom, Boundary boundary,
                                            double J, double U, double gamma, int N,
                                            const TrajectoryOptions& opt, std::uint64_t master_seed,
                                            std::uint64_t traj_index) {
    auto prob = make_fock_problem(geom, boundary, J, U, gamma, N);
    return run_trajectory_problem(prob, opt, Rng(master_seed, traj_index), traj_index);
}

} // namespace latmon
