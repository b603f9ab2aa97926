#pragma once

// Measurement geometry: diffraction coefficients J_jj, the partition of the
// chain into spatial modes of equal coefficient, the per-mode weights beta,
// and the inter-mode bond structure that defines the effective R-well problem.

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace latmon {

using cd = std::complex<double>;

enum class Boundary { open, periodic };

struct LatticeSpec {
    int M = 0;
    Boundary boundary = Boundary::periodic;
};

enum class ProbeKind { traveling, standing };

struct ProbeSpec {
    ProbeKind kind = ProbeKind::traveling;
    double delta = 0.0;        // per-site phase: k-vector difference (traveling) or k.r increment (standing)
    double phase_offset = 0.0; // standing only: node alignment offset
};

struct MeasurementGeometry {
    std::vector<cd> jjj;           // coefficient per site
    std::vector<int> mode_of_site; // site -> mode index
    int R = 0;
    std::vector<cd> beta;            // common J_jj value of each mode
    std::vector<int> mode_size;      // sites per mode
    std::vector<std::vector<int>> coupling; // bonds from a representative site of mode i to mode j
    std::vector<std::vector<int>> total_bonds; // total i-j bond count over the lattice
    bool local_warning = false;  // R == M, measurement resolves every site
    bool uniform_neighbors = true; // every site sees the same per-mode neighbor counts as its representative

    int sites() const { return static_cast<int>(jjj.size()); }

    // beta rotated so the first nonzero weight is real positive; engines use
    // this so that configurations differing by a global phase run bit-identically
    std::vector<cd> canonical_beta() const {
        std::vector<cd> out = beta;
        for (const cd& b : beta) {
            if (std::abs(b) > 0.0) {
                cd phase = std::conj(b) / std::abs(b);
                for (cd& v : out) v *= phase;
                break;
            }
        }
        return out;
    }

    // collective enhancement factor g = K_ij / sqrt(M_i M_j); the reduced
    // engine's J is the collective rate, the lattice per-bond rate is J/g.
    // Requires g to be the same for every coupled pair.
    double collective_g() const {
        double g = 0.0;
        for (int i = 0; i < R; ++i) {
            for (int j = i + 1; j < R; ++j) {
                if (total_bonds[i][j] == 0) continue;
                double gij = total_bonds[i][j] / std::sqrt(double(mode_size[i]) * mode_size[j]);
                if (g == 0.0)
                    g = gij;
                else if (std::abs(g - gij) > 1e-9 * g)
                    throw std::runtime_error("geometry: non-uniform collective enhancement");
            }
        }
        return g == 0.0 ? 1.0 : g;
    }
};

inline std::vector<cd> compute_jjj(const LatticeSpec& lattice, const ProbeSpec& probe) {
    if (lattice.M < 2) throw std::invalid_argument("lattice: M must be >= 2");
    std::vector<cd> jjj(lattice.M);
    for (int j = 0; j < lattice.M; ++j) {
        if (probe.kind == ProbeKind::traveling) {
            jjj[j] = std::exp(cd(0.0, probe.delta * j));
        } else {
            double c = std::cos(probe.delta * j + probe.phase_offset);
            jjj[j] = c * c;
        }
    }
    return jjj;
}

inline std::vector<int> site_neighbors(const LatticeSpec& lattice, int site) {
    std::vector<int> nb;
    if (site > 0) nb.push_back(site - 1);
    if (site + 1 < lattice.M) nb.push_back(site + 1);
    if (lattice.boundary == Boundary::periodic && lattice.M > 2) {
        if (site == 0) nb.push_back(lattice.M - 1);
        if (site == lattice.M - 1) nb.push_back(0);
    }
    return nb;
}

inline MeasurementGeometry partition_modes(const std::vector<cd>& jjj, const LatticeSpec& lattice,
                                           double tol = 1e-9) {
    if (tol <= 0.0) throw std::invalid_argument("partition_modes: tol must be > 0");
    if (static_cast<int>(jjj.size()) != lattice.M)
        throw std::invalid_argument("partition_modes: coefficient list does not match lattice");

    MeasurementGeometry g;
    g.jjj = jjj;
    g.mode_of_site.assign(jjj.size(), -1);
    for (std::size_t s = 0; s < jjj.size(); ++s) {
        for (int m = 0; m < g.R; ++m) {
            if (std::abs(jjj[s] - g.beta[m]) <= tol) {
                g.mode_of_site[s] = m;
                break;
            }
        }
        if (g.mode_of_site[s] < 0) {
            g.mode_of_site[s] = g.R++;
            g.beta.push_back(jjj[s]);
        }
    }
    // a coefficient within tol of zero is zero (keeps jump-operator kernels exact)
    for (cd& b : g.beta)
        if (std::abs(b) <= tol) b = 0.0;
    g.mode_size.assign(g.R, 0);
    for (int m : g.mode_of_site) ++g.mode_size[m];
    g.local_warning = (g.R == lattice.M);

    // bond counts, per representative site and total
    g.coupling.assign(g.R, std::vector<int>(g.R, 0));
    g.total_bonds.assign(g.R, std::vector<int>(g.R, 0));
    std::vector<int> rep(g.R, -1);
    for (int s = 0; s < lattice.M; ++s)
        if (rep[g.mode_of_site[s]] < 0) rep[g.mode_of_site[s]] = s;
    for (int m = 0; m < g.R; ++m)
        for (int nb : site_neighbors(lattice, rep[m])) ++g.coupling[m][g.mode_of_site[nb]];
    for (int s = 0; s < lattice.M; ++s)
        for (int nb : site_neighbors(lattice, s))
            if (nb > s) ++g.total_bonds[g.mode_of_site[s]][g.mode_of_site[nb]];
    // symmetrize the total bond count (each bond counted once above)
    for (int i = 0; i < g.R; ++i)
        for (int j = 0; j < i; ++j) {
            g.total_bonds[i][j] += g.total_bonds[j][i];
            g.total_bonds[j][i] = g.total_bonds[i][j];
        }

    g.uniform_neighbors = true;
    for (int s = 0; s < lattice.M && g.uniform_neighbors; ++s) {
        std::vector<int> counts(g.R, 0);
        for (int nb : site_neighbors(lattice, s)) ++counts[g.mode_of_site[nb]];
        if (counts != g.coupling[g.mode_of_site[s]]) g.uniform_neighbors = false;
    }
    return g;
}

inline std::vector<std::vector<int>> mode_coupling_graph(const MeasurementGeometry& geom) {
    return geom.coupling;
}

// geometry built straight from a probe description
inline MeasurementGeometry make_geometry(const LatticeSpec& lattice, const ProbeSpec& probe,
                                         double tol = 1e-9) {
    return partition_modes(compute_jjj(lattice, probe), lattice, tol);
}

// explicit mode weights on an alternating pattern, for tests and configs that
// specify beta directly (e.g. beta = (1,-1) on an even/odd chain)
inline MeasurementGeometry geometry_from_jjj(const std::vector<cd>& jjj, Boundary boundary,
                                             double tol = 1e-9) {
    LatticeSpec lat{static_cast<int>(jjj.size()), boundary};
    return partition_modes(jjj, lat, tol);
}

} // namespace latmon
