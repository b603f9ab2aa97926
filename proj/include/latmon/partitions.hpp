#pragma once

// Occupation-partition basis for the reduced mode space S_R: all (N_1..N_R)
// with sum N, enumerated in colexicographic order of (N_1..N_{R-1}).

#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace latmon {

class PartitionBasis {
  public:
    PartitionBasis(int modes, int atoms) : R_(modes), N_(atoms) {
        if (modes < 1) throw std::invalid_argument("partition basis: need at least one mode");
        if (atoms < 1) throw std::invalid_argument("partition basis: need at least one atom");
        std::vector<int> occ(R_, 0);
        enumerate(occ, R_ - 2, N_);
        for (std::size_t k = 0; k < states_.size(); ++k) index_[key(states_[k])] = k;
    }

    int modes() const { return R_; }
    int atoms() const { return N_; }
    std::size_t dim() const { return states_.size(); }
    const std::vector<int>& occupation(std::size_t k) const { return states_[k]; }

    std::size_t index(const std::vector<int>& occ) const {
        auto it = index_.find(key(occ));
        if (it == index_.end()) throw std::out_of_range("partition basis: no such occupation");
        return it->second;
    }

    // index of the partition with one atom moved from mode a to mode b, or -1
    std::ptrdiff_t hop_index(std::size_t k, int a, int b) const {
        const auto& occ = states_[k];
        if (occ[a] == 0 || occ[b] == N_) return -1;
        std::vector<int> moved = occ;
        --moved[a];
        ++moved[b];
        auto it = index_.find(key(moved));
        return it == index_.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
    }

  private:
    // colex on (N_1..N_{R-1}): the last free coordinate is the outermost loop
    void enumerate(std::vector<int>& occ, int mode, int remaining) {
        if (mode < 0) {
            occ[R_ - 1] = remaining;
            states_.push_back(occ);
            return;
        }
        for (int n = 0; n <= remaining; ++n) {
            occ[mode] = n;
            enumerate(occ, mode - 1, remaining - n);
        }
    }

    std::uint64_t key(const std::vector<int>& occ) const {
        std::uint64_t k = 0;
        for (int i = 0; i < R_; ++i) k = k * (N_ + 1) + occ[i];
        return k;
    }

    int R_, N_;
    std::vector<std::vector<int>> states_;
    std::unordered_map<std::uint64_t, std::size_t> index_;
};

} // namespace latmon
