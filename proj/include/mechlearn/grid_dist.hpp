#pragma once

#include <vector>

#include "mechlearn/distributions.hpp"
#include "mechlearn/errors.hpp"

namespace mechlearn {

inline constexpr int kDefaultLogBins = 8193;    // power of two plus one
inline constexpr double kDefaultLogRange = 40.0;
inline constexpr double kMaxClippedAtomMass = 1e-4;

/// The aggregate log-LR drifts linearly in the signal count (its mean under
/// w=+1 is about +m for the uniform family), so the grid range must grow
/// with m to keep the clipped atoms inside their budget.
inline double auto_log_range(int signal_count) {
    return signal_count <= 1 ? kDefaultLogRange : kDefaultLogRange + 3.0 * signal_count;
}

/// Discretized distribution of the sum of log-likelihood ratios of
/// `signal_count` conditionally independent signals, given a state. Point k
/// carries the probability of the centered cell
/// [z_k - step/2, z_k + step/2) around z_k = -log_range + k * step.
/// Mass clipped past either end of the grid accumulates in the two atoms.
struct GridDistribution {
    double log_range = kDefaultLogRange;
    int npoints = kDefaultLogBins;
    double step = 0.0;
    std::vector<double> mass;
    double atom_neg = 0.0, atom_pos = 0.0;
    State state = State::Plus;
    int signal_count = 1;

    double z(int k) const { return -log_range + k * step; }
    double interior_mass() const;
    double total_mass() const;

    /// suffix[k] = sum of mass[j] for j >= k; suffix[npoints] = 0.
    const std::vector<double>& suffix() const { return suffix_; }
    void finalize();  // builds the suffix table and checks mass accounting

  private:
    std::vector<double> suffix_;
};

/// Distribution of log(s / (1 - s)) for a single belief s ~ F_w, binned onto
/// the grid by exact cell quadrature. Throws RangeTooSmall when the clipped
/// atoms exceed kMaxClippedAtomMass.
GridDistribution single_log_lr(const BeliefDistribution& d, State w,
                               int npoints = kDefaultLogBins,
                               double log_range = kDefaultLogRange);

/// Distribution of the sum of two independent grid-aligned variables.
GridDistribution convolve(const GridDistribution& a, const GridDistribution& b);

/// Distribution of the sum of m independent copies of `base`; m = 0 is the
/// unit atom at 0 (an empty product of likelihood ratios equals 1).
GridDistribution convolve_m(const GridDistribution& base, int m);

/// P[LR >= tau | state] = P[sum of log LRs >= log tau]. tau = 0 returns
/// exactly 1 (the event is sure). Sub-cell resolution comes from a local
/// quadratic CDF model fitted to neighboring cell masses.
double tail_prob(const GridDistribution& g, double tau);

/// Both state-conditional aggregate-LR distributions for a market where each
/// agent faces `others` = n - 1 opponents. A nonpositive log_range requests
/// auto_log_range(others).
struct LikelihoodTails {
    GridDistribution plus, minus;

    static LikelihoodTails make(const BeliefDistribution& d, int others,
                                int npoints = kDefaultLogBins, double log_range = 0.0);

    double prob(State w, double tau) const {
        return tail_prob(w == State::Plus ? plus : minus, tau);
    }
};

}  // namespace mechlearn
