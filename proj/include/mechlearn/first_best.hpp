#pragma once

#include <vector>

#include "mechlearn/distributions.hpp"
#include "mechlearn/grid_dist.hpp"

namespace mechlearn {

inline constexpr int kDefaultGridK = 2001;

/// Pointwise bounds for every feasible indirect utility: the efficient
/// envelope above and max{0, 2s - 1} below, sampled on a uniform grid
/// over [0, 1].
struct EnvelopeBounds {
    std::vector<double> grid;
    std::vector<double> lower;
    std::vector<double> upper;
    int market_size = 0;
    double max_convexify_adjustment = 0.0;

    double lower_at(double s) const;
    double upper_at(double s) const;  // linear interpolation between grid points
};

/// Interim payoff of the efficient allocation (allocate iff the posterior on
/// the full profile is at least 1/2):
///   U(s) = s * P[LR(s_-i) >= (1-s)/s | +1] - (1-s) * P[LR(s_-i) >= (1-s)/s | -1].
/// The sampled values are convexified by a lower-hull projection; the largest
/// adjustment is recorded and must stay below 1e-6.
EnvelopeBounds efficient_envelope(const BeliefDistribution& d, int market_size,
                                  int grid_k = kDefaultGridK, int log_bins = kDefaultLogBins,
                                  double log_range = 0.0);

/// Same with a precomputed tail pair for market_size - 1 opponents.
EnvelopeBounds efficient_envelope(const LikelihoodTails& tails, int market_size,
                                  int grid_k = kDefaultGridK);

/// Pointwise efficient payoff s T_+((1-s)/s) - (1-s) T_-((1-s)/s) without the
/// convexifying projection.
double efficient_utility(const LikelihoodTails& tails, double s);

/// Large-market limit: the upper bound is the identity.
EnvelopeBounds asymptotic_envelope(int grid_k = kDefaultGridK);

/// Expected per-agent allocation probability of the efficient mechanism.
double efficient_value(const BeliefDistribution& d, int market_size,
                       int log_bins = kDefaultLogBins, double log_range = 0.0);
double efficient_value(const BeliefDistribution& d, const LikelihoodTails& tails);

}  // namespace mechlearn
