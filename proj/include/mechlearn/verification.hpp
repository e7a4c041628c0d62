#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <utility>

#include "mechlearn/mechanisms.hpp"

namespace mechlearn {

struct FeasibilityReport {
    double ic_min_margin = 0.0;        // worst U(s;s) - U(t;s) over the report grid
    double ir_min = 0.0;               // worst truthful utility
    double envelope_residual = 0.0;    // sup |∫ 2^{n-1}X - (U - U(s_lo))|
    double monotone_x_min_slack = 0.0; // worst forward difference of the interim allocation
    double epic_violation_mass = std::numeric_limits<double>::quiet_NaN();
    double value_mc = std::numeric_limits<double>::quiet_NaN();
    double value_mc_se = std::numeric_limits<double>::quiet_NaN();

    nlohmann::json to_json() const;
};

/// Global incentive compatibility, participation, interim-allocation
/// monotonicity, and the envelope identity, all on a grid_n x grid_n
/// (type, report) grid. Reporting only: failures show up as negative margins.
FeasibilityReport check_feasibility(const MonotoneThresholdMechanism& mech, int grid_n = 201,
                                    const LikelihoodTails* tails = nullptr);

/// Probability mass of profiles where the mechanism allocates against the
/// full-profile posterior (positive allocation with LR < 1) or where a type
/// could gain ex post by misreporting (LR > 1 with a better report available).
FeasibilityReport check_epic(const MonotoneThresholdMechanism& mech, int belief_grid = 801,
                             const LikelihoodTails* tails = nullptr);

struct McEstimate {
    double mean = 0.0;
    double se = 0.0;
};

/// Monte Carlo estimate of the designer value: fair state, conditionally
/// i.i.d. signals, mechanism evaluated on each profile. Workers own
/// counter-based streams keyed by (seed, worker-index); results are
/// bit-reproducible for a fixed worker count (0 = use MECHLEARN_THREADS or
/// the hardware default).
McEstimate mc_value(const MonotoneThresholdMechanism& mech, std::size_t samples,
                    std::uint64_t seed, int workers = 0);

/// Brute-force check of both sides of the majorization / convex-order
/// equivalence for signed measures given by their cumulatives H and G on a
/// common grid: convex order via hinge functions max{0, x - t} at the grid
/// points plus +-affine tests, majorization via partial integrals with
/// equality at the right endpoint. Returns {convex_order, majorizes}.
/// Throws EndpointMismatch when H and G disagree at the right endpoint.
std::pair<bool, bool> convex_order_vs_majorization(std::span<const double> x,
                                                   std::span<const double> h,
                                                   std::span<const double> g, double tol = 1e-9);

}  // namespace mechlearn
