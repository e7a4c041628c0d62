#pragma once

#include <vector>

#include "mechlearn/distributions.hpp"
#include "mechlearn/first_best.hpp"

namespace mechlearn {

/// Linear weights of the designer's objective over indirect utilities:
///   V(U) = ∫ g(s) U(s) ds + atom_hi U(s̄) + atom_lo U(s̲),
/// with g(s) = -3 (1 - 2s) f(s) - 2 s (1 - s) f'(s). The scaling makes V(U)
/// the expected per-agent allocation probability of an implementing
/// mechanism.
struct ObjectiveWeights {
    std::vector<double> grid;      // K points on [support_lo, support_hi]
    std::vector<double> interior;  // g at every grid point
    double atom_lo = 0.0;          // -2 s̲ (1-s̲) f(s̲)
    double atom_hi = 0.0;          // +2 s̄ (1-s̄) f(s̄)
};

ObjectiveWeights objective_weights(const BeliefDistribution& d, int grid_k = kDefaultGridK);

/// Grid-sampled candidate indirect utility.
struct IndirectUtility {
    std::vector<double> grid;  // K points on [0, 1]
    std::vector<double> values;

    double at(double s) const;
    /// Convexity, monotonicity, the 2-Lipschitz bound, and (when bounds are
    /// given) the envelope box. Throws NonConvexUtility on a violation.
    void validate(const EnvelopeBounds* bounds = nullptr) const;
};

/// V(U) by trapezoidal quadrature against the weights, with U interpolated
/// onto the weights grid when the grids differ.
double objective_value(const ObjectiveWeights& w, const IndirectUtility& u);

struct LpStats {
    long iterations = 0;
    long tie_iterations = 0;
    double value = 0.0;
    double tie_sum = 0.0;
};

/// Maximize V(U) over the discretized convex function interval: convexity via
/// second differences, monotonicity and the Lipschitz cap on the boundary
/// slopes, box bounds from the envelope. Among optima the solver returns the
/// one with the smallest grid sum (a second lexicographic LP stage), which
/// selects an extreme point deterministically.
IndirectUtility solve_reduced(const ObjectiveWeights& w, const EnvelopeBounds& bounds,
                              LpStats* stats = nullptr);

/// Same problem against the large-market envelope (upper bound s).
IndirectUtility solve_asymptotic(const ObjectiveWeights& w, int grid_k = kDefaultGridK,
                                 LpStats* stats = nullptr);

enum class RegionKind { AtLower, AtUpper, Between };

struct Region {
    int first = 0, last = 0;  // inclusive grid index range
    RegionKind kind = RegionKind::Between;
};

struct StructureReport {
    std::vector<Region> regions;
    std::vector<int> kink_indices;  // grid indices where the slope jumps
};

/// Segment the solution into maximal regions at the lower bound, at the upper
/// bound, or strictly between, verify that every strictly-between region is
/// linear (chord deviation within tol), and report kinks. Throws
/// StructureViolation when a strictly-between region bends beyond tol.
StructureReport check_extreme_structure(const IndirectUtility& u, const EnvelopeBounds& bounds,
                                        double tol = 1e-6);

}  // namespace mechlearn
