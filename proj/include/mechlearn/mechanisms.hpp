#pragma once

#include <utility>
#include <vector>

#include "mechlearn/distributions.hpp"
#include "mechlearn/first_best.hpp"
#include "mechlearn/grid_dist.hpp"
#include "mechlearn/optimizer.hpp"

#include <json.hpp>

namespace mechlearn {

enum class PieceKind { Exclude, Pooled, EfficientTail };

/// One interval of the type-space partition with its allocation rule:
/// Exclude never allocates, Pooled allocates kappa * 1{LR(others) >= tau},
/// EfficientTail uses the per-type threshold tau(s) = (1-s)/s so that
/// allocation happens iff the full-profile likelihood ratio is at least 1.
struct ThresholdPiece {
    double lo = 0.0, hi = 1.0;
    PieceKind kind = PieceKind::Exclude;
    double kappa = 0.0;
    double tau = 0.0;
};

struct MonotoneThresholdMechanism {
    BeliefDistribution dist;
    int market_size = 2;
    std::vector<ThresholdPiece> pieces;  // ordered, covering the support

    const ThresholdPiece& piece_at(double s) const;  // throws OutOfSupport

    nlohmann::json to_json() const;
    static MonotoneThresholdMechanism from_json(const nlohmann::json& j);
};

/// Linear indirect utility a s - b generated by the constant rule
/// kappa * 1{LR(others) >= tau}:
///   a = kappa (T_+(tau) + T_-(tau)),   b = kappa T_-(tau).
std::pair<double, double> slope_intercept(double kappa, double tau, const LikelihoodTails& tails);

/// Invert slope_intercept: find (kappa, tau) reproducing the line a s - b,
/// by an inner bisection on log tau (slope match, smallest tau on plateaus)
/// nested in an outer bisection on kappa (intercept match). When bounds are
/// supplied the admissibility of the line is checked first (below the upper
/// envelope, not everywhere below the lower one). Throws LineInfeasible or
/// NoBracket.
std::pair<double, double> solve_line(double a, double b, const LikelihoodTails& tails,
                                     const EnvelopeBounds* bounds = nullptr);

/// The two-threshold mechanism for a given tau: Exclude below
/// s_min(tau) = T_-(tau) / (T_+(tau) + T_-(tau)), Pooled(1, tau) in the
/// middle, EfficientTail above s_max(tau) = 1/(1+tau); both thresholds
/// clamped to the support.
MonotoneThresholdMechanism two_threshold(double tau, const BeliefDistribution& d, int market_size,
                                         const LikelihoodTails* tails = nullptr);

double threshold_s_min(double tau, const LikelihoodTails& tails);
inline double threshold_s_max(double tau) { return 1.0 / (1.0 + tau); }

struct LogConcaveSolution {
    double tau = 0.0;
    MonotoneThresholdMechanism mech;
    /// Left endpoints of every sign-change bracket the scan found; the
    /// returned tau is the root inside the first one.
    std::vector<double> brackets;
};

/// Optimal two-threshold mechanism for log-concave densities, via bisection
/// on the certificate function
///   Phi(tau) = ∫_{s_min*}^{s_max*} (s_max* - t) g(t) dt
///              - 1{s_min(tau) <= s_lo} 2 (s_max* - s_lo) s_lo (1-s_lo) f(s_lo),
/// which starts nonnegative at tau = 0 and ends nonpositive at tau = 1.
/// Throws NotLogConcave when the flags are absent, NoRoot when the scan
/// brackets no sign change.
LogConcaveSolution solve_logconcave(const BeliefDistribution& d, int market_size,
                                    double phi_tol = 1e-8);

struct CertificateReport {
    double sign_value = 0.0;        // the (Sign) integral, must be >= -tol
    double dominance_max = 0.0;     // max of the (Dominance) form, must be <= tol
    double dominance_at_smax = 0.0; // |value at s_max|, must be <= tol
    double g_max_below = 0.0;       // max g below s_min, must be <= tol
    double g_min_above = 0.0;       // min g above s_max, must be >= -tol
    bool passed = false;

    nlohmann::json to_json() const;
};

/// Duality certificate for a two-threshold mechanism. Throws
/// CertificateFailed naming the violated clause.
CertificateReport verify_certificate(const MonotoneThresholdMechanism& mech, double tol = 1e-8);

/// Allocation probability for type s_i when the others' likelihood ratio is
/// lr_others.
double evaluate(const MonotoneThresholdMechanism& mech, double s_i, double lr_others);

/// Expected per-agent allocation probability E[x_i].
double designer_value(const MonotoneThresholdMechanism& mech,
                      const LikelihoodTails* tails = nullptr);

/// Truthful indirect utility of the mechanism on a [0, 1] grid. Validates the
/// shape invariants (and participation); throws NonConvexUtility when the
/// mechanism parameterization is infeasible.
IndirectUtility mechanism_utility(const MonotoneThresholdMechanism& mech,
                                  int grid_k = kDefaultGridK,
                                  const LikelihoodTails* tails = nullptr,
                                  const EnvelopeBounds* bounds = nullptr);

/// Rebuild a mechanism from an LP solution: regions at the upper bound map to
/// EfficientTail, regions on the lower bound to Exclude (below 1/2) or the
/// always-allocate rule Pooled(1, 0) (above), and every strictly-interior
/// linear piece to Pooled(kappa, tau) via solve_line.
MonotoneThresholdMechanism extract_mechanism(const IndirectUtility& u, const EnvelopeBounds& bounds,
                                             const BeliefDistribution& d, int market_size,
                                             const LikelihoodTails* tails = nullptr);

/// Finite-market member of the asymptotically optimal family: the limit
/// solution's middle line a s - b is lowered by the smallest amount that puts
/// it below the market's efficient envelope, then implemented as
/// Exclude / Pooled(kappa(n), tau(n)) / always-allocate.
MonotoneThresholdMechanism asymptotic_family(const BeliefDistribution& d, int market_size,
                                             const IndirectUtility& u_limit,
                                             const LikelihoodTails* tails = nullptr);

/// Sender menu of experiments for the two-agent persuasion reading: one entry
/// per receiver-type interval, each experiment null, a cutoff on the sender
/// belief, or the matching rule (recommend iff s + lambda >= 1). Throws
/// WrongMarketSize unless market_size == 2.
nlohmann::json export_persuasion_menu(const MonotoneThresholdMechanism& mech);

}  // namespace mechlearn
