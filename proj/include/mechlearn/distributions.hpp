#pragma once

#include <string>
#include <vector>

#include "mechlearn/errors.hpp"
#include "mechlearn/rng.hpp"

#include <json.hpp>

namespace mechlearn {

/// Binary state of the world.
enum class State : int { Minus = -1, Plus = +1 };

inline State other(State w) { return w == State::Plus ? State::Minus : State::Plus; }

/// Likelihood ratio of a single private belief, s / (1 - s).
/// Strictly increasing on [0, 1); returns +infinity at s = 1.
double lr_point(double s);

struct ValidationReport {
    double norm_error = 0.0;       // |∫ f - 1|
    double mean_error = 0.0;       // |∫ s f - 1/2|
    double min_density = 0.0;      // min f over the interior grid
    double deriv_ratio_bound = 0.0;  // max |f'/f| over the interior grid
    bool log_concave = false;
    bool symmetric_about_half = false;
    bool passed = false;
};

/// Unconditional density f of the private belief s = P(w=+1 | signal) on an
/// interval support. Immutable after construction; safe to share across
/// threads. State-conditional densities follow from the belief normalization:
/// f_{+1}(s) = 2 s f(s) and f_{-1}(s) = 2 (1 - s) f(s).
class BeliefDistribution {
  public:
    enum class Family { Uniform, BetaSymmetric, TruncatedNormal, Tabulated };

    BeliefDistribution() = default;  // the uniform family

    static BeliefDistribution uniform();
    static BeliefDistribution beta_symmetric(double alpha);
    /// Normal density centered at 1/2 with scale sigma, truncated to (0, 1).
    static BeliefDistribution truncated_normal(double sigma);
    /// Piecewise-linear density through (s_i, f_i); the grid must be uniform.
    static BeliefDistribution tabulated(std::vector<double> s, std::vector<double> f);
    static BeliefDistribution from_json(const nlohmann::json& spec);
    /// Two-column CSV (s, f(s)) for a tabulated density.
    static BeliefDistribution tabulated_from_csv(const std::string& path);

    double support_lo() const { return lo_; }
    double support_hi() const { return hi_; }
    Family family() const { return family_; }
    bool log_concave() const { return log_concave_; }
    bool symmetric_about_half() const { return symmetric_; }

    /// f(s). Endpoint values are one-sided limits of the interior density.
    double pdf(double s) const;
    /// f'(s), piecewise slope for tabulated densities.
    double pdf_deriv(double s) const;
    /// Unconditional CDF F(s).
    double cdf(double s) const;

    nlohmann::json describe() const;

    /// Numerical checks: normalization, Bayes plausibility of the mean,
    /// positivity, |f'/f| bound, log-concavity and symmetry on a 1001-point
    /// grid. Throws InvalidDistribution when normalization or mean error
    /// exceeds 1e-6.
    ValidationReport validate() const;

  private:
    void detect_flags();

    Family family_ = Family::Uniform;
    double lo_ = 0.0, hi_ = 1.0;
    double alpha_ = 1.0;                // beta shape
    double sigma_ = 1.0;                // truncated-normal scale
    double norm_const_ = 1.0;           // family normalization constant
    std::vector<double> tab_s_, tab_f_;  // tabulated nodes
    bool log_concave_ = true, symmetric_ = true;
};

/// State-conditional density 2s f(s) or 2(1-s) f(s).
/// Throws OutOfSupport when s is outside [support_lo, support_hi].
double conditional_pdf(const BeliefDistribution& d, double s, State w);

/// P[s in [a, b] | w] by quadrature of the conditional density.
double conditional_prob(const BeliefDistribution& d, double a, double b, State w);

/// Inverse-CDF sampler for the conditional law F_w, built by cumulative
/// quadrature of the conditional density on a uniform grid.
class ConditionalSampler {
  public:
    ConditionalSampler(const BeliefDistribution& d, State w, int grid_points = 4097);

    double draw(RngStream& rng) const;
    /// The piecewise-linear CDF the sampler inverts (for distribution tests).
    double cdf(double s) const;

  private:
    std::vector<double> s_, cum_;
};

}  // namespace mechlearn
