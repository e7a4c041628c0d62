#include "mechlearn/first_best.hpp"

#include <algorithm>
#include <cmath>

#include "mechlearn/quadrature.hpp"

namespace mechlearn {

namespace {

double interp(const std::vector<double>& grid, const std::vector<double>& vals, double s) {
    if (s <= grid.front()) return vals.front();
    if (s >= grid.back()) return vals.back();
    const double step = grid[1] - grid[0];
    const double pos = (s - grid.front()) / step;
    const std::size_t k = std::min<std::size_t>(grid.size() - 2, static_cast<std::size_t>(pos));
    const double t = pos - static_cast<double>(k);
    return vals[k] + t * (vals[k + 1] - vals[k]);
}

// Greatest convex minorant of (grid, vals) via a monotone-chain lower hull,
// evaluated back onto the grid.
std::vector<double> convex_minorant(const std::vector<double>& grid, const std::vector<double>& vals) {
    const std::size_t n = grid.size();
    std::vector<std::size_t> hull;
    for (std::size_t i = 0; i < n; ++i) {
        while (hull.size() >= 2) {
            const std::size_t a = hull[hull.size() - 2], b = hull[hull.size() - 1];
            const double cross = (grid[b] - grid[a]) * (vals[i] - vals[a]) -
                                 (grid[i] - grid[a]) * (vals[b] - vals[a]);
            if (cross <= 0.0)
                hull.pop_back();
            else
                break;
        }
        hull.push_back(i);
    }
    std::vector<double> out(n);
    std::size_t seg = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (seg + 1 < hull.size() && hull[seg + 1] <= i) ++seg;
        if (hull[seg] == i || seg + 1 == hull.size()) {
            out[i] = vals[hull[seg]];
        } else {
            const std::size_t a = hull[seg], b = hull[seg + 1];
            const double t = (grid[i] - grid[a]) / (grid[b] - grid[a]);
            out[i] = vals[a] + t * (vals[b] - vals[a]);
        }
    }
    return out;
}

}  // namespace

double efficient_utility(const LikelihoodTails& tails, double s) {
    if (s <= 0.0) return 0.0;  // positive mass would earn -1 almost surely
    if (s >= 1.0) return tails.prob(State::Plus, 0.0);
    const double tau = (1.0 - s) / s;
    return s * tails.prob(State::Plus, tau) - (1.0 - s) * tails.prob(State::Minus, tau);
}

double EnvelopeBounds::lower_at(double s) const { return std::max(0.0, 2.0 * s - 1.0); }

double EnvelopeBounds::upper_at(double s) const { return interp(grid, upper, s); }

EnvelopeBounds efficient_envelope(const LikelihoodTails& tails, int market_size, int grid_k) {
    if (market_size < 2) throw Error("efficient_envelope: market size must be at least 2");
    EnvelopeBounds b;
    b.market_size = market_size;
    b.grid.resize(grid_k);
    b.lower.resize(grid_k);
    std::vector<double> raw(grid_k);
    const double step = 1.0 / (grid_k - 1);
    for (int i = 0; i < grid_k; ++i) {
        const double s = i * step;
        b.grid[i] = s;
        b.lower[i] = std::max(0.0, 2.0 * s - 1.0);
        raw[i] = efficient_utility(tails, s);
    }
    // Quadrature noise can leave tiny convexity violations; project onto the
    // convex cone and keep the upper bound above the lower one.
    std::vector<double> projected = convex_minorant(b.grid, raw);
    double max_adj = 0.0;
    for (int i = 0; i < grid_k; ++i) {
        max_adj = std::max(max_adj, std::abs(projected[i] - raw[i]));
        projected[i] = std::max(projected[i], b.lower[i]);
    }
    b.upper = std::move(projected);
    b.max_convexify_adjustment = max_adj;
    if (max_adj >= 1e-6)
        throw Error("efficient_envelope: convexification moved a value by " + std::to_string(max_adj));
    return b;
}

EnvelopeBounds efficient_envelope(const BeliefDistribution& d, int market_size, int grid_k,
                                  int log_bins, double log_range) {
    const LikelihoodTails tails = LikelihoodTails::make(d, market_size - 1, log_bins, log_range);
    return efficient_envelope(tails, market_size, grid_k);
}

EnvelopeBounds asymptotic_envelope(int grid_k) {
    EnvelopeBounds b;
    b.market_size = 0;
    b.grid.resize(grid_k);
    b.lower.resize(grid_k);
    b.upper.resize(grid_k);
    const double step = 1.0 / (grid_k - 1);
    for (int i = 0; i < grid_k; ++i) {
        const double s = i * step;
        b.grid[i] = s;
        b.lower[i] = std::max(0.0, 2.0 * s - 1.0);
        b.upper[i] = s;
    }
    return b;
}

double efficient_value(const BeliefDistribution& d, const LikelihoodTails& tails) {
    double value = 0.0;
    for (State w : {State::Plus, State::Minus}) {
        value += 0.5 * integrate(
                           [&](double s) {
                               const double tau = s > 0.0 ? (1.0 - s) / s : 0.0;
                               const double tp = s > 0.0 ? tails.prob(w, tau) : 0.0;
                               return tp * conditional_pdf(d, s, w);
                           },
                           d.support_lo(), d.support_hi(), 512);
    }
    return value;
}

double efficient_value(const BeliefDistribution& d, int market_size, int log_bins, double log_range) {
    const LikelihoodTails tails = LikelihoodTails::make(d, market_size - 1, log_bins, log_range);
    return efficient_value(d, tails);
}

}  // namespace mechlearn
