#include "mechlearn/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "mechlearn/simplex.hpp"

namespace mechlearn {

ObjectiveWeights objective_weights(const BeliefDistribution& d, int grid_k) {
    ObjectiveWeights w;
    const double lo = d.support_lo(), hi = d.support_hi();
    const double step = (hi - lo) / (grid_k - 1);
    w.grid.resize(grid_k);
    w.interior.resize(grid_k);
    for (int i = 0; i < grid_k; ++i) {
        const double s = lo + i * step;
        w.grid[i] = s;
        w.interior[i] = -3.0 * (1.0 - 2.0 * s) * d.pdf(s) - 2.0 * s * (1.0 - s) * d.pdf_deriv(s);
    }
    w.atom_lo = -2.0 * lo * (1.0 - lo) * d.pdf(lo);
    w.atom_hi = 2.0 * hi * (1.0 - hi) * d.pdf(hi);
    return w;
}

double IndirectUtility::at(double s) const {
    if (s <= grid.front()) return values.front();
    if (s >= grid.back()) return values.back();
    const double step = grid[1] - grid[0];
    const double pos = (s - grid.front()) / step;
    const std::size_t k = std::min<std::size_t>(grid.size() - 2, static_cast<std::size_t>(pos));
    const double t = pos - static_cast<double>(k);
    return values[k] + t * (values[k + 1] - values[k]);
}

void IndirectUtility::validate(const EnvelopeBounds* bounds) const {
    const std::size_t n = grid.size();
    if (n < 3 || values.size() != n) throw NonConvexUtility("utility grid malformed");
    const double step = grid[1] - grid[0];
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double diff = values[i + 1] - values[i];
        if (diff < -1e-9) throw NonConvexUtility("utility not increasing");
        if (diff > 2.0 * step + 1e-9) throw NonConvexUtility("utility not 2-Lipschitz");
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (values[i - 1] - 2.0 * values[i] + values[i + 1] < -1e-9)
            throw NonConvexUtility("utility not convex");
    }
    if (bounds) {
        for (std::size_t i = 0; i < n; ++i) {
            const double lo = bounds->lower_at(grid[i]);
            const double hi = bounds->upper_at(grid[i]);
            if (values[i] < lo - 1e-8 || values[i] > hi + 1e-8)
                throw NonConvexUtility("utility leaves the envelope box at s=" +
                                       std::to_string(grid[i]));
        }
    }
}

double objective_value(const ObjectiveWeights& w, const IndirectUtility& u) {
    const std::size_t n = w.grid.size();
    const double step = w.grid[1] - w.grid[0];
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double trap = (i == 0 || i + 1 == n) ? 0.5 * step : step;
        sum += trap * w.interior[i] * u.at(w.grid[i]);
    }
    sum += w.atom_hi * u.at(w.grid.back());
    sum += w.atom_lo * u.at(w.grid.front());
    return sum;
}

namespace {

// LP over grid values: rows are the K-2 second differences (>= 0), the first
// forward difference (>= 0) and the last one (<= 2*step); monotonicity and
// the Lipschitz cap at interior points follow from convexity. Box bounds are
// variable bounds, so the all-slack basis at U = lower is feasible.
lp::Problem build_problem(const std::vector<double>& grid, const std::vector<double>& lower,
                          const std::vector<double>& upper, const std::vector<double>& objective) {
    const int k = static_cast<int>(grid.size());
    const double step = grid[1] - grid[0];
    lp::Problem p;
    const int rows = k;
    p.row_lo.assign(rows, 0.0);
    p.row_hi.assign(rows, lp::kInfinity);
    p.cols.resize(k);
    for (int j = 0; j + 2 < k; ++j) {  // convexity row j: U_j - 2U_{j+1} + U_{j+2}
        p.cols[j].emplace_back(j, 1.0);
        p.cols[j + 1].emplace_back(j, -2.0);
        p.cols[j + 2].emplace_back(j, 1.0);
    }
    const int mono_row = k - 2;
    p.cols[0].emplace_back(mono_row, -1.0);
    p.cols[1].emplace_back(mono_row, 1.0);
    const int lip_row = k - 1;
    p.cols[k - 2].emplace_back(lip_row, -1.0);
    p.cols[k - 1].emplace_back(lip_row, 1.0);
    p.row_lo[lip_row] = -lp::kInfinity;
    p.row_hi[lip_row] = 2.0 * step;
    p.col_lo = lower;
    p.col_hi = upper;
    p.objective = objective;
    return p;
}

// Trapezoid weights of V against LP grid values, atoms folded into the end
// coefficients of the support.
std::vector<double> lp_objective(const ObjectiveWeights& w, const std::vector<double>& grid) {
    const int k = static_cast<int>(grid.size());
    std::vector<double> c(k, 0.0);
    const double wstep = w.grid[1] - w.grid[0];
    const double gstep = grid[1] - grid[0];
    const bool same = w.grid.size() == grid.size() &&
                      std::abs(w.grid.front() - grid.front()) < 1e-12 &&
                      std::abs(w.grid.back() - grid.back()) < 1e-12;
    if (same) {
        for (int i = 0; i < k; ++i) {
            const double trap = (i == 0 || i + 1 == k) ? 0.5 * wstep : wstep;
            c[i] += trap * w.interior[i];
        }
        c[0] += w.atom_lo;
        c[k - 1] += w.atom_hi;
        return c;
    }
    // Distinct grids: distribute each weighted quadrature node onto the two
    // surrounding LP grid points (transpose of linear interpolation).
    auto deposit = [&](double s, double amount) {
        const double pos = std::clamp((s - grid.front()) / gstep, 0.0, static_cast<double>(k - 1));
        const int j = std::min(k - 2, static_cast<int>(pos));
        const double t = pos - j;
        c[j] += amount * (1.0 - t);
        c[j + 1] += amount * t;
    };
    const int kw = static_cast<int>(w.grid.size());
    for (int i = 0; i < kw; ++i) {
        const double trap = (i == 0 || i + 1 == kw) ? 0.5 * wstep : wstep;
        deposit(w.grid[i], trap * w.interior[i]);
    }
    deposit(w.grid.front(), w.atom_lo);
    deposit(w.grid.back(), w.atom_hi);
    return c;
}

IndirectUtility run_two_stage(const ObjectiveWeights& w, const EnvelopeBounds& bounds,
                              LpStats* stats) {
    const int k = static_cast<int>(bounds.grid.size());
    const std::vector<double> c = lp_objective(w, bounds.grid);
    lp::Problem p = build_problem(bounds.grid, bounds.lower, bounds.upper, c);
    lp::BoundedSimplex solver(std::move(p));
    lp::Solution first = solver.solve();
    if (first.status != lp::Status::Optimal) throw Error("solve_reduced: iteration limit reached");

    // Lexicographic tie-break: among V-optimal points, minimize the grid sum.
    std::vector<std::pair<int, double>> vrow;
    for (int j = 0; j < k; ++j)
        if (c[j] != 0.0) vrow.emplace_back(j, c[j]);
    const double slack = 1e-10 * std::max(1.0, std::abs(first.objective));
    solver.add_row(vrow, first.objective - slack, lp::kInfinity);
    solver.set_objective(std::vector<double>(k, -1.0));
    lp::Solution second = solver.resolve();
    if (second.status != lp::Status::Optimal) throw Error("solve_reduced: tie-break stage stalled");

    IndirectUtility u;
    u.grid = bounds.grid;
    u.values = second.x;
    // Snap residual LP tolerance out of the box so downstream validation sees
    // clean values.
    for (int i = 0; i < k; ++i)
        u.values[i] = std::clamp(u.values[i], bounds.lower[i], bounds.upper[i]);
    if (stats) {
        stats->iterations = first.iterations;
        stats->tie_iterations = second.iterations;
        stats->value = first.objective;
        stats->tie_sum = -second.objective;
    }
    u.validate(&bounds);
    return u;
}

}  // namespace

IndirectUtility solve_reduced(const ObjectiveWeights& w, const EnvelopeBounds& bounds,
                              LpStats* stats) {
    for (std::size_t i = 0; i < bounds.grid.size(); ++i) {
        if (bounds.lower[i] > bounds.upper[i] + 1e-12)
            throw InfeasibleLP("envelope bounds cross at s=" + std::to_string(bounds.grid[i]));
    }
    return run_two_stage(w, bounds, stats);
}

IndirectUtility solve_asymptotic(const ObjectiveWeights& w, int grid_k, LpStats* stats) {
    return run_two_stage(w, asymptotic_envelope(grid_k), stats);
}

StructureReport check_extreme_structure(const IndirectUtility& u, const EnvelopeBounds& bounds,
                                        double tol) {
    const int k = static_cast<int>(u.grid.size());
    std::vector<RegionKind> kind(k);
    std::vector<bool> pinched(k, false);
    for (int i = 0; i < k; ++i) {
        const double lo = bounds.lower_at(u.grid[i]);
        const double hi = bounds.upper_at(u.grid[i]);
        const bool at_lo = std::abs(u.values[i] - lo) <= tol;
        const bool at_hi = std::abs(u.values[i] - hi) <= tol;
        if (at_lo && at_hi) {
            pinched[i] = true;  // box shut: joins whichever region surrounds it
            kind[i] = RegionKind::AtLower;
        } else if (at_lo) {
            kind[i] = RegionKind::AtLower;
        } else if (at_hi) {
            kind[i] = RegionKind::AtUpper;
        } else {
            kind[i] = RegionKind::Between;
        }
    }
    for (int i = k - 2; i >= 0; --i)
        if (pinched[i] && !pinched[i + 1]) kind[i] = kind[i + 1];
    for (int i = 1; i < k; ++i)
        if (pinched[i]) kind[i] = kind[i - 1];

    StructureReport rep;
    int start = 0;
    for (int i = 1; i <= k; ++i) {
        if (i == k || kind[i] != kind[start]) {
            rep.regions.push_back({start, i - 1, kind[start]});
            start = i;
        }
    }
    // The lower bound max{0, 2s-1} kinks at 1/2; a region pinned to it on
    // both sides of the kink is two distinct pieces (exclusion vs the
    // always-allocate rule), so split it there.
    for (std::size_t r = 0; r < rep.regions.size(); ++r) {
        Region& reg = rep.regions[r];
        if (reg.kind != RegionKind::AtLower) continue;
        if (u.grid[reg.first] < 0.5 - 1e-12 && u.grid[reg.last] > 0.5 + 1e-12) {
            int split = reg.first;
            while (u.grid[split] < 0.5) ++split;
            const Region upper_part{split, reg.last, RegionKind::AtLower};
            reg.last = split - 1;
            rep.regions.insert(rep.regions.begin() + static_cast<long>(r) + 1, upper_part);
        }
    }
    for (const Region& r : rep.regions) {
        if (r.kind != RegionKind::Between || r.last <= r.first) continue;
        const double sa = u.grid[r.first], sb = u.grid[r.last];
        const double ua = u.values[r.first], ub = u.values[r.last];
        for (int i = r.first; i <= r.last; ++i) {
            const double t = (u.grid[i] - sa) / (sb - sa);
            const double chord = ua + t * (ub - ua);
            if (std::abs(u.values[i] - chord) > tol)
                throw StructureViolation(
                    "strictly-interior region [" + std::to_string(sa) + "," + std::to_string(sb) +
                    "] is non-linear (deviation " + std::to_string(std::abs(u.values[i] - chord)) +
                    "); re-solve with vertex-selection tie-break");
        }
    }
    // Kinks: slope jumps beyond tolerance, scaled by the grid step.
    const double step = u.grid[1] - u.grid[0];
    for (int i = 1; i + 1 < k; ++i) {
        const double d2 = u.values[i - 1] - 2.0 * u.values[i] + u.values[i + 1];
        if (d2 > 10.0 * tol * step) rep.kink_indices.push_back(i);
    }
    return rep;
}

}  // namespace mechlearn
