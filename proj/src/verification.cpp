#include "mechlearn/verification.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>
#include <vector>

#include "mechlearn/quadrature.hpp"
#include "mechlearn/rng.hpp"
#include "mechlearn/workers.hpp"

namespace mechlearn {

namespace {

// Linear payoff parameters (a, b) of the option obtained by reporting t:
// U(t; s) = a s - b.
std::pair<double, double> report_payoff_line(const MonotoneThresholdMechanism& mech,
                                             const LikelihoodTails& tails, double t) {
    const ThresholdPiece& p = mech.piece_at(t);
    switch (p.kind) {
        case PieceKind::Exclude:
            return {0.0, 0.0};
        case PieceKind::Pooled:
            return slope_intercept(p.kappa, p.tau, tails);
        case PieceKind::EfficientTail: {
            const double tau = t > 0.0 ? (1.0 - t) / t : 1e300;
            return slope_intercept(1.0, tau, tails);
        }
    }
    return {0.0, 0.0};
}

}  // namespace

nlohmann::json FeasibilityReport::to_json() const {
    nlohmann::json j{{"ic_min_margin", ic_min_margin},
                     {"ir_min", ir_min},
                     {"envelope_residual", envelope_residual},
                     {"monotone_x_min_slack", monotone_x_min_slack}};
    if (!std::isnan(epic_violation_mass)) j["epic_violation_mass"] = epic_violation_mass;
    if (!std::isnan(value_mc)) {
        j["value_mc"] = value_mc;
        j["value_mc_se"] = value_mc_se;
    }
    return j;
}

FeasibilityReport check_feasibility(const MonotoneThresholdMechanism& mech, int grid_n,
                                    const LikelihoodTails* tails_in) {
    LikelihoodTails local;
    if (!tails_in) {
        local = LikelihoodTails::make(mech.dist, mech.market_size - 1);
        tails_in = &local;
    }
    const double lo = mech.dist.support_lo(), hi = mech.dist.support_hi();
    const double step = (hi - lo) / (grid_n - 1);

    std::vector<double> a(grid_n), b(grid_n), grid(grid_n);
    for (int j = 0; j < grid_n; ++j) {
        grid[j] = lo + j * step;
        std::tie(a[j], b[j]) = report_payoff_line(mech, *tails_in, grid[j]);
    }

    FeasibilityReport rep;
    rep.ic_min_margin = 1e300;
    rep.ir_min = 1e300;
    rep.monotone_x_min_slack = 1e300;
    for (int i = 0; i < grid_n; ++i) {
        const double s = grid[i];
        const double truthful = a[i] * s - b[i];
        rep.ir_min = std::min(rep.ir_min, truthful);
        for (int j = 0; j < grid_n; ++j)
            rep.ic_min_margin = std::min(rep.ic_min_margin, truthful - (a[j] * s - b[j]));
        if (i + 1 < grid_n) rep.monotone_x_min_slack = std::min(rep.monotone_x_min_slack, a[i + 1] - a[i]);
    }

    // Envelope identity: cumulative of 2^{n-1} X(t) = a(t) against the
    // utility increment, with the integral split at piece boundaries (a is
    // constant on pooled pieces and smooth on the efficient tail).
    auto a_at = [&](double t) { return report_payoff_line(mech, *tails_in, t).first; };
    auto integral_piecewise = [&](double x, double y) {
        double total = 0.0;
        for (const auto& p : mech.pieces) {
            const double seg_lo = std::max(x, p.lo), seg_hi = std::min(y, p.hi);
            if (seg_hi <= seg_lo) continue;
            if (p.kind == PieceKind::EfficientTail) {
                const int sub = 16;
                double acc = 0.0;
                double prev = a_at(seg_lo);
                for (int q = 1; q <= sub; ++q) {
                    const double t = seg_lo + (seg_hi - seg_lo) * q / sub;
                    const double cur = a_at(t);
                    acc += 0.5 * (prev + cur) * (seg_hi - seg_lo) / sub;
                    prev = cur;
                }
                total += acc;
            } else {
                total += a_at(0.5 * (seg_lo + seg_hi)) * (seg_hi - seg_lo);
            }
        }
        return total;
    };
    rep.envelope_residual = 0.0;
    double cum = 0.0;
    const double u0 = a[0] * grid[0] - b[0];
    for (int i = 1; i < grid_n; ++i) {
        cum += integral_piecewise(grid[i - 1], grid[i]);
        const double u = a[i] * grid[i] - b[i];
        rep.envelope_residual = std::max(rep.envelope_residual, std::abs(cum - (u - u0)));
    }
    return rep;
}

FeasibilityReport check_epic(const MonotoneThresholdMechanism& mech, int belief_grid,
                             const LikelihoodTails* tails_in) {
    LikelihoodTails local;
    if (!tails_in) {
        local = LikelihoodTails::make(mech.dist, mech.market_size - 1);
        tails_in = &local;
    }
    const BeliefDistribution& d = mech.dist;
    const double lo = d.support_lo(), hi = d.support_hi();
    const double step = (hi - lo) / belief_grid;

    // Best allocation any report can reach when the others' LR equals ell.
    auto max_available = [&](double ell) {
        double best = 0.0;
        for (const auto& p : mech.pieces) {
            switch (p.kind) {
                case PieceKind::Exclude: break;
                case PieceKind::Pooled:
                    if (ell >= p.tau) best = std::max(best, p.kappa);
                    break;
                case PieceKind::EfficientTail:
                    if (p.hi > 0.0 && ell >= (1.0 - p.hi) / p.hi) best = std::max(best, 1.0);
                    break;
            }
        }
        return best;
    };

    auto violates = [&](double s, double ell) {
        const double x = evaluate(mech, s, ell);
        const double log_full = std::log(lr_point(s)) + std::log(ell);
        if (log_full < 0.0 && x > 1e-12) return true;                       // allocates against the posterior
        if (log_full > 0.0 && x < max_available(ell) - 1e-12) return true;  // ex-post profitable misreport
        return false;
    };

    double mass = 0.0;
    for (State w : {State::Plus, State::Minus}) {
        const GridDistribution& g = w == State::Plus ? tails_in->plus : tails_in->minus;
        // belief-cell midpoints against the others'-LR grid cells
        std::vector<double> cell_mass(belief_grid), cell_mid(belief_grid);
        for (int i = 0; i < belief_grid; ++i) {
            cell_mid[i] = lo + (i + 0.5) * step;
            cell_mass[i] = conditional_pdf(d, cell_mid[i], w) * step;
        }
        double acc = 0.0;
        for (int k = 0; k < g.npoints; ++k) {
            if (g.mass[k] <= 1e-15) continue;
            const double ell = std::exp(g.z(k));
            double inner = 0.0;
            for (int i = 0; i < belief_grid; ++i)
                if (violates(cell_mid[i], ell)) inner += cell_mass[i];
            acc += g.mass[k] * inner;
        }
        // clipped tails: treat as extreme likelihood ratios
        for (double atom_ell : {std::exp(-2.0 * g.log_range), std::exp(2.0 * g.log_range)}) {
            const double am = atom_ell < 1.0 ? g.atom_neg : g.atom_pos;
            if (am <= 0.0) continue;
            double inner = 0.0;
            for (int i = 0; i < belief_grid; ++i)
                if (violates(cell_mid[i], atom_ell)) inner += cell_mass[i];
            acc += am * inner;
        }
        mass += 0.5 * acc;
    }

    FeasibilityReport rep = check_feasibility(mech, 201, tails_in);
    rep.epic_violation_mass = mass;
    return rep;
}

McEstimate mc_value(const MonotoneThresholdMechanism& mech, std::size_t samples,
                    std::uint64_t seed, int workers) {
    const int nw = resolve_workers(workers);
    const BeliefDistribution& d = mech.dist;
    const ConditionalSampler sampler_plus(d, State::Plus);
    const ConditionalSampler sampler_minus(d, State::Minus);
    const int others = mech.market_size - 1;

    std::vector<double> sums(nw, 0.0), sumsqs(nw, 0.0);
    std::vector<std::size_t> counts(nw, 0);
    auto run_worker = [&](int w) {
        const std::size_t chunk = samples / nw + (w < static_cast<int>(samples % nw) ? 1 : 0);
        RngStream rng(seed, static_cast<std::uint64_t>(w));
        double sum = 0.0, sumsq = 0.0;
        for (std::size_t i = 0; i < chunk; ++i) {
            const bool plus = rng.next_u64() & 1;
            const ConditionalSampler& sampler = plus ? sampler_plus : sampler_minus;
            const double s_own = sampler.draw(rng);
            double log_lr = 0.0;
            for (int k = 0; k < others; ++k) {
                const double s = sampler.draw(rng);
                log_lr += std::log(s) - std::log1p(-s);
            }
            const double x = evaluate(mech, s_own, std::exp(log_lr));
            sum += x;
            sumsq += x * x;
        }
        sums[w] = sum;
        sumsqs[w] = sumsq;
        counts[w] = chunk;
    };
    if (nw == 1) {
        run_worker(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(nw);
        for (int w = 0; w < nw; ++w) pool.emplace_back(run_worker, w);
        for (auto& t : pool) t.join();
    }

    double sum = 0.0, sumsq = 0.0;
    std::size_t count = 0;
    for (int w = 0; w < nw; ++w) {  // fixed order keeps the reduction deterministic
        sum += sums[w];
        sumsq += sumsqs[w];
        count += counts[w];
    }
    McEstimate est;
    est.mean = sum / static_cast<double>(count);
    const double var = std::max(0.0, sumsq / static_cast<double>(count) - est.mean * est.mean);
    est.se = std::sqrt(var / static_cast<double>(count));
    return est;
}

std::pair<bool, bool> convex_order_vs_majorization(std::span<const double> x,
                                                   std::span<const double> h,
                                                   std::span<const double> g, double tol) {
    const std::size_t n = x.size();
    if (h.size() != n || g.size() != n || n < 2)
        throw Error("convex_order_vs_majorization: malformed inputs");
    if (std::abs(h.back() - g.back()) > 1e-10)
        throw EndpointMismatch("cumulatives disagree at the right endpoint by " +
                               std::to_string(std::abs(h.back() - g.back())));

    // Majorization of H by G: partial integrals of H dominate those of G,
    // with equality at the right end.
    bool majorizes = true;
    double cum = 0.0;
    for (std::size_t j = 0; j + 1 < n; ++j) {
        cum += (h[j] - g[j]) * (x[j + 1] - x[j]);
        if (cum < -tol) majorizes = false;
    }
    if (std::abs(cum) > tol) majorizes = false;

    // Convex order of the increments: hinge tests at the grid points plus
    // +-affine tests.
    std::vector<double> dmu(n);
    dmu[0] = h[0] - g[0];
    for (std::size_t j = 1; j < n; ++j) dmu[j] = (h[j] - h[j - 1]) - (g[j] - g[j - 1]);
    bool convex_order = true;
    double mass = 0.0, first_moment = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        mass += dmu[j];
        first_moment += x[j] * dmu[j];
    }
    if (std::abs(mass) > tol || std::abs(first_moment) > tol) convex_order = false;
    const std::size_t hinge_count = std::min<std::size_t>(n, 200);
    for (std::size_t t = 0; t < hinge_count && convex_order; ++t) {
        const std::size_t k = t * (n - 1) / (hinge_count - 1);
        double integral = 0.0;
        for (std::size_t j = 0; j < k; ++j) integral += (x[k] - x[j]) * dmu[j];
        if (integral < -tol) convex_order = false;
    }
    return {convex_order, majorizes};
}

}  // namespace mechlearn
