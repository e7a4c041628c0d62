#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mechlearn/distributions.hpp"
#include "mechlearn/first_best.hpp"
#include "mechlearn/optimizer.hpp"
#include "mechlearn/rng.hpp"

using namespace mechlearn;

namespace {

IndirectUtility lower_candidate(const EnvelopeBounds& b) {
    return {b.grid, b.lower};
}

IndirectUtility upper_candidate(const EnvelopeBounds& b) {
    return {b.grid, b.upper};
}

// Brute-force extreme-point family on a coarse kink lattice. Shapes that end
// on the upper bound need the middle line tangent to it, so the upper contact
// point q determines the exclusion kink p = q - upper(q)/upper'(q); shapes
// that end on the lower bound take a chord from (p, 0) to (q, lower(q)).
// Infeasible shapes are skipped.
double bauer_lattice_max(const ObjectiveWeights& w, const EnvelopeBounds& b, int lattice = 41) {
    double best = -1e18;
    const int k = static_cast<int>(b.grid.size());
    auto try_candidate = [&](const IndirectUtility& u) {
        try {
            u.validate(&b);
        } catch (const NonConvexUtility&) {
            return;
        }
        best = std::max(best, objective_value(w, u));
    };
    auto upper_slope = [&](double q) {
        const double h = b.grid[1] - b.grid[0];
        return (b.upper_at(std::min(1.0, q + h)) - b.upper_at(std::max(0.0, q - h))) /
               (std::min(1.0, q + h) - std::max(0.0, q - h));
    };
    // whole-interval candidates
    try_candidate({b.grid, b.lower});
    try_candidate({b.grid, b.upper});
    for (int iq = 1; iq < lattice; ++iq) {
        const double q = iq / static_cast<double>(lattice - 1);
        // tangent family: zero, then the tangent of the upper bound at q,
        // then the upper bound itself
        {
            const double a = upper_slope(q);
            if (a > 1e-12) {
                const double p = q - b.upper_at(q) / a;
                IndirectUtility u;
                u.grid = b.grid;
                u.values.resize(k);
                for (int i = 0; i < k; ++i) {
                    const double s = b.grid[i];
                    if (s <= q)
                        u.values[i] = std::max(0.0, a * (s - p));
                    else
                        u.values[i] = b.upper[i];
                }
                try_candidate(u);
            }
        }
        // chord-to-lower family over lattice pairs (p, q)
        for (int ip = 0; ip < iq; ++ip) {
            const double p = ip / static_cast<double>(lattice - 1);
            const double target = b.lower_at(q);
            const double slope = target / (q - p);
            IndirectUtility u;
            u.grid = b.grid;
            u.values.resize(k);
            for (int i = 0; i < k; ++i) {
                const double s = b.grid[i];
                if (s <= p)
                    u.values[i] = 0.0;
                else if (s <= q)
                    u.values[i] = slope * (s - p);
                else
                    u.values[i] = b.lower[i];
            }
            try_candidate(u);
        }
    }
    return best;
}

}  // namespace

TEST_CASE("objective weights for the uniform family") {
    const auto u = BeliefDistribution::uniform();
    const auto w = objective_weights(u);
    CHECK(w.interior.front() == doctest::Approx(-3.0));
    CHECK(w.interior[(w.interior.size() - 1) / 2] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(w.interior.back() == doctest::Approx(3.0));
    CHECK(w.atom_lo == doctest::Approx(0.0));
    CHECK(w.atom_hi == doctest::Approx(0.0));

    // V(upper envelope) reproduces the efficient value.
    const auto env = efficient_envelope(u, 2);
    const double v_env = objective_value(w, upper_candidate(env));
    CHECK(v_env == doctest::Approx(efficient_value(u, 2)).epsilon(1e-3));
    CHECK(v_env == doctest::Approx(0.5).epsilon(1e-3));
}

TEST_CASE("log-concave weight ratio is monotone, so g crosses zero once") {
    // The normalized weight g(s) / (2 s (1-s) f(s)) runs from -inf to +inf
    // monotonically for log-concave f (the uniform case -3(1-2s)/(2s(1-s))
    // shows the direction is increasing), giving the single sign change that
    // the certificate machinery relies on.
    for (const auto& d : {BeliefDistribution::uniform(), BeliefDistribution::beta_symmetric(2.0),
                          BeliefDistribution::truncated_normal(0.2)}) {
        const auto w = objective_weights(d, 801);
        double prev = -1e300;
        int sign_changes = 0;
        for (std::size_t i = 1; i + 1 < w.grid.size(); ++i) {
            const double s = w.grid[i];
            const double ratio = w.interior[i] / (2.0 * s * (1.0 - s) * d.pdf(s));
            CHECK(ratio >= prev - 1e-9);
            if (prev < 0.0 && ratio >= 0.0) ++sign_changes;
            prev = ratio;
        }
        CHECK(sign_changes == 1);
    }
}

TEST_CASE("uniform two-agent optimum: thresholds 3/8 and 3/4") {
    const auto u = BeliefDistribution::uniform();
    const auto w = objective_weights(u);
    const auto env = efficient_envelope(u, 2);
    LpStats stats;
    const auto sol = solve_reduced(w, env, &stats);
    sol.validate(&env);

    // Exact designer value of the continuum optimum is 539/1024.
    CHECK(stats.value == doctest::Approx(539.0 / 1024.0).epsilon(5e-4 / 0.52));

    const auto rep = check_extreme_structure(sol, env, 1e-6);
    REQUIRE(rep.regions.size() == 3);
    CHECK(rep.regions[0].kind == RegionKind::AtLower);
    CHECK(rep.regions[1].kind == RegionKind::Between);
    CHECK(rep.regions[2].kind == RegionKind::AtUpper);
    const double s_min = env.grid[rep.regions[1].first];
    const double s_max = env.grid[rep.regions[2].first];
    CHECK(s_min == doctest::Approx(0.375).epsilon(0.005 / 0.375));
    CHECK(s_max == doctest::Approx(0.75).epsilon(0.005 / 0.75));

    // dominance over simple candidates
    CHECK(stats.value >= objective_value(w, lower_candidate(env)) - 1e-9);
    CHECK(stats.value >= objective_value(w, upper_candidate(env)) + 1e-3);
}

TEST_CASE("exclusion at the bottom for full-support families") {
    for (const auto& d : {BeliefDistribution::uniform(), BeliefDistribution::beta_symmetric(2.0),
                          BeliefDistribution::truncated_normal(0.2)}) {
        const auto w = objective_weights(d);
        const auto env = efficient_envelope(d, 2);
        const auto sol = solve_reduced(w, env);
        const auto rep = check_extreme_structure(sol, env, 1e-6);
        REQUIRE(rep.regions.front().kind == RegionKind::AtLower);
        const int cells = rep.regions.front().last - rep.regions.front().first;
        CHECK(cells >= 1);
        CHECK(sol.values[rep.regions.front().last] <= 1e-8);
    }
}

TEST_CASE("degenerate zero weights return the lower envelope") {
    const auto u = BeliefDistribution::uniform();
    auto w = objective_weights(u);
    std::fill(w.interior.begin(), w.interior.end(), 0.0);
    w.atom_lo = w.atom_hi = 0.0;
    const auto env = efficient_envelope(u, 2);
    const auto sol = solve_reduced(w, env);
    for (std::size_t i = 0; i < sol.values.size(); ++i)
        CHECK(sol.values[i] == doctest::Approx(env.lower[i]).epsilon(1e-9));
}

TEST_CASE("Bauer lattice proxy brackets the LP optimum") {
    for (const auto& d : {BeliefDistribution::uniform(), BeliefDistribution::beta_symmetric(2.0)}) {
        const auto w = objective_weights(d);
        const auto env = efficient_envelope(d, 2);
        LpStats stats;
        (void)solve_reduced(w, env, &stats);
        const double lattice = bauer_lattice_max(w, env, 41);
        CHECK(stats.value >= lattice - 1e-9);
        CHECK(std::abs(stats.value - lattice) <= 2e-3);
    }
}

TEST_CASE("asymptotic solve matches the rotated-line solution") {
    const auto u = BeliefDistribution::uniform();
    const auto w = objective_weights(u);
    LpStats stats;
    const auto sol = solve_asymptotic(w, kDefaultGridK, &stats);

    // Hand-derived optimum: zero on [0, 1/4], then the line (4/3) s - 1/3
    // through (1, 1); value 9/16.
    CHECK(stats.value == doctest::Approx(9.0 / 16.0).epsilon(1e-3));
    CHECK(sol.values.back() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(sol.at(0.25) == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(sol.at(0.5) == doctest::Approx(1.0 / 3.0).epsilon(2e-3));
    CHECK(sol.at(0.625) == doctest::Approx(0.5).epsilon(2e-3));

    // V_infinity dominates every finite-market value.
    for (int n : {2, 5, 10}) {
        const auto env = efficient_envelope(u, n);
        LpStats fin;
        (void)solve_reduced(w, env, &fin);
        CHECK(stats.value >= fin.value - 1e-9);
    }
}

TEST_CASE("log-concave symmetric families keep U(1) = 1 in the limit") {
    for (const auto& d : {BeliefDistribution::beta_symmetric(2.0),
                          BeliefDistribution::truncated_normal(0.2)}) {
        const auto w = objective_weights(d);
        const auto sol = solve_asymptotic(w, 1001);
        CHECK(sol.values.back() == doctest::Approx(1.0).epsilon(1e-9));
        // shape of the limit solution: lower envelope outside one interval
        const auto env = asymptotic_envelope(1001);
        const auto rep = check_extreme_structure(sol, env, 1e-6);
        int between = 0;
        for (const auto& r : rep.regions)
            if (r.kind == RegionKind::Between) ++between;
        CHECK(between <= 1);
    }
}

TEST_CASE("narrow tabulated support: weights resample onto the unit grid") {
    // Symmetric triangle density on [0.2, 0.8]; the envelope pinches onto
    // max{0, 2s-1} outside the support band.
    const int rows = 241;
    std::vector<double> s(rows), f(rows);
    for (int i = 0; i < rows; ++i) {
        s[i] = 0.2 + 0.6 * i / (rows - 1);
        f[i] = (1.0 - std::abs(s[i] - 0.5) / 0.3) * 10.0 / 3.0;
    }
    double total = 0.0;
    for (int i = 0; i + 1 < rows; ++i) total += 0.5 * (f[i] + f[i + 1]) * (s[1] - s[0]);
    for (double& v : f) v /= total;
    const auto d = BeliefDistribution::tabulated(s, f);
    d.validate();
    CHECK(d.log_concave());
    CHECK(d.symmetric_about_half());

    const auto w = objective_weights(d);
    CHECK(w.grid.front() == doctest::Approx(0.2));
    CHECK(w.grid.back() == doctest::Approx(0.8));

    const auto env = efficient_envelope(d, 2, 1001);
    CHECK(env.upper_at(0.1) == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(env.upper_at(0.9) == doctest::Approx(0.8).epsilon(1e-3));  // 2s-1 there

    LpStats stats;
    const auto sol = solve_reduced(w, env, &stats);
    sol.validate(&env);
    CHECK(stats.value > 0.0);
    IndirectUtility lower{env.grid, env.lower};
    CHECK(stats.value >= objective_value(w, lower) - 1e-9);
    CHECK(sol.at(0.21) == doctest::Approx(0.0).epsilon(1e-8));  // bottom excluded
}

TEST_CASE("structure report on degenerate candidates") {
    const auto u = BeliefDistribution::uniform();
    const auto env = efficient_envelope(u, 2, 1001);

    IndirectUtility at_upper{env.grid, env.upper};
    const auto rep_up = check_extreme_structure(at_upper, env, 1e-6);
    REQUIRE(rep_up.regions.size() == 1);
    CHECK(rep_up.regions[0].kind == RegionKind::AtUpper);

    IndirectUtility at_lower{env.grid, env.lower};
    const auto rep_lo = check_extreme_structure(at_lower, env, 1e-6);
    REQUIRE(rep_lo.regions.size() == 2);
    CHECK(rep_lo.regions[0].kind == RegionKind::AtLower);
    CHECK(rep_lo.regions[1].kind == RegionKind::AtLower);
    CHECK(env.grid[rep_lo.regions[1].first] == doctest::Approx(0.5).epsilon(2e-3));
}

TEST_CASE("perturbed weights keep the region structure stable") {
    const auto u = BeliefDistribution::uniform();
    const auto env = efficient_envelope(u, 2);
    const auto w = objective_weights(u);
    const auto base_rep = check_extreme_structure(solve_reduced(w, env), env, 1e-6);

    RngStream rng(31337);
    auto perturbed = w;
    for (double& g : perturbed.interior) g += (rng.next_double() - 0.5) * 2e-7;
    const auto rep = check_extreme_structure(solve_reduced(perturbed, env), env, 1e-6);

    REQUIRE(rep.regions.size() == base_rep.regions.size());
    for (std::size_t i = 0; i < rep.regions.size(); ++i) {
        CHECK(rep.regions[i].kind == base_rep.regions[i].kind);
        CHECK(std::abs(rep.regions[i].first - base_rep.regions[i].first) <= 1);
        CHECK(std::abs(rep.regions[i].last - base_rep.regions[i].last) <= 1);
    }
}
