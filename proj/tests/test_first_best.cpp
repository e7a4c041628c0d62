#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mechlearn/distributions.hpp"
#include "mechlearn/first_best.hpp"
#include "mechlearn/quadrature.hpp"

using namespace mechlearn;

namespace {

// Oracle for the two-agent efficient value: P[allocate] with allocation iff
// LR(s1) LR(s2) >= 1, under the true correlated joint law
// (1/2) [f_+1(s1) f_+1(s2) + f_-1(s1) f_-1(s2)].
double efficient_value_oracle_n2(const BeliefDistribution& d) {
    double v = 0.0;
    for (State w : {State::Plus, State::Minus}) {
        v += 0.5 * integrate(
                       [&](double s1) {
                           const double cut = 1.0 - s1;  // LR(s1)LR(s2)>=1 <=> s1+s2>=1
                           return conditional_pdf(d, s1, w) *
                                  integrate([&](double s2) { return conditional_pdf(d, s2, w); },
                                            cut, 1.0, 64);
                       },
                       1e-12, 1.0 - 1e-12, 256);
    }
    return v;
}

}  // namespace

TEST_CASE("uniform two-agent envelope is s^2") {
    const auto u = BeliefDistribution::uniform();
    const auto env = efficient_envelope(u, 2);
    double sup = 0.0;
    for (std::size_t i = 0; i < env.grid.size(); ++i)
        sup = std::max(sup, std::abs(env.upper[i] - env.grid[i] * env.grid[i]));
    CHECK(sup <= 1e-3);

    // derivative at 3/4 equals 3/2 by central difference
    const int k = 1500;  // s = 0.75 on the 2001-point grid
    const double h = env.grid[1] - env.grid[0];
    const double deriv = (env.upper[k + 1] - env.upper[k - 1]) / (2.0 * h);
    CHECK(deriv == doctest::Approx(1.5).epsilon(0.01 / 1.5));

    CHECK(env.upper.front() == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(env.upper.back() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(env.max_convexify_adjustment < 1e-6);
}

TEST_CASE("envelope invariants") {
    for (const auto& d : {BeliefDistribution::uniform(), BeliefDistribution::beta_symmetric(2.0),
                          BeliefDistribution::truncated_normal(0.2)}) {
        const auto env = efficient_envelope(d, 3);
        const std::size_t n = env.grid.size();
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(env.lower[i] == std::max(0.0, 2.0 * env.grid[i] - 1.0));
            CHECK(env.upper[i] >= env.lower[i] - 1e-9);
            CHECK(env.upper[i] <= env.grid[i] + 1e-6);  // dominated by the limit bound
        }
        for (std::size_t i = 0; i + 1 < n; ++i) CHECK(env.upper[i + 1] >= env.upper[i] - 1e-9);
        for (std::size_t i = 1; i + 1 < n; ++i)
            CHECK(env.upper[i - 1] - 2.0 * env.upper[i] + env.upper[i + 1] >= -1e-9);
    }
}

TEST_CASE("envelope matches its own interim-allocation integral") {
    // U(s) - U(0) = 2^{n-1} ∫ X with 2^{n-1} X(t) = T_+((1-t)/t) + T_-((1-t)/t).
    const auto d = BeliefDistribution::beta_symmetric(2.0);
    const int n = 3;
    const auto tails = LikelihoodTails::make(d, n - 1);
    const auto env = efficient_envelope(tails, n);
    const std::size_t k = env.grid.size();
    const double h = env.grid[1] - env.grid[0];
    std::vector<double> a(k);
    for (std::size_t i = 0; i < k; ++i) {
        const double s = env.grid[i];
        if (s <= 0.0) {
            a[i] = 0.0;
        } else {
            const double tau = (1.0 - s) / s;
            a[i] = tails.prob(State::Plus, tau) + tails.prob(State::Minus, tau);
        }
    }
    double integral = 0.0, sup = 0.0, supd = 0.0;
    for (std::size_t i = 1; i < k; ++i) {
        integral += 0.5 * h * (a[i - 1] + a[i]);
        sup = std::max(sup, std::abs(integral - (env.upper[i] - env.upper.front())));
        if (i + 1 < k) {
            const double central = (env.upper[i + 1] - env.upper[i - 1]) / (2.0 * h);
            supd = std::max(supd, std::abs(central - a[i]));
        }
    }
    CHECK(sup <= 1e-3);
    CHECK(supd <= 1e-3);

    // strict convexity in the interior for a full-support family
    for (std::size_t i = k / 10; i + k / 10 < k; ++i)
        CHECK(env.upper[i - 1] - 2.0 * env.upper[i] + env.upper[i + 1] > 0.0);
}

TEST_CASE("envelopes increase with market size toward the identity") {
    const auto u = BeliefDistribution::uniform();
    const auto asym = asymptotic_envelope();
    EnvelopeBounds prev;
    for (int n : {2, 3, 5, 10, 20}) {
        const auto env = efficient_envelope(u, n);
        if (!prev.grid.empty()) {
            for (std::size_t i = 0; i < env.grid.size(); ++i)
                CHECK(env.upper[i] >= prev.upper[i] - 1e-6);
        }
        for (std::size_t i = 0; i < env.grid.size(); ++i)
            CHECK(env.upper[i] <= asym.upper[i] + 1e-6);
        prev = env;
    }
    CHECK(asym.upper[600] == doctest::Approx(0.3));
    CHECK(asym.upper.back() == doctest::Approx(1.0));
}

TEST_CASE("efficient value against the 2-D oracle") {
    const auto u = BeliefDistribution::uniform();
    const double v = efficient_value(u, 2);
    CHECK(v == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(v == doctest::Approx(efficient_value_oracle_n2(u)).epsilon(1e-3));

    const auto b2 = BeliefDistribution::beta_symmetric(2.0);
    CHECK(efficient_value(b2, 2) == doctest::Approx(efficient_value_oracle_n2(b2)).epsilon(1e-3));

    for (int n : {2, 3, 5}) {
        const double val = efficient_value(u, n);
        CHECK(val >= 0.0);
        CHECK(val <= 1.0);
    }
}
