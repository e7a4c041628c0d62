#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mechlearn/distributions.hpp"
#include "mechlearn/grid_dist.hpp"
#include "mechlearn/quadrature.hpp"
#include "mechlearn/rng.hpp"

using namespace mechlearn;

namespace {

// Independent oracle: P[LR(s_1) LR(s_2) >= tau | w] by 2-D Gauss-Legendre
// quadrature of the conditional joint density.
double two_signal_tail_oracle(const BeliefDistribution& d, State w, double tau) {
    return integrate(
        [&](double s1) {
            const double lr1 = s1 / (1.0 - s1);
            // need lr2 >= tau / lr1  <=>  s2 >= (tau/lr1) / (1 + tau/lr1)
            const double r = tau / lr1;
            const double cut = std::min(1.0, r / (1.0 + r));
            return conditional_pdf(d, s1, w) *
                   integrate([&](double s2) { return conditional_pdf(d, s2, w); }, cut, 1.0, 64);
        },
        1e-12, 1.0 - 1e-12, 256);
}

}  // namespace

TEST_CASE("single-signal log-LR grid hits closed-form tails") {
    const auto u = BeliefDistribution::uniform();
    const auto gp = single_log_lr(u, State::Plus);
    const auto gm = single_log_lr(u, State::Minus);

    // P[log LR >= 0 | +1] = P[s >= 1/2 | +1] = 3/4 and 1/4 under -1.
    CHECK(tail_prob(gp, 1.0) == doctest::Approx(0.75).epsilon(1e-4));
    CHECK(tail_prob(gm, 1.0) == doctest::Approx(0.25).epsilon(1e-4));

    // Exact closed forms at several thresholds: with q = tau/(1+tau),
    // P[LR >= tau | +1] = 1 - q^2 and P[LR >= tau | -1] = (1-q)^2.
    for (double tau : {0.1, 1.0 / 3.0, 0.7, 2.0, 9.0}) {
        const double q = tau / (1.0 + tau);
        CHECK(tail_prob(gp, tau) == doctest::Approx(1.0 - q * q).epsilon(2e-6));
        CHECK(tail_prob(gm, tau) == doctest::Approx((1.0 - q) * (1.0 - q)).epsilon(2e-6));
    }

    CHECK(tail_prob(gp, 0.0) == 1.0);
    CHECK(tail_prob(gp, 1e30) <= gp.atom_pos + 1e-12);

    // symmetric family: median under +1 is minus the median under -1
    auto median = [](const GridDistribution& g) {
        double cum = g.atom_neg;
        for (int k = 0; k < g.npoints; ++k) {
            cum += g.mass[k];
            if (cum >= 0.5) return g.z(k);
        }
        return g.z(g.npoints - 1);
    };
    CHECK(std::abs(median(gp) + median(gm)) <= gp.step + 1e-12);
}

TEST_CASE("m-fold convolution against the 2-D quadrature oracle") {
    const auto u = BeliefDistribution::uniform();
    const auto base = single_log_lr(u, State::Plus);
    const auto g2 = convolve_m(base, 2);
    CHECK(tail_prob(g2, 1.0) == doctest::Approx(two_signal_tail_oracle(u, State::Plus, 1.0)).epsilon(1e-3));
    for (double tau : {0.25, 2.0}) {
        CHECK(tail_prob(g2, tau) ==
              doctest::Approx(two_signal_tail_oracle(u, State::Plus, tau)).epsilon(1e-3));
    }

    const auto b2 = BeliefDistribution::beta_symmetric(2.0);
    const auto bbase = single_log_lr(b2, State::Minus);
    const auto bg2 = convolve_m(bbase, 2);
    CHECK(tail_prob(bg2, 0.8) ==
          doctest::Approx(two_signal_tail_oracle(b2, State::Minus, 0.8)).epsilon(1e-3));
}

TEST_CASE("convolution identities") {
    const auto u = BeliefDistribution::uniform();
    const auto base = single_log_lr(u, State::Plus);

    const auto g0 = convolve_m(base, 0);
    CHECK(g0.mass[(g0.npoints - 1) / 2] == doctest::Approx(1.0));
    CHECK(tail_prob(g0, 0.999) == doctest::Approx(1.0));
    CHECK(tail_prob(g0, 1.001) == doctest::Approx(0.0));

    const auto g1 = convolve_m(base, 1);
    for (int k = 0; k < base.npoints; k += 97)
        CHECK(g1.mass[k] == doctest::Approx(base.mass[k]).epsilon(1e-12));

    // associativity: base^(2+3) == base^2 * base^3
    const auto lhs = convolve_m(base, 5);
    const auto rhs = convolve(convolve_m(base, 2), convolve_m(base, 3));
    double sup = 0.0;
    for (int k = 0; k < lhs.npoints; ++k) sup = std::max(sup, std::abs(lhs.mass[k] - rhs.mass[k]));
    CHECK(sup <= 1e-9);
}

TEST_CASE("tails are monotone and MLRP-ordered") {
    const auto d = BeliefDistribution::truncated_normal(0.2);
    const auto tails = LikelihoodTails::make(d, 2);
    double prev_p = 1.0, prev_m = 1.0;
    for (int i = 0; i <= 60; ++i) {
        const double tau = std::exp(-6.0 + 0.2 * i);
        const double tp = tails.prob(State::Plus, tau);
        const double tm = tails.prob(State::Minus, tau);
        CHECK(tp <= prev_p + 1e-12);
        CHECK(tm <= prev_m + 1e-12);
        CHECK(tp >= tm - 1e-12);
        prev_p = tp;
        prev_m = tm;
    }
}

TEST_CASE("reduction identity against Monte Carlo") {
    // 2^m * ∫ Π s_k 1{LR >= tau} dF⊗ = P[LR(s_1..m) >= tau | +1], and the
    // (1-s_k) version for state -1. The Monte Carlo estimator samples from
    // the product of the unconditional marginal F.
    const auto d = BeliefDistribution::beta_symmetric(2.0);
    RngStream rng(99);
    // Build an unconditional sampler as a fair mixture of the conditionals.
    ConditionalSampler sp(d, State::Plus), sm(d, State::Minus);
    for (int m : {1, 2, 3}) {
        const auto tails = LikelihoodTails::make(d, m);
        const double tau = 0.9;
        const std::size_t trials = 1000000;
        double acc_p = 0.0, acc_m = 0.0, acc_p2 = 0.0, acc_m2 = 0.0;
        for (std::size_t t = 0; t < trials; ++t) {
            double prod_s = 1.0, prod_1ms = 1.0, loglr = 0.0;
            for (int k = 0; k < m; ++k) {
                const double s = (rng.next_u64() & 1) ? sp.draw(rng) : sm.draw(rng);
                prod_s *= 2.0 * s;
                prod_1ms *= 2.0 * (1.0 - s);
                loglr += std::log(s / (1.0 - s));
            }
            const double ind = loglr >= std::log(tau) ? 1.0 : 0.0;
            acc_p += prod_s * ind;
            acc_m += prod_1ms * ind;
            acc_p2 += prod_s * prod_s * ind;
            acc_m2 += prod_1ms * prod_1ms * ind;
        }
        const double mean_p = acc_p / trials, mean_m = acc_m / trials;
        const double se_p = std::sqrt((acc_p2 / trials - mean_p * mean_p) / trials);
        const double se_m = std::sqrt((acc_m2 / trials - mean_m * mean_m) / trials);
        CHECK(std::abs(mean_p - tails.prob(State::Plus, tau)) <= 3.0 * se_p + 1e-9);
        CHECK(std::abs(mean_m - tails.prob(State::Minus, tau)) <= 3.0 * se_m + 1e-9);
    }
}

TEST_CASE("range guard") {
    const auto u = BeliefDistribution::uniform();
    CHECK_THROWS_AS(single_log_lr(u, State::Plus, 129, 2.0), RangeTooSmall);
}
