#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "mechlearn/distributions.hpp"
#include "mechlearn/quadrature.hpp"
#include "mechlearn/rng.hpp"

using namespace mechlearn;

TEST_CASE("likelihood ratio of a point belief") {
    CHECK(lr_point(0.5) == doctest::Approx(1.0));
    CHECK(lr_point(0.75) == doctest::Approx(3.0));
    CHECK(lr_point(0.25) == doctest::Approx(1.0 / 3.0));
    CHECK(std::isinf(lr_point(1.0)));
    CHECK_THROWS_AS(lr_point(1.5), OutOfSupport);

    // strictly increasing, and LR(s) * LR(1-s) = 1
    double prev = -1.0;
    for (int i = 1; i < 100; ++i) {
        const double s = i / 100.0;
        const double lr = lr_point(s);
        CHECK(lr > prev);
        prev = lr;
        CHECK(lr * lr_point(1.0 - s) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("conditional densities under the belief normalization") {
    const auto u = BeliefDistribution::uniform();
    CHECK(conditional_pdf(u, 0.5, State::Plus) == doctest::Approx(1.0));
    CHECK(conditional_pdf(u, 0.25, State::Minus) == doctest::Approx(1.5));
    const auto b2 = BeliefDistribution::beta_symmetric(2.0);
    CHECK(b2.pdf(0.5) == doctest::Approx(1.5));
    CHECK(conditional_pdf(b2, 0.5, State::Plus) == doctest::Approx(1.5));
    CHECK_THROWS_AS(conditional_pdf(u, 1.2, State::Plus), OutOfSupport);

    // f_{+1} + f_{-1} = 2 f pointwise; each conditional integrates to one.
    for (const auto& d : {BeliefDistribution::uniform(), BeliefDistribution::beta_symmetric(2.0),
                          BeliefDistribution::truncated_normal(0.2)}) {
        for (int i = 1; i < 40; ++i) {
            const double s = i / 40.0;
            const double sum = conditional_pdf(d, s, State::Plus) + conditional_pdf(d, s, State::Minus);
            CHECK(sum == doctest::Approx(2.0 * d.pdf(s)).epsilon(1e-12));
        }
        for (State w : {State::Plus, State::Minus}) {
            const double total = integrate([&](double s) { return conditional_pdf(d, s, w); },
                                           d.support_lo(), d.support_hi(), 256);
            CHECK(total == doctest::Approx(1.0).epsilon(1e-8));
        }
    }
}

TEST_CASE("validation verdicts") {
    const auto u = BeliefDistribution::uniform();
    const auto report = u.validate();
    CHECK(report.passed);
    CHECK(report.log_concave);
    CHECK(report.symmetric_about_half);
    CHECK(report.norm_error < 1e-10);

    const auto b2 = BeliefDistribution::beta_symmetric(2.0);
    const auto rb = b2.validate();
    CHECK(rb.log_concave);
    CHECK(rb.symmetric_about_half);

    const auto tn = BeliefDistribution::truncated_normal(0.2);
    CHECK(tn.validate().log_concave);

    // Density tilted to mean 0.55 is not Bayes plausible.
    std::vector<double> s, f;
    const int n = 101;
    for (int i = 0; i < n; ++i) {
        const double x = i / static_cast<double>(n - 1);
        s.push_back(x);
        f.push_back(0.4 + 1.2 * x);
    }
    const auto bad = BeliefDistribution::tabulated(s, f);
    CHECK_THROWS_AS(bad.validate(), InvalidDistribution);
}

TEST_CASE("tabulated uniform matches the analytic family") {
    std::vector<double> s, f;
    for (int i = 0; i <= 100; ++i) {
        s.push_back(i / 100.0);
        f.push_back(1.0);
    }
    const auto tab = BeliefDistribution::tabulated(s, f);
    CHECK(tab.validate().passed);
    CHECK(tab.log_concave());
    CHECK(tab.symmetric_about_half());
    CHECK(tab.pdf(0.3) == doctest::Approx(1.0));
    CHECK(tab.pdf_deriv(0.3) == doctest::Approx(0.0));
}

TEST_CASE("conditional sampling moments and KS distance") {
    const auto u = BeliefDistribution::uniform();
    const std::size_t n = 1000000;

    // E[s | +1] = ∫ 2 s^2 = 2/3, E[s | -1] = 1/3; fair mixture has mean 1/2.
    ConditionalSampler plus(u, State::Plus);
    ConditionalSampler minus(u, State::Minus);
    RngStream rng(20240811);
    double sum_p = 0.0, sum_m = 0.0, sum_mix = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sum_p += plus.draw(rng);
        sum_m += minus.draw(rng);
        sum_mix += (rng.next_u64() & 1) ? plus.draw(rng) : minus.draw(rng);
    }
    const double se = std::sqrt(1.0 / 18.0 / n);  // var of each conditional is 1/18
    CHECK(std::abs(sum_p / n - 2.0 / 3.0) < 3.0 * se);
    CHECK(std::abs(sum_m / n - 1.0 / 3.0) < 3.0 * se);
    CHECK(std::abs(sum_mix / n - 0.5) < 3.0 * std::sqrt(1.0 / 12.0 / n));

    // Kolmogorov-Smirnov distance between the empirical CDF and the
    // quadrature CDF the sampler inverts.
    std::vector<double> draws(n);
    RngStream rng2(7);
    for (double& x : draws) x = plus.draw(rng2);
    std::sort(draws.begin(), draws.end());
    double ks = 0.0;
    for (std::size_t i = 0; i < draws.size(); ++i) {
        const double fhat_hi = (i + 1.0) / draws.size();
        const double fhat_lo = i / static_cast<double>(draws.size());
        const double f = plus.cdf(draws[i]);
        ks = std::max({ks, std::abs(f - fhat_hi), std::abs(f - fhat_lo)});
    }
    CHECK(ks <= 0.002);
}

TEST_CASE("json and csv ingestion") {
    const auto spec = nlohmann::json{{"family", "beta_symmetric"}, {"alpha", 2.0}};
    const auto d = BeliefDistribution::from_json(spec);
    CHECK(d.pdf(0.5) == doctest::Approx(1.5));
    CHECK(d.describe() == spec);
    CHECK_THROWS_AS(BeliefDistribution::from_json({{"family", "cauchy"}}), InvalidDistribution);

    // A piecewise-linear table only matches the smooth density to O(h^2), so
    // normalize the sampled values before writing them out.
    const std::string path = "density_roundtrip.csv";
    {
        const int rows = 201;
        std::vector<double> s(rows), f(rows);
        double total = 0.0;
        for (int i = 0; i < rows; ++i) {
            s[i] = i / static_cast<double>(rows - 1);
            f[i] = 6.0 * s[i] * (1.0 - s[i]);
        }
        for (int i = 0; i + 1 < rows; ++i) total += 0.5 * (f[i] + f[i + 1]) / (rows - 1);
        std::ofstream out(path);
        out.precision(17);
        out << "s,f\n";
        for (int i = 0; i < rows; ++i) out << s[i] << "," << f[i] / total << "\n";
    }
    const auto tab = BeliefDistribution::tabulated_from_csv(path);
    CHECK(tab.validate().passed);
    CHECK(tab.log_concave());
    CHECK(tab.pdf(0.5) == doctest::Approx(1.5).epsilon(1e-4));
    CHECK_THROWS_AS(BeliefDistribution::tabulated_from_csv("missing_file.csv"),
                    InvalidDistribution);
    std::remove(path.c_str());
}
