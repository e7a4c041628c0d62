#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "mechlearn/simplex.hpp"

using namespace mechlearn;
using namespace mechlearn::lp;

TEST_CASE("tiny box LP") {
    // max x0 + 2 x1 s.t. x0 + x1 <= 1, x in [0, 1]^2 -> (0, 1), value 2.
    Problem p;
    p.cols = {{{0, 1.0}}, {{0, 1.0}}};
    p.col_lo = {0.0, 0.0};
    p.col_hi = {1.0, 1.0};
    p.row_lo = {-kInfinity};
    p.row_hi = {1.0};
    p.objective = {1.0, 2.0};
    BoundedSimplex s(std::move(p));
    const auto sol = s.solve();
    CHECK(sol.status == Status::Optimal);
    CHECK(sol.objective == doctest::Approx(2.0));
    CHECK(sol.x[0] == doctest::Approx(0.0));
    CHECK(sol.x[1] == doctest::Approx(1.0));
}

TEST_CASE("range rows and negative costs") {
    // max -x0/2 + x1 s.t. 0 <= x0 + x1 <= 2, 0 <= x0 - x1 <= 1, x in [0, 3]^2.
    // Unique optimum (1, 1) with value 1/2.
    Problem p;
    p.cols = {{{0, 1.0}, {1, 1.0}}, {{0, 1.0}, {1, -1.0}}};
    p.col_lo = {0.0, 0.0};
    p.col_hi = {3.0, 3.0};
    p.row_lo = {0.0, 0.0};
    p.row_hi = {2.0, 1.0};
    p.objective = {-0.5, 1.0};
    BoundedSimplex s(std::move(p));
    const auto sol = s.solve();
    CHECK(sol.status == Status::Optimal);
    CHECK(sol.objective == doctest::Approx(0.5));
    CHECK(sol.x[0] == doctest::Approx(1.0));
    CHECK(sol.x[1] == doctest::Approx(1.0));
}

namespace {

// Brute-force oracle: enumerate all bases of a dense standard-form LP
// max c'x, A x <= b, l <= x <= u by checking every subset of active
// constraints on a small random instance. For speed we instead compare the
// simplex against a fine grid search over the feasible box (2 variables).
double grid_oracle(const std::vector<std::vector<double>>& a, const std::vector<double>& blo,
                   const std::vector<double>& bhi, const std::vector<double>& lo,
                   const std::vector<double>& hi, const std::vector<double>& c) {
    double best = -1e18;
    const int g = 400;
    for (int i = 0; i <= g; ++i) {
        for (int j = 0; j <= g; ++j) {
            const double x0 = lo[0] + (hi[0] - lo[0]) * i / g;
            const double x1 = lo[1] + (hi[1] - lo[1]) * j / g;
            bool ok = true;
            for (std::size_t r = 0; r < a.size(); ++r) {
                const double act = a[r][0] * x0 + a[r][1] * x1;
                if (act < blo[r] - 1e-9 || act > bhi[r] + 1e-9) ok = false;
            }
            if (ok) best = std::max(best, c[0] * x0 + c[1] * x1);
        }
    }
    return best;
}

}  // namespace

TEST_CASE("random two-variable instances against a grid oracle") {
    std::mt19937_64 gen(42);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int solved = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const int rows = 3;
        std::vector<std::vector<double>> a(rows, std::vector<double>(2));
        std::vector<double> blo(rows), bhi(rows);
        for (int r = 0; r < rows; ++r) {
            a[r][0] = u(gen);
            a[r][1] = u(gen);
            // Keep x = lo = (0,0) feasible so the cold start works.
            const double act0 = 0.0;
            blo[r] = act0 - std::abs(u(gen)) - 0.1;
            bhi[r] = act0 + std::abs(u(gen)) + 0.1;
        }
        std::vector<double> lo = {0.0, 0.0}, hi = {1.5, 1.5}, c = {u(gen), u(gen)};

        Problem p;
        p.cols.resize(2);
        for (int r = 0; r < rows; ++r) {
            p.cols[0].emplace_back(r, a[r][0]);
            p.cols[1].emplace_back(r, a[r][1]);
        }
        p.col_lo = lo;
        p.col_hi = hi;
        p.row_lo = blo;
        p.row_hi = bhi;
        p.objective = c;
        BoundedSimplex s(std::move(p));
        const auto sol = s.solve();
        REQUIRE(sol.status == Status::Optimal);
        const double oracle = grid_oracle(a, blo, bhi, lo, hi, c);
        CHECK(sol.objective >= oracle - 1e-6);
        // and the solution itself is feasible
        for (int r = 0; r < rows; ++r) {
            const double act = a[r][0] * sol.x[0] + a[r][1] * sol.x[1];
            CHECK(act >= blo[r] - 1e-7);
            CHECK(act <= bhi[r] + 1e-7);
        }
        ++solved;
    }
    CHECK(solved == 50);
}

TEST_CASE("lexicographic restage via an added value row") {
    // max x0 + x1 on the simplex x0 + x1 <= 1: a face of optima. Stage two
    // minimizes x0 - picks (0, 1).
    Problem p;
    p.cols = {{{0, 1.0}}, {{0, 1.0}}};
    p.col_lo = {0.0, 0.0};
    p.col_hi = {1.0, 1.0};
    p.row_lo = {-kInfinity};
    p.row_hi = {1.0};
    p.objective = {1.0, 1.0};
    BoundedSimplex s(std::move(p));
    const auto first = s.solve();
    CHECK(first.objective == doctest::Approx(1.0));
    s.add_row({{0, 1.0}, {1, 1.0}}, first.objective - 1e-10, kInfinity);
    s.set_objective({-1.0, 0.0});
    const auto second = s.resolve();
    CHECK(second.status == Status::Optimal);
    CHECK(second.x[0] == doctest::Approx(0.0));
    CHECK(second.x[1] == doctest::Approx(1.0));
}

TEST_CASE("infeasible bounds are rejected") {
    Problem p;
    p.cols = {{{0, 1.0}}};
    p.col_lo = {1.0};
    p.col_hi = {0.0};
    p.row_lo = {0.0};
    p.row_hi = {1.0};
    p.objective = {1.0};
    CHECK_THROWS_AS(BoundedSimplex{std::move(p)}, InfeasibleLP);
}
