#include "mechlearn/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

namespace mechlearn::lp {

namespace {
constexpr double kPivotTol = 1e-9;
constexpr double kFeasTol = 1e-9;
constexpr double kCostTol = 1e-10;
constexpr double kDegenGain = 1e-13;
constexpr int kRefactorEvery = 64;
constexpr int kBlandAfter = 300;
}  // namespace

struct BoundedSimplex::Impl {
    Problem prob;
    int ns = 0;  // structural count
    int m = 0;   // row count

    enum class VarStatus : unsigned char { Basic, AtLower, AtUpper };
    std::vector<VarStatus> status;  // size ns + m
    std::vector<double> value;      // size ns + m
    std::vector<int> basic;         // row position -> variable index

    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu, lu_t;
    struct Eta {
        int row;
        std::vector<std::pair<int, double>> w;  // sparse copy of B^{-1} a_q
        double pivot;
    };
    std::vector<Eta> etas;
    long total_iterations = 0;

    double var_lo(int j) const { return j < ns ? prob.col_lo[j] : prob.row_lo[j - ns]; }
    double var_hi(int j) const { return j < ns ? prob.col_hi[j] : prob.row_hi[j - ns]; }
    double var_obj(int j) const { return j < ns ? prob.objective[j] : 0.0; }

    template <class F>
    void for_col(int j, F&& f) const {
        if (j < ns) {
            for (const auto& [r, v] : prob.cols[j]) f(r, v);
        } else {
            f(j - ns, -1.0);
        }
    }

    void init_start_point() {
        status.assign(ns + m, VarStatus::AtLower);
        value.assign(ns + m, 0.0);
        basic.resize(m);
        std::vector<double> activity(m, 0.0);
        for (int j = 0; j < ns; ++j) {
            value[j] = prob.col_lo[j];
            for (const auto& [r, v] : prob.cols[j]) activity[r] += v * value[j];
        }
        for (int r = 0; r < m; ++r) {
            if (activity[r] < prob.row_lo[r] - 1e-7 || activity[r] > prob.row_hi[r] + 1e-7)
                throw InfeasibleLP("simplex start point violates row " + std::to_string(r));
            const int slack = ns + r;
            basic[r] = slack;
            status[slack] = VarStatus::Basic;
            value[slack] = activity[r];
        }
    }

    void refactorize() {
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(4 * m);
        for (int r = 0; r < m; ++r) {
            const int j = basic[r];
            for_col(j, [&](int row, double v) { trip.emplace_back(row, r, v); });
        }
        Eigen::SparseMatrix<double> B(m, m);
        B.setFromTriplets(trip.begin(), trip.end());
        lu.compute(B);
        if (lu.info() != Eigen::Success) throw Error("simplex: singular basis");
        Eigen::SparseMatrix<double> Bt = B.transpose();
        lu_t.compute(Bt);
        if (lu_t.info() != Eigen::Success) throw Error("simplex: singular basis transpose");
        etas.clear();
        recompute_basics();
    }

    // x_B = B^{-1} (0 - N x_N); the right-hand side of every row is zero.
    void recompute_basics() {
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
        for (int j = 0; j < ns + m; ++j) {
            if (status[j] == VarStatus::Basic) continue;
            const double xv = value[j];
            if (xv == 0.0) continue;
            for_col(j, [&](int r, double v) { rhs[r] -= v * xv; });
        }
        Eigen::VectorXd xb = lu.solve(rhs);
        for (int r = 0; r < m; ++r) value[basic[r]] = xb[r];
    }

    void ftran(Eigen::VectorXd& v) const {
        v = lu.solve(v);
        for (const Eta& e : etas) {
            const double piv = v[e.row] / e.pivot;
            if (piv != 0.0) {
                for (const auto& [i, wi] : e.w) v[i] -= wi * piv;
                v[e.row] = piv;
            } else {
                v[e.row] = 0.0;
            }
        }
    }

    void btran(Eigen::VectorXd& u) const {
        for (auto it = etas.rbegin(); it != etas.rend(); ++it) {
            double dot = 0.0;
            for (const auto& [i, wi] : it->w) dot += wi * u[i];
            u[it->row] = (u[it->row] - dot) / it->pivot;
        }
        u = lu_t.solve(u);
    }

    Solution optimize() {
        refactorize();
        Eigen::VectorXd y(m), w(m);
        double cost_scale = 1.0;
        for (int j = 0; j < ns; ++j) cost_scale = std::max(cost_scale, std::abs(prob.objective[j]));
        const double dtol = kCostTol * cost_scale;

        long iter = 0;
        const long iter_limit = 200L * (ns + m) + 20000L;
        int degen_streak = 0;
        bool bland = false;

        while (iter < iter_limit) {
            // Pricing: y = B^{-T} c_B, then reduced costs on nonbasic columns.
            for (int r = 0; r < m; ++r) y[r] = var_obj(basic[r]);
            btran(y);

            int entering = -1;
            double best = dtol;
            int direction = +1;
            for (int j = 0; j < ns + m; ++j) {
                if (status[j] == VarStatus::Basic) continue;
                double d = var_obj(j);
                for_col(j, [&](int r, double v) { d -= y[r] * v; });
                const bool at_lo = status[j] == VarStatus::AtLower;
                double gain = 0.0;
                int dir = 0;
                if (at_lo && d > dtol && var_hi(j) > var_lo(j)) {
                    gain = d;
                    dir = +1;
                } else if (!at_lo && d < -dtol && var_hi(j) > var_lo(j)) {
                    gain = -d;
                    dir = -1;
                }
                if (dir != 0) {
                    if (bland) {
                        entering = j;
                        direction = dir;
                        break;
                    }
                    if (gain > best) {
                        best = gain;
                        entering = j;
                        direction = dir;
                    }
                }
            }
            if (entering < 0) {
                Solution s;
                s.status = Status::Optimal;
                s.iterations = iter;
                finish(s);
                return s;
            }

            w.setZero();
            for_col(entering, [&](int r, double v) { w[r] = v; });
            ftran(w);

            // Two-sided ratio test; basic r moves by -direction * w_r per unit.
            double t_max = var_hi(entering) - var_lo(entering);
            int leave_row = -1;
            bool leave_at_upper = false;
            for (int r = 0; r < m; ++r) {
                const double wr = direction * w[r];
                if (std::abs(wr) < kPivotTol) continue;
                const int i = basic[r];
                double t;
                bool hits_upper;
                if (wr > 0.0) {  // basic decreases toward its lower bound
                    if (std::isinf(var_lo(i))) continue;
                    t = (value[i] - var_lo(i)) / wr;
                    hits_upper = false;
                } else {  // basic increases toward its upper bound
                    if (std::isinf(var_hi(i))) continue;
                    t = (value[i] - var_hi(i)) / wr;
                    hits_upper = true;
                }
                t = std::max(t, 0.0);
                bool take = false;
                if (t < t_max - 1e-12) {
                    take = true;
                } else if (t <= t_max + 1e-12 && leave_row >= 0) {
                    // Ties: smallest variable index under Bland, else the
                    // largest pivot for numerical stability.
                    take = bland ? basic[r] < basic[leave_row]
                                 : std::abs(w[r]) > std::abs(w[leave_row]);
                }
                if (take) {
                    t_max = std::min(t_max, t);
                    leave_row = r;
                    leave_at_upper = hits_upper;
                }
            }
            if (std::isinf(t_max)) throw Error("simplex: unbounded direction");

            // Apply the step.
            const double step = t_max;
            if (step != 0.0) {
                value[entering] += direction * step;
                for (int r = 0; r < m; ++r) {
                    if (w[r] != 0.0) value[basic[r]] -= direction * step * w[r];
                }
            }
            const double gain = best * step;
            if (gain <= kDegenGain) {
                if (++degen_streak > kBlandAfter) bland = true;
            } else {
                degen_streak = 0;
                bland = false;
            }

            if (leave_row < 0) {
                // Bound flip: entering runs to its opposite bound.
                status[entering] = status[entering] == VarStatus::AtLower ? VarStatus::AtUpper
                                                                          : VarStatus::AtLower;
                value[entering] = status[entering] == VarStatus::AtLower ? var_lo(entering)
                                                                         : var_hi(entering);
            } else {
                const int leaving = basic[leave_row];
                status[leaving] = leave_at_upper ? VarStatus::AtUpper : VarStatus::AtLower;
                value[leaving] = leave_at_upper ? var_hi(leaving) : var_lo(leaving);
                status[entering] = VarStatus::Basic;
                basic[leave_row] = entering;
                if (std::abs(w[leave_row]) < 1e2 * kPivotTol && !etas.empty()) {
                    refactorize();  // tiny pivot: rebuild instead of stacking error
                } else {
                    Eta e;
                    e.row = leave_row;
                    e.pivot = w[leave_row];
                    for (int r = 0; r < m; ++r) {
                        if (r != leave_row && std::abs(w[r]) > 1e-14) e.w.emplace_back(r, w[r]);
                    }
                    etas.push_back(std::move(e));
                    if (static_cast<int>(etas.size()) >= kRefactorEvery) refactorize();
                }
            }
            ++iter;
            ++total_iterations;
        }
        Solution s;
        s.status = Status::IterationLimit;
        s.iterations = iter;
        finish(s);
        return s;
    }

    void finish(Solution& s) {
        refactorize();  // clean values through a fresh factorization
        s.x.assign(prob.col_lo.size(), 0.0);
        s.objective = 0.0;
        for (int j = 0; j < ns; ++j) {
            double v = value[j];
            v = std::min(std::max(v, prob.col_lo[j] - kFeasTol), prob.col_hi[j] + kFeasTol);
            s.x[j] = v;
            s.objective += prob.objective[j] * v;
        }
    }
};

BoundedSimplex::BoundedSimplex(Problem p) : impl_(new Impl) {
    impl_->prob = std::move(p);
    impl_->ns = impl_->prob.num_structural();
    impl_->m = impl_->prob.num_rows();
    for (int j = 0; j < impl_->ns; ++j) {
        if (impl_->prob.col_lo[j] > impl_->prob.col_hi[j] + 1e-12)
            throw InfeasibleLP("crossed variable bounds at index " + std::to_string(j));
    }
    impl_->init_start_point();
}

BoundedSimplex::~BoundedSimplex() { delete impl_; }

Solution BoundedSimplex::solve() { return impl_->optimize(); }

void BoundedSimplex::add_row(const std::vector<std::pair<int, double>>& entries, double lo,
                             double hi) {
    Impl& im = *impl_;
    const int r = im.m;
    double activity = 0.0;
    for (const auto& [j, v] : entries) {
        im.prob.cols[j].emplace_back(r, v);
        activity += v * im.value[j];
    }
    im.prob.row_lo.push_back(lo);
    im.prob.row_hi.push_back(hi);
    im.m += 1;

    // Shift slack indices up by one: rebuild status/value/basic bookkeeping.
    std::vector<Impl::VarStatus> status(im.ns + im.m);
    std::vector<double> value(im.ns + im.m, 0.0);
    for (int j = 0; j < im.ns + im.m - 1; ++j) {
        status[j] = im.status[j];
        value[j] = im.value[j];
    }
    const int new_slack = im.ns + r;
    status[new_slack] = Impl::VarStatus::Basic;
    value[new_slack] = activity;
    im.status = std::move(status);
    im.value = std::move(value);
    im.basic.push_back(new_slack);
    if (activity < lo - 1e-7 || activity > hi + 1e-7)
        throw InfeasibleLP("added row is violated at the current point");
}

void BoundedSimplex::set_objective(std::vector<double> c) {
    impl_->prob.objective = std::move(c);
}

Solution BoundedSimplex::resolve() { return impl_->optimize(); }

}  // namespace mechlearn::lp
