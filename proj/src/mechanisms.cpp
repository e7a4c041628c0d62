#include "mechlearn/mechanisms.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mechlearn/quadrature.hpp"

namespace mechlearn {

namespace {

double weight_g(const BeliefDistribution& d, double s) {
    return -3.0 * (1.0 - 2.0 * s) * d.pdf(s) - 2.0 * s * (1.0 - s) * d.pdf_deriv(s);
}

std::string kind_name(PieceKind k) {
    switch (k) {
        case PieceKind::Exclude: return "exclude";
        case PieceKind::Pooled: return "pooled";
        case PieceKind::EfficientTail: return "efficient_tail";
    }
    return "?";
}

PieceKind kind_from_name(const std::string& name) {
    if (name == "exclude") return PieceKind::Exclude;
    if (name == "pooled") return PieceKind::Pooled;
    if (name == "efficient_tail") return PieceKind::EfficientTail;
    throw Error("unknown piece kind: " + name);
}

LikelihoodTails make_tails(const MonotoneThresholdMechanism& mech) {
    return LikelihoodTails::make(mech.dist, mech.market_size - 1);
}

}  // namespace

const ThresholdPiece& MonotoneThresholdMechanism::piece_at(double s) const {
    if (pieces.empty()) throw Error("mechanism has no pieces");
    if (s < pieces.front().lo - 1e-12 || s > pieces.back().hi + 1e-12)
        throw OutOfSupport("type outside the mechanism support");
    for (const auto& p : pieces) {
        if (s <= p.hi || &p == &pieces.back()) return p;
    }
    return pieces.back();
}

nlohmann::json MonotoneThresholdMechanism::to_json() const {
    nlohmann::json out;
    out["n"] = market_size;
    out["distribution"] = dist.describe();
    out["pieces"] = nlohmann::json::array();
    for (const auto& p : pieces) {
        out["pieces"].push_back({{"interval", {p.lo, p.hi}},
                                 {"kind", kind_name(p.kind)},
                                 {"kappa", p.kappa},
                                 {"tau", p.tau}});
    }
    return out;
}

MonotoneThresholdMechanism MonotoneThresholdMechanism::from_json(const nlohmann::json& j) {
    MonotoneThresholdMechanism m;
    m.market_size = j.at("n").get<int>();
    m.dist = BeliefDistribution::from_json(j.at("distribution"));
    for (const auto& pj : j.at("pieces")) {
        ThresholdPiece p;
        p.lo = pj.at("interval")[0].get<double>();
        p.hi = pj.at("interval")[1].get<double>();
        p.kind = kind_from_name(pj.at("kind").get<std::string>());
        p.kappa = pj.value("kappa", 0.0);
        p.tau = pj.value("tau", 0.0);
        m.pieces.push_back(p);
    }
    return m;
}

std::pair<double, double> slope_intercept(double kappa, double tau, const LikelihoodTails& tails) {
    const double tp = tails.prob(State::Plus, tau);
    const double tm = tails.prob(State::Minus, tau);
    return {kappa * (tp + tm), kappa * tm};
}

std::pair<double, double> solve_line(double a, double b, const LikelihoodTails& tails,
                                     const EnvelopeBounds* bounds) {
    if (a < -1e-9 || a > 2.0 + 1e-9 || b < -1e-9)
        throw LineInfeasible("solve_line: slope outside [0,2] or negative intercept");
    a = std::clamp(a, 0.0, 2.0);
    b = std::max(b, 0.0);
    if (bounds) {
        double above_upper = -1e300, above_lower = -1e300;
        for (std::size_t i = 0; i < bounds->grid.size(); ++i) {
            const double line = a * bounds->grid[i] - b;
            above_upper = std::max(above_upper, line - bounds->upper[i]);
            above_lower = std::max(above_lower, line - bounds->lower[i]);
        }
        if (above_upper > 1e-7)
            throw LineInfeasible("solve_line: line exceeds the efficient envelope by " +
                                 std::to_string(above_upper));
        if (above_lower < -1e-7)
            throw LineInfeasible("solve_line: line lies strictly below max{0, 2s-1}");
    }
    if (a <= 1e-12) {
        if (b > 1e-8) throw LineInfeasible("solve_line: zero slope with positive intercept");
        return {0.0, 0.0};
    }
    if (b <= 1e-12 && std::abs(a - 2.0) < 1e-12) return {1.0, 0.0};

    // Inner solve: smallest tau with slope(kappa, tau) = a; the slope falls
    // continuously from 2 kappa at tau = 0 toward the atom mass.
    const double t_lo = -tails.plus.log_range - tails.plus.step;
    const double t_hi = tails.plus.log_range + tails.plus.step;
    auto slope_at = [&](double kappa, double t) {
        const double tau = std::exp(t);
        return kappa * (tail_prob(tails.plus, tau) + tail_prob(tails.minus, tau));
    };
    auto tau_for_slope = [&](double kappa) -> double {
        if (2.0 * kappa <= a + 1e-14) return 0.0;  // only tau = 0 reaches slope 2 kappa
        if (slope_at(kappa, t_lo) <= a) return 0.0;
        if (slope_at(kappa, t_hi) > a)
            throw NoBracket("solve_line: slope " + std::to_string(a) +
                            " unreachable at kappa=" + std::to_string(kappa) +
                            " (atom mass too large)");
        double lo = t_lo, hi = t_hi;  // slope(lo) > a >= slope(hi)
        for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, std::abs(lo)); ++it) {
            const double mid = 0.5 * (lo + hi);
            (slope_at(kappa, mid) > a ? lo : hi) = mid;
        }
        return std::exp(hi);
    };
    auto intercept_gap = [&](double kappa) {
        const double tau = tau_for_slope(kappa);
        return kappa * tail_prob(tails.minus, tau) - b;
    };

    // Lines produced by upstream discretizations can sit a hair outside the
    // exact bracket; accept the boundary solution when the residual is tiny.
    constexpr double kBoundarySlack = 1e-6;
    double k_lo = std::max(a / 2.0, 0.0), k_hi = 1.0;
    const double g_lo = intercept_gap(k_lo);
    const double g_hi = intercept_gap(k_hi);
    if (g_lo <= 0.0) {
        if (g_lo >= -kBoundarySlack) return {k_lo, tau_for_slope(k_lo)};
        throw LineInfeasible("solve_line: intercept " + std::to_string(b) +
                             " above the tau=0 value a/2 (line below the participation kink)");
    }
    if (g_hi >= 0.0) {
        if (g_hi <= kBoundarySlack) return {k_hi, tau_for_slope(k_hi)};
        throw NoBracket("solve_line: intercept bracket failed, gap at kappa=1 is " +
                        std::to_string(g_hi));
    }
    for (int it = 0; it < 200 && k_hi - k_lo > 1e-15; ++it) {
        const double mid = 0.5 * (k_lo + k_hi);
        (intercept_gap(mid) > 0.0 ? k_lo : k_hi) = mid;
    }
    const double kappa = 0.5 * (k_lo + k_hi);
    return {kappa, tau_for_slope(kappa)};
}

double threshold_s_min(double tau, const LikelihoodTails& tails) {
    const double tp = tails.prob(State::Plus, tau);
    const double tm = tails.prob(State::Minus, tau);
    if (tp + tm <= 0.0) return 0.5;  // no mass above tau in either state
    return tm / (tp + tm);
}

MonotoneThresholdMechanism two_threshold(double tau, const BeliefDistribution& d, int market_size,
                                         const LikelihoodTails* tails_in) {
    if (tau < 0.0 || tau > 1.0 + 1e-12) throw Error("two_threshold: tau must lie in [0, 1]");
    LikelihoodTails local;
    if (!tails_in) {
        local = LikelihoodTails::make(d, market_size - 1);
        tails_in = &local;
    }
    const double lo = d.support_lo(), hi = d.support_hi();
    const double s_min = std::clamp(threshold_s_min(tau, *tails_in), lo, hi);
    const double s_max = std::clamp(threshold_s_max(tau), lo, hi);

    MonotoneThresholdMechanism m;
    m.dist = d;
    m.market_size = market_size;
    if (s_min > lo) m.pieces.push_back({lo, s_min, PieceKind::Exclude, 0.0, 0.0});
    if (s_max > s_min) m.pieces.push_back({s_min, s_max, PieceKind::Pooled, 1.0, tau});
    if (hi > s_max) m.pieces.push_back({s_max, hi, PieceKind::EfficientTail, 1.0, 0.0});
    if (m.pieces.empty()) m.pieces.push_back({lo, hi, PieceKind::Exclude, 0.0, 0.0});
    return m;
}

namespace {

// Phi(tau): the (Dominance) form evaluated at s_max*, whose root pins the
// optimal two-threshold mechanism.
double certificate_phi(const BeliefDistribution& d, const LikelihoodTails& tails, double tau) {
    const double lo = d.support_lo(), hi = d.support_hi();
    const double s_min_raw = threshold_s_min(tau, tails);
    const double s_min = std::clamp(s_min_raw, lo, hi);
    const double s_max = std::clamp(threshold_s_max(tau), lo, hi);
    double phi = integrate([&](double t) { return (s_max - t) * weight_g(d, t); }, s_min, s_max, 128);
    if (s_min_raw <= lo) phi -= 2.0 * (s_max - lo) * lo * (1.0 - lo) * d.pdf(lo);
    return phi;
}

}  // namespace

LogConcaveSolution solve_logconcave(const BeliefDistribution& d, int market_size, double phi_tol) {
    if (!d.log_concave()) throw NotLogConcave("solve_logconcave: density not flagged log-concave");
    if (!d.symmetric_about_half()) {
        const double f_half = d.pdf(0.5), fp_half = d.pdf_deriv(0.5);
        if (!(fp_half >= 0.0 && fp_half <= 2.0 * f_half))
            throw NotLogConcave("solve_logconcave: asymmetric density with f'(1/2) outside [0, 2 f(1/2)]");
    }
    const LikelihoodTails tails = LikelihoodTails::make(d, market_size - 1);

    LogConcaveSolution out;
    const int scan = 129;
    double prev_tau = 0.0;
    double prev_phi = certificate_phi(d, tails, 0.0);
    if (prev_phi < -phi_tol)
        throw NoRoot("solve_logconcave: Phi(0) negative (" + std::to_string(prev_phi) +
                     "), flags likely misused");
    for (int i = 1; i < scan; ++i) {
        const double tau = i / static_cast<double>(scan - 1);
        const double phi = certificate_phi(d, tails, tau);
        if ((prev_phi > 0.0) != (phi > 0.0) || phi == 0.0) out.brackets.push_back(prev_tau);
        prev_tau = tau;
        prev_phi = phi;
    }
    if (out.brackets.empty()) {
        if (std::abs(certificate_phi(d, tails, 0.0)) <= phi_tol) {
            out.tau = 0.0;
            out.mech = two_threshold(0.0, d, market_size, &tails);
            return out;
        }
        throw NoRoot("solve_logconcave: no sign change of Phi on [0, 1]");
    }
    // Bisect the first bracket; Phi is continuous in tau.
    double lo = out.brackets.front(), hi = lo + 1.0 / (scan - 1);
    double phi_lo = certificate_phi(d, tails, lo);
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double phi_mid = certificate_phi(d, tails, mid);
        if (std::abs(phi_mid) <= phi_tol && hi - lo < 1e-9) {
            lo = hi = mid;
            break;
        }
        if ((phi_lo > 0.0) == (phi_mid > 0.0)) {
            lo = mid;
            phi_lo = phi_mid;
        } else {
            hi = mid;
        }
    }
    out.tau = 0.5 * (lo + hi);
    if (std::abs(certificate_phi(d, tails, out.tau)) > phi_tol)
        throw NoRoot("solve_logconcave: bisection failed to reach |Phi| <= tolerance");
    out.mech = two_threshold(out.tau, d, market_size, &tails);
    return out;
}

nlohmann::json CertificateReport::to_json() const {
    return {{"sign_value", sign_value},
            {"dominance_max", dominance_max},
            {"dominance_at_smax", dominance_at_smax},
            {"g_max_below", g_max_below},
            {"g_min_above", g_min_above},
            {"passed", passed}};
}

CertificateReport verify_certificate(const MonotoneThresholdMechanism& mech, double tol) {
    const BeliefDistribution& d = mech.dist;
    const double lo = d.support_lo(), hi = d.support_hi();
    // Locate the two-threshold structure.
    double s_min = lo, s_max = hi;
    bool middle_found = false;
    for (const auto& p : mech.pieces) {
        if (p.kind == PieceKind::Pooled && p.kappa > 0.0) {
            s_min = p.lo;
            s_max = p.hi;
            middle_found = true;
        }
    }
    if (!middle_found) {  // degenerate: exclusion up to the efficient tail
        for (const auto& p : mech.pieces)
            if (p.kind == PieceKind::EfficientTail) s_min = s_max = p.lo;
    }

    CertificateReport rep;
    rep.sign_value = integrate([&](double t) { return weight_g(d, t); }, s_min, s_max, 128);
    if (s_min <= lo + 1e-12) rep.sign_value -= 2.0 * lo * (1.0 - lo) * d.pdf(lo);
    if (s_max >= hi - 1e-12) rep.sign_value += 2.0 * hi * (1.0 - hi) * d.pdf(hi);

    // Dominance profile D(s) = s I0(s) - I1(s) - boundary(s) on a 401-point
    // grid of the middle interval, accumulating the moments panel by panel.
    const int grid_n = 401;
    rep.dominance_max = -1e300;
    double i0 = 0.0, i1 = 0.0;
    double prev = s_min;
    const double boundary_coef =
        (s_min <= lo + 1e-12) ? 2.0 * lo * (1.0 - lo) * d.pdf(lo) : 0.0;
    double d_at_smax = 0.0;
    for (int i = 0; i < grid_n; ++i) {
        const double s = s_min + (s_max - s_min) * i / (grid_n - 1);
        if (s > prev) {
            i0 += integrate([&](double t) { return weight_g(d, t); }, prev, s, 8);
            i1 += integrate([&](double t) { return t * weight_g(d, t); }, prev, s, 8);
            prev = s;
        }
        const double dval = s * i0 - i1 - boundary_coef * (s - lo);
        rep.dominance_max = std::max(rep.dominance_max, dval);
        if (i + 1 == grid_n) d_at_smax = dval;
    }
    rep.dominance_at_smax = std::abs(d_at_smax);

    rep.g_max_below = -1e300;
    rep.g_min_above = 1e300;
    for (int i = 0; i < grid_n; ++i) {
        const double below = lo + (s_min - lo) * i / (grid_n - 1);
        const double above = s_max + (hi - s_max) * i / (grid_n - 1);
        rep.g_max_below = std::max(rep.g_max_below, weight_g(d, below));
        rep.g_min_above = std::min(rep.g_min_above, weight_g(d, above));
    }

    rep.passed = rep.sign_value >= -tol && rep.dominance_max <= tol &&
                 rep.dominance_at_smax <= tol && rep.g_max_below <= tol &&
                 rep.g_min_above >= -tol;
    if (rep.sign_value < -tol) throw CertificateFailed("(Sign) integral negative");
    if (rep.dominance_max > tol) throw CertificateFailed("(Dominance) positive inside the middle interval");
    if (rep.dominance_at_smax > tol) throw CertificateFailed("(Dominance) equality at s_max broken");
    if (rep.g_max_below > tol) throw CertificateFailed("g positive below s_min");
    if (rep.g_min_above < -tol) throw CertificateFailed("g negative above s_max");
    return rep;
}

double evaluate(const MonotoneThresholdMechanism& mech, double s_i, double lr_others) {
    const ThresholdPiece& p = mech.piece_at(s_i);
    switch (p.kind) {
        case PieceKind::Exclude: return 0.0;
        case PieceKind::Pooled: return lr_others >= p.tau ? p.kappa : 0.0;
        case PieceKind::EfficientTail:
            if (s_i <= 0.0) return 0.0;
            return lr_others >= (1.0 - s_i) / s_i ? 1.0 : 0.0;
    }
    return 0.0;
}

double designer_value(const MonotoneThresholdMechanism& mech, const LikelihoodTails* tails_in) {
    LikelihoodTails local;
    if (!tails_in) {
        local = make_tails(mech);
        tails_in = &local;
    }
    const BeliefDistribution& d = mech.dist;
    double value = 0.0;
    for (State w : {State::Plus, State::Minus}) {
        double v = 0.0;
        for (const auto& p : mech.pieces) {
            if (p.kind == PieceKind::Pooled && p.kappa > 0.0) {
                v += p.kappa * conditional_prob(d, p.lo, p.hi, w) * tails_in->prob(w, p.tau);
            } else if (p.kind == PieceKind::EfficientTail) {
                v += integrate(
                    [&](double s) {
                        const double tau = s > 0.0 ? (1.0 - s) / s : 1e300;
                        return tails_in->prob(w, tau) * conditional_pdf(d, s, w);
                    },
                    p.lo, p.hi, 128);
            }
        }
        value += 0.5 * v;
    }
    return value;
}

IndirectUtility mechanism_utility(const MonotoneThresholdMechanism& mech, int grid_k,
                                  const LikelihoodTails* tails_in, const EnvelopeBounds* bounds) {
    LikelihoodTails local;
    if (!tails_in) {
        local = make_tails(mech);
        tails_in = &local;
    }
    const double lo = mech.dist.support_lo(), hi = mech.dist.support_hi();
    IndirectUtility u;
    u.grid.resize(grid_k);
    u.values.resize(grid_k);
    for (int i = 0; i < grid_k; ++i) {
        const double s = i / static_cast<double>(grid_k - 1);
        u.grid[i] = s;
        // Types outside the support consume the nearest boundary option; this
        // is the feasibility-preserving extension of the mechanism to [0, 1].
        const ThresholdPiece& p = mech.piece_at(std::clamp(s, lo, hi));
        switch (p.kind) {
            case PieceKind::Exclude:
                u.values[i] = 0.0;
                break;
            case PieceKind::Pooled: {
                const auto [a, b] = slope_intercept(p.kappa, p.tau, *tails_in);
                u.values[i] = a * s - b;
                break;
            }
            case PieceKind::EfficientTail:
                u.values[i] = efficient_utility(*tails_in, s);
                break;
        }
    }
    double min_u = 1e300;
    for (double v : u.values) min_u = std::min(min_u, v);
    if (min_u < -1e-9)
        throw NonConvexUtility("mechanism violates participation: min utility " +
                               std::to_string(min_u));
    u.validate(bounds);
    return u;
}

MonotoneThresholdMechanism extract_mechanism(const IndirectUtility& u, const EnvelopeBounds& bounds,
                                             const BeliefDistribution& d, int market_size,
                                             const LikelihoodTails* tails_in) {
    LikelihoodTails local;
    if (!tails_in) {
        local = LikelihoodTails::make(d, market_size - 1);
        tails_in = &local;
    }
    const StructureReport rep = check_extreme_structure(u, bounds, 1e-6);
    const double lo = d.support_lo(), hi = d.support_hi();

    MonotoneThresholdMechanism m;
    m.dist = d;
    m.market_size = market_size;

    const auto& regions = rep.regions;
    // Tangent of the efficient envelope at a grid point, in (a, b) form.
    auto upper_tangent = [&](int idx) {
        const double s = u.grid[idx];
        const double tau = s > 0.0 ? (1.0 - s) / s : 1e300;
        const double a = tails_in->prob(State::Plus, tau) + tails_in->prob(State::Minus, tau);
        return std::pair<double, double>{a, a * s - efficient_utility(*tails_in, s)};
    };
    // Payoff line of a region where that is meaningful. Strictly-interior
    // segments with exactly one upper-contact neighbor are snapped to the
    // envelope tangent at the contact grid point; that removes the LP
    // discretization noise from the chord and restores exact continuity
    // and interim-allocation monotonicity at the junction.
    auto region_line = [&](std::size_t r) -> std::pair<bool, std::pair<double, double>> {
        const Region& reg = regions[r];
        if (reg.kind == RegionKind::AtUpper) return {false, {0.0, 0.0}};
        if (reg.kind == RegionKind::AtLower) {
            if (u.grid[reg.last] <= 0.5 + 1e-12) return {true, {0.0, 0.0}};
            if (u.grid[reg.first] >= 0.5 - 1e-12) return {true, {2.0, 1.0}};
            return {false, {0.0, 0.0}};  // straddles the kink of the lower bound
        }
        if (reg.last <= reg.first) return {false, {0.0, 0.0}};
        const bool up_right = r + 1 < regions.size() && regions[r + 1].kind == RegionKind::AtUpper;
        const bool up_left = r > 0 && regions[r - 1].kind == RegionKind::AtUpper;
        if (up_right && !up_left) return {true, upper_tangent(regions[r + 1].first)};
        if (up_left && !up_right) return {true, upper_tangent(regions[r - 1].last)};
        const double sa = u.grid[reg.first], sb = u.grid[reg.last];
        const double a = (u.values[reg.last] - u.values[reg.first]) / (sb - sa);
        return {true, {a, a * sa - u.values[reg.first]}};
    };
    auto boundary_between = [&](std::size_t r) {
        const Region& cur = regions[r];
        const Region& nxt = regions[r + 1];
        // Tangency contacts: the boundary is the contact grid point itself.
        if (cur.kind == RegionKind::Between && nxt.kind == RegionKind::AtUpper)
            return u.grid[nxt.first];
        if (cur.kind == RegionKind::AtUpper && nxt.kind == RegionKind::Between)
            return u.grid[cur.last];
        const double fallback = 0.5 * (u.grid[cur.last] + u.grid[nxt.first]);
        const auto [ok1, l1] = region_line(r);
        const auto [ok2, l2] = region_line(r + 1);
        if (!ok1 || !ok2 || std::abs(l1.first - l2.first) < 1e-9) return fallback;
        const double cross = (l2.second - l1.second) / (l2.first - l1.first);
        // keep the crossing near the straddled cell
        return std::clamp(cross, u.grid[cur.last] - (u.grid[1] - u.grid[0]),
                          u.grid[nxt.first] + (u.grid[1] - u.grid[0]));
    };

    double cursor = lo;
    for (std::size_t r = 0; r < regions.size(); ++r) {
        const Region& reg = regions[r];
        double end = r + 1 < regions.size() ? boundary_between(r) : hi;
        end = std::clamp(end, lo, hi);
        if (end <= cursor + 1e-12 && r + 1 < regions.size()) continue;

        switch (reg.kind) {
            case RegionKind::AtUpper:
                m.pieces.push_back({cursor, end, PieceKind::EfficientTail, 1.0, 0.0});
                break;
            case RegionKind::AtLower: {
                // lower bound = 0 below 1/2 (exclusion), = 2s-1 above
                // (the always-allocate rule).
                if (cursor < 0.5 && end > 0.5) {
                    m.pieces.push_back({cursor, 0.5, PieceKind::Exclude, 0.0, 0.0});
                    m.pieces.push_back({0.5, end, PieceKind::Pooled, 1.0, 0.0});
                } else if (end <= 0.5) {
                    m.pieces.push_back({cursor, end, PieceKind::Exclude, 0.0, 0.0});
                } else {
                    m.pieces.push_back({cursor, end, PieceKind::Pooled, 1.0, 0.0});
                }
                break;
            }
            case RegionKind::Between: {
                if (reg.last - reg.first < 1) break;  // boundary sliver
                const auto [ok, line] = region_line(r);
                if (!ok) break;
                const auto [kappa, tau] = solve_line(line.first, line.second, *tails_in, &bounds);
                m.pieces.push_back({cursor, end, PieceKind::Pooled, kappa, tau});
                break;
            }
        }
        cursor = end;
    }
    if (m.pieces.empty() || cursor < hi - 1e-12)
        m.pieces.push_back({cursor, hi, PieceKind::Exclude, 0.0, 0.0});
    return m;
}

MonotoneThresholdMechanism asymptotic_family(const BeliefDistribution& d, int market_size,
                                             const IndirectUtility& u_limit,
                                             const LikelihoodTails* tails_in) {
    LikelihoodTails local;
    if (!tails_in) {
        local = LikelihoodTails::make(d, market_size - 1);
        tails_in = &local;
    }
    const double lo = d.support_lo(), hi = d.support_hi();
    const int k = static_cast<int>(u_limit.grid.size());

    // Middle interval of the limit solution: where it leaves max{0, 2s-1}.
    int i0 = -1, i1 = -1;
    for (int i = 0; i < k; ++i) {
        const double lower = std::max(0.0, 2.0 * u_limit.grid[i] - 1.0);
        if (u_limit.values[i] > lower + 1e-7) {
            if (i0 < 0) i0 = i;
            i1 = i;
        }
    }
    MonotoneThresholdMechanism m;
    m.dist = d;
    m.market_size = market_size;
    if (i0 < 0) {
        // Degenerate limit: exclusion below 1/2, allocation above.
        const double cut = std::clamp(0.5, lo, hi);
        if (cut > lo) m.pieces.push_back({lo, cut, PieceKind::Exclude, 0.0, 0.0});
        m.pieces.push_back({cut, hi, PieceKind::Pooled, 1.0, 0.0});
        return m;
    }
    const int a_idx = std::max(0, i0 - 1), b_idx = std::min(k - 1, i1 + 1);
    const double a = (u_limit.values[b_idx] - u_limit.values[a_idx]) /
                     (u_limit.grid[b_idx] - u_limit.grid[a_idx]);
    const double b = a * u_limit.grid[a_idx] - u_limit.values[a_idx];

    // Smallest shift that puts the line below this market's efficient
    // envelope.
    const EnvelopeBounds env = efficient_envelope(*tails_in, market_size, k);
    double b_n = b;
    for (int i = 0; i < k; ++i) b_n = std::max(b_n, a * env.grid[i] - env.upper[i]);

    const double s_min = std::clamp(b_n / a, lo, hi);
    const double s_max = a < 2.0 ? std::clamp((1.0 - b_n) / (2.0 - a), lo, hi) : hi;
    const auto [kappa, tau] = solve_line(a, b_n, *tails_in, &env);

    if (s_min > lo) m.pieces.push_back({lo, s_min, PieceKind::Exclude, 0.0, 0.0});
    if (s_max > s_min) m.pieces.push_back({s_min, s_max, PieceKind::Pooled, kappa, tau});
    if (hi > s_max) m.pieces.push_back({s_max, hi, PieceKind::Pooled, 1.0, 0.0});
    return m;
}

nlohmann::json export_persuasion_menu(const MonotoneThresholdMechanism& mech) {
    if (mech.market_size != 2)
        throw WrongMarketSize("persuasion menu requires a two-agent mechanism");
    nlohmann::json menu;
    menu["entries"] = nlohmann::json::array();
    bool deterministic = true;
    for (const auto& p : mech.pieces) {
        nlohmann::json experiment;
        switch (p.kind) {
            case PieceKind::Exclude:
                experiment = {{"type", "null"}};
                break;
            case PieceKind::Pooled:
                if (p.kappa <= 0.0) {
                    experiment = {{"type", "null"}};
                } else {
                    // recommend iff the sender's belief clears tau
                    experiment = {{"type", "cutoff"},
                                  {"sender_belief", p.tau / (1.0 + p.tau)},
                                  {"tau", p.tau},
                                  {"kappa", p.kappa}};
                    if (p.kappa < 1.0) deterministic = false;
                }
                break;
            case PieceKind::EfficientTail:
                experiment = {{"type", "matching"}};
                break;
        }
        menu["entries"].push_back(
            {{"lambda_lo", p.lo}, {"lambda_hi", p.hi}, {"experiment", experiment}});
    }
    menu["deterministic"] = deterministic;
    menu["monotone_partitional"] = true;
    return menu;
}

}  // namespace mechlearn
