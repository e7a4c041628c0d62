#include "mechlearn/social_sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <thread>

#include "mechlearn/rng.hpp"
#include "mechlearn/workers.hpp"

namespace mechlearn {

BinarySignalModel BinarySignalModel::make(double l, double h) {
    if (!(l >= 0.0 && l < 0.5 && h > 0.5 && h <= 1.0))
        throw Error("binary signal model needs l < 1/2 < h");
    BinarySignalModel m;
    m.l = l;
    m.h = h;
    m.p_h = (0.5 - l) / (h - l);
    return m;
}

CascadeVerdict cascade_condition(const BinarySignalModel& m) {
    return m.l + m.h < 1.0 ? CascadeVerdict::RejectCascade : CascadeVerdict::AcceptCascade;
}

QueueNetwork QueueNetwork::full(int n) { return {n, Kind::Full, {}}; }
QueueNetwork QueueNetwork::empty(int n) { return {n, Kind::Empty, {}}; }

QueueNetwork QueueNetwork::custom(std::vector<std::vector<int>> observe) {
    QueueNetwork net;
    net.n = static_cast<int>(observe.size());
    net.kind = Kind::Custom;
    for (int i = 0; i < net.n; ++i) {
        for (int j : observe[i])
            if (j < 0 || j >= i) throw Error("observation set of agent " + std::to_string(i) +
                                             " must contain earlier agents only");
        std::sort(observe[i].begin(), observe[i].end());
    }
    net.observe = std::move(observe);
    return net;
}

QueueNetwork QueueNetwork::from_json(const nlohmann::json& j) {
    const int n = j.at("n").get<int>();
    const auto& obs = j.at("observe");
    if (obs.is_string()) {
        const std::string s = obs.get<std::string>();
        if (s == "full") return full(n);
        if (s == "empty") return empty(n);
        throw Error("unknown network tag: " + s);
    }
    auto sets = obs.get<std::vector<std::vector<int>>>();
    if (static_cast<int>(sets.size()) != n) throw Error("observe list must have n entries");
    return custom(std::move(sets));
}

nlohmann::json QueueStats::to_json() const {
    return {{"accept_rate", accept_rate},
            {"accept_se", accept_se},
            {"mean_acceptance", mean_acceptance},
            {"reject_cascade_freq", reject_cascade_freq},
            {"accept_cascade_freq", accept_cascade_freq},
            {"mean_onset", mean_onset},
            {"cascade_persistence_ok", cascade_persistence_ok},
            {"accept_rate_after_first_reject", accept_rate_after_first_reject},
            {"trials", trials}};
}

namespace {

struct SignalLaw {
    double z_l, z_h;      // log likelihood ratios of the two signals
    double p_h_plus;      // P[h | +1] = 2 h p_h
    double p_h_minus;     // P[h | -1] = 2 (1-h) p_h

    explicit SignalLaw(const BinarySignalModel& m)
        : z_l(std::log(m.l / (1.0 - m.l))),
          z_h(std::log(m.h / (1.0 - m.h))),
          p_h_plus(2.0 * m.h * m.p_h),
          p_h_minus(2.0 * (1.0 - m.h) * m.p_h) {}
};

// Exact sequential-equilibrium decision tables for a custom network:
// decision[i][pattern][signal], where pattern packs the observed actions of
// B(i) in ascending predecessor order. Built by forward enumeration of the
// joint law of (state, full action history).
struct CustomTables {
    std::vector<std::vector<std::array<bool, 2>>> decide;  // [agent][pattern][s==h]

    CustomTables(const QueueNetwork& net, const SignalLaw& law) {
        const int n = net.n;
        // joint[w][h]: probability of state w and action history h (bit i =
        // agent i's action).
        std::vector<std::array<double, 2>> joint(std::size_t{1} << n, {0.0, 0.0});
        joint[0] = {0.5, 0.5};
        decide.resize(n);
        std::size_t histories = 1;
        for (int i = 0; i < n; ++i) {
            const auto& obs = net.observe[i];
            const int patterns = 1 << obs.size();
            decide[i].assign(patterns, {false, false});
            // posterior masses per observed pattern
            std::vector<std::array<double, 2>> pat(patterns, {0.0, 0.0});
            for (std::size_t hist = 0; hist < histories; ++hist) {
                int pattern = 0;
                for (std::size_t b = 0; b < obs.size(); ++b)
                    if (hist >> obs[b] & 1) pattern |= 1 << b;
                pat[pattern][0] += joint[hist][0];
                pat[pattern][1] += joint[hist][1];
            }
            for (int pattern = 0; pattern < patterns; ++pattern) {
                for (int sig = 0; sig < 2; ++sig) {
                    const double ps_plus = sig ? law.p_h_plus : 1.0 - law.p_h_plus;
                    const double ps_minus = sig ? law.p_h_minus : 1.0 - law.p_h_minus;
                    // accept iff P[+1 | pattern, signal] >= 1/2
                    decide[i][pattern][sig] = pat[pattern][1] * ps_plus >= pat[pattern][0] * ps_minus;
                }
            }
            // extend the joint law by agent i's action
            std::vector<std::array<double, 2>> next(histories << 1, {0.0, 0.0});
            for (std::size_t hist = 0; hist < histories; ++hist) {
                int pattern = 0;
                for (std::size_t b = 0; b < obs.size(); ++b)
                    if (hist >> obs[b] & 1) pattern |= 1 << b;
                for (int sig = 0; sig < 2; ++sig) {
                    const double ps_plus = sig ? law.p_h_plus : 1.0 - law.p_h_plus;
                    const double ps_minus = sig ? law.p_h_minus : 1.0 - law.p_h_minus;
                    const bool act = decide[i][pattern][sig];
                    const std::size_t to = hist | (static_cast<std::size_t>(act) << i);
                    next[to][0] += joint[hist][0] * ps_minus;
                    next[to][1] += joint[hist][1] * ps_plus;
                }
            }
            joint = std::move(next);
            histories <<= 1;
        }
    }
};

}  // namespace

namespace {

struct TrialTallies {
    std::vector<std::size_t> accepts;
    std::size_t reject_cascades = 0, accept_cascades = 0, onset_sum = 0, cascade_trials = 0;
    std::size_t first_reject_trials = 0, accepts_after_first_reject = 0;
    bool persistence_ok = true;

    explicit TrialTallies(int n) : accepts(n, 0) {}

    void merge(const TrialTallies& other) {
        for (std::size_t i = 0; i < accepts.size(); ++i) accepts[i] += other.accepts[i];
        reject_cascades += other.reject_cascades;
        accept_cascades += other.accept_cascades;
        onset_sum += other.onset_sum;
        cascade_trials += other.cascade_trials;
        first_reject_trials += other.first_reject_trials;
        accepts_after_first_reject += other.accepts_after_first_reject;
        persistence_ok = persistence_ok && other.persistence_ok;
    }
};

void run_trials(const QueueNetwork& net, const SignalLaw& law, const CustomTables* tables,
                std::size_t trials, RngStream rng, TrialTallies& out) {
    const int n = net.n;
    std::vector<bool> actions(n);
    for (std::size_t t = 0; t < trials; ++t) {
        const bool state_plus = rng.next_u64() & 1;
        const double p_h = state_plus ? law.p_h_plus : law.p_h_minus;

        if (net.kind == QueueNetwork::Kind::Empty) {
            for (int i = 0; i < n; ++i) {
                const bool high = rng.next_double() < p_h;
                if (high) ++out.accepts[i];  // accept iff the private belief clears 1/2
            }
            continue;
        }

        if (net.kind == QueueNetwork::Kind::Custom) {
            for (int i = 0; i < n; ++i) {
                const bool high = rng.next_double() < p_h;
                int pattern = 0;
                const auto& obs = net.observe[i];
                for (std::size_t b = 0; b < obs.size(); ++b)
                    if (actions[obs[b]]) pattern |= 1 << b;
                actions[i] = tables->decide[i][pattern][high];
                if (actions[i]) ++out.accepts[i];
            }
            continue;
        }

        // Full observation: the public log likelihood ratio evolves only
        // while actions stay informative.
        double lambda = 0.0;
        int onset = -1;
        bool cascade_action = false;
        for (int i = 0; i < n; ++i) {
            const bool high = rng.next_double() < p_h;
            const bool act_l = lambda + law.z_l >= 0.0;
            const bool act_h = lambda + law.z_h >= 0.0;
            const bool uninformative = act_l == act_h;
            const bool act = high ? act_h : act_l;
            if (uninformative && onset < 0) {
                onset = i;
                cascade_action = act;
            }
            if (onset >= 0 && act != cascade_action) out.persistence_ok = false;
            if (!uninformative) lambda += high ? law.z_h : law.z_l;
            actions[i] = act;
            if (act) ++out.accepts[i];
        }
        if (onset >= 0) {
            ++out.cascade_trials;
            out.onset_sum += static_cast<std::size_t>(onset) + 1;
            (cascade_action ? out.accept_cascades : out.reject_cascades) += 1;
        }
        if (n > 1 && !actions[0]) {
            ++out.first_reject_trials;
            for (int i = 1; i < n; ++i) out.accepts_after_first_reject += actions[i];
        }
    }
}

}  // namespace

QueueStats simulate_queue(const QueueNetwork& net, const BinarySignalModel& m, std::size_t trials,
                          std::uint64_t seed, int workers) {
    const int n = net.n;
    if (n < 1) throw Error("queue needs at least one agent");
    if (net.kind == QueueNetwork::Kind::Custom && n > 12)
        throw UnsupportedNetwork("custom networks support exact updating only up to n = 12");
    const SignalLaw law(m);
    std::unique_ptr<CustomTables> tables;
    if (net.kind == QueueNetwork::Kind::Custom) tables = std::make_unique<CustomTables>(net, law);

    const int nw = resolve_workers(workers);
    std::vector<TrialTallies> partial(nw, TrialTallies(n));
    {
        std::vector<std::thread> pool;
        pool.reserve(nw);
        for (int w = 0; w < nw; ++w) {
            const std::size_t chunk = trials / nw + (w < static_cast<int>(trials % nw) ? 1 : 0);
            pool.emplace_back(run_trials, std::cref(net), std::cref(law), tables.get(), chunk,
                              RngStream(seed, static_cast<std::uint64_t>(w)),
                              std::ref(partial[w]));
        }
        for (auto& t : pool) t.join();
    }
    TrialTallies tallies(n);
    for (const auto& p : partial) tallies.merge(p);  // worker order fixes the reduction

    const auto& accepts = tallies.accepts;
    const std::size_t reject_cascades = tallies.reject_cascades,
                      accept_cascades = tallies.accept_cascades, onset_sum = tallies.onset_sum,
                      cascade_trials = tallies.cascade_trials,
                      first_reject_trials = tallies.first_reject_trials,
                      accepts_after_first_reject = tallies.accepts_after_first_reject;
    const bool persistence_ok = tallies.persistence_ok;

    QueueStats stats;
    stats.trials = trials;
    stats.accept_rate.resize(n);
    stats.accept_se.resize(n);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const double p = static_cast<double>(accepts[i]) / static_cast<double>(trials);
        stats.accept_rate[i] = p;
        stats.accept_se[i] = std::sqrt(std::max(0.0, p * (1.0 - p)) / static_cast<double>(trials));
        total += p;
    }
    stats.mean_acceptance = total / n;
    if (net.kind == QueueNetwork::Kind::Full && trials > 0) {
        stats.reject_cascade_freq = static_cast<double>(reject_cascades) / trials;
        stats.accept_cascade_freq = static_cast<double>(accept_cascades) / trials;
        stats.mean_onset =
            cascade_trials ? static_cast<double>(onset_sum) / cascade_trials : 0.0;
        stats.cascade_persistence_ok = persistence_ok;
        stats.accept_rate_after_first_reject =
            first_reject_trials ? static_cast<double>(accepts_after_first_reject) /
                                      (static_cast<double>(first_reject_trials) * (n - 1))
                                : 0.0;
    }
    return stats;
}

std::vector<double> queue_threshold_values(
    const std::vector<MonotoneThresholdMechanism>& per_agent) {
    std::vector<double> values;
    values.reserve(per_agent.size());
    for (std::size_t i = 0; i < per_agent.size(); ++i) {
        const int market = static_cast<int>(i) + 1;
        if (per_agent[i].market_size != market)
            throw Error("queue mechanism for agent " + std::to_string(market) +
                        " must condition on exactly " + std::to_string(market - 1) +
                        " predecessors");
        values.push_back(designer_value(per_agent[i]));
    }
    return values;
}

}  // namespace mechlearn
