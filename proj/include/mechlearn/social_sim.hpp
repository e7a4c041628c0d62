#pragma once

#include <cstdint>
#include <vector>

#include "mechlearn/mechanisms.hpp"

#include <json.hpp>

namespace mechlearn {

/// Binary private beliefs l < 1/2 < h with the weight on h pinned by Bayes
/// plausibility: p_h h + (1 - p_h) l = 1/2.
struct BinarySignalModel {
    double l = 0.2, h = 0.7, p_h = 0.6;

    static BinarySignalModel make(double l, double h);
};

enum class CascadeVerdict { RejectCascade, AcceptCascade };

/// l + h < 1: an initial rejection makes agent 2 reject on either signal and
/// herding on rejection follows. l + h >= 1: the opposite, acceptance herds.
CascadeVerdict cascade_condition(const BinarySignalModel& m);

struct QueueNetwork {
    enum class Kind { Full, Empty, Custom };
    int n = 2;
    Kind kind = Kind::Full;
    std::vector<std::vector<int>> observe;  // custom: per-agent predecessor sets

    static QueueNetwork full(int n);
    static QueueNetwork empty(int n);
    static QueueNetwork custom(std::vector<std::vector<int>> observe);
    /// {"n": 5, "observe": "full" | "empty" | [[],[0],[0,1],...]}
    static QueueNetwork from_json(const nlohmann::json& j);
};

struct QueueStats {
    std::vector<double> accept_rate;  // per position
    std::vector<double> accept_se;
    double mean_acceptance = 0.0;
    double reject_cascade_freq = 0.0;  // full networks only
    double accept_cascade_freq = 0.0;
    double mean_onset = 0.0;           // mean first uninformative position
    bool cascade_persistence_ok = true;
    /// Acceptance rate of positions 2.. conditional on agent 1 rejecting
    /// (full networks; 0/0 counts as 0).
    double accept_rate_after_first_reject = 0.0;
    std::size_t trials = 0;

    nlohmann::json to_json() const;
};

/// Sequential play with exact Bayesian agents who accept at likelihood ratio
/// >= 1 (ties accept). Full networks run the cascade recursion; empty
/// networks decide on private signals alone; custom networks (n <= 12) use
/// exact posterior tables built by forward enumeration over action histories.
/// Trials fan out over counter-based worker streams; fixed (seed, workers)
/// reproduces bit-for-bit.
QueueStats simulate_queue(const QueueNetwork& net, const BinarySignalModel& m,
                          std::size_t trials, std::uint64_t seed, int workers = 0);

/// Designer values of a monotone threshold queue mechanism: agent i's rule
/// may condition only on the first i - 1 signals, so its value is the
/// market-size-i designer value. Throws when a mechanism's market size
/// disagrees with its queue position.
std::vector<double> queue_threshold_values(const std::vector<MonotoneThresholdMechanism>& per_agent);

}  // namespace mechlearn
