// Command-line entry point: solve, sweep-n, simulate, verify, export-menu.
// All outputs are plot-ready CSV/JSON; reruns with the same config and seed
// produce byte-identical files (timestamps live only in summary metadata).

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mechlearn/distributions.hpp"
#include "mechlearn/first_best.hpp"
#include "mechlearn/grid_dist.hpp"
#include "mechlearn/mechanisms.hpp"
#include "mechlearn/optimizer.hpp"
#include "mechlearn/social_sim.hpp"
#include "mechlearn/verification.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mechlearn;

namespace {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    json raw;
    BeliefDistribution dist;
    int n = 2;
    int grid_k = kDefaultGridK;
    int log_bins = kDefaultLogBins;
    double log_range = 0.0;  // 0 = auto
    std::uint64_t seed = 1;
    std::size_t mc_samples = 1000000;
    std::size_t trials = 1000000;
    fs::path out_dir = "out";
};

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    RunConfig cfg;
    try {
        in >> cfg.raw;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    try {
        cfg.dist = BeliefDistribution::from_json(cfg.raw.at("distribution"));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config lacks a usable distribution: ") + e.what());
    }
    cfg.n = cfg.raw.value("n", 2);
    if (cfg.raw.contains("grid")) {
        const auto& g = cfg.raw["grid"];
        cfg.grid_k = g.value("k", kDefaultGridK);
        cfg.log_bins = g.value("log_bins", kDefaultLogBins);
        cfg.log_range = g.value("log_range", 0.0);
    }
    cfg.seed = cfg.raw.value("seed", 1ull);
    cfg.mc_samples = cfg.raw.value("mc_samples", 1000000ull);
    cfg.trials = cfg.raw.value("trials", 1000000ull);
    if (cfg.raw.contains("out_dir")) cfg.out_dir = cfg.raw["out_dir"].get<std::string>();
    if (cfg.n < 1) throw ConfigError("market size must be at least 1");
    if (cfg.grid_k < 11) throw ConfigError("grid k too small");
    return cfg;
}

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
}

void write_file(const fs::path& p, const std::string& content) {
    fs::create_directories(p.parent_path().empty() ? "." : p.parent_path());
    std::ofstream out(p);
    if (!out) throw ConfigError("cannot write " + p.string());
    out << content;
}

void write_json(const fs::path& p, const json& j) { write_file(p, j.dump(2) + "\n"); }

std::string iso_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

json meta_block(const RunConfig& cfg) {
    return {{"seed", cfg.seed}, {"config", cfg.raw}, {"timestamp", iso_timestamp()}};
}

void write_envelope_csv(const fs::path& p, const EnvelopeBounds& env) {
    std::string csv = "s,lower,upper\n";
    for (std::size_t i = 0; i < env.grid.size(); ++i)
        csv += fmt(env.grid[i]) + "," + fmt(env.lower[i]) + "," + fmt(env.upper[i]) + "\n";
    write_file(p, csv);
}

void write_solution_csv(const fs::path& p, const IndirectUtility& u, const EnvelopeBounds& env,
                        const StructureReport& rep) {
    std::vector<const char*> tag(u.grid.size(), "between");
    for (const auto& r : rep.regions) {
        const char* name = r.kind == RegionKind::AtLower  ? "lower"
                           : r.kind == RegionKind::AtUpper ? "upper"
                                                           : "between";
        for (int i = r.first; i <= r.last; ++i) tag[i] = name;
    }
    std::string csv = "s,u,lower,upper,region\n";
    for (std::size_t i = 0; i < u.grid.size(); ++i)
        csv += fmt(u.grid[i]) + "," + fmt(u.values[i]) + "," + fmt(env.lower[i]) + "," +
               fmt(env.upper[i]) + "," + tag[i] + "\n";
    write_file(p, csv);
}

json mech_summary_thresholds(const MonotoneThresholdMechanism& mech) {
    json j;
    for (const auto& p : mech.pieces) {
        if (p.kind == PieceKind::Exclude) j["s_min"] = p.hi;
        if (p.kind == PieceKind::EfficientTail && !j.contains("s_max")) j["s_max"] = p.lo;
    }
    return j;
}

int cmd_solve(const RunConfig& cfg) {
    cfg.dist.validate();
    const LikelihoodTails tails =
        LikelihoodTails::make(cfg.dist, cfg.n - 1, cfg.log_bins, cfg.log_range);
    const EnvelopeBounds env = efficient_envelope(tails, cfg.n, cfg.grid_k);
    const ObjectiveWeights weights = objective_weights(cfg.dist, cfg.grid_k);

    LpStats stats;
    const IndirectUtility solution = solve_reduced(weights, env, &stats);
    const StructureReport structure = check_extreme_structure(solution, env, 1e-6);
    const MonotoneThresholdMechanism mech =
        extract_mechanism(solution, env, cfg.dist, cfg.n, &tails);

    write_envelope_csv(cfg.out_dir / "envelope.csv", env);
    write_solution_csv(cfg.out_dir / "solution.csv", solution, env, structure);
    write_json(cfg.out_dir / "mechanism.json", mech.to_json());

    json summary;
    summary["efficient_value"] = efficient_value(cfg.dist, tails);
    summary["optimal_value"] = stats.value;
    summary["lp"] = {{"iterations", stats.iterations},
                     {"tie_iterations", stats.tie_iterations},
                     {"tie_sum", stats.tie_sum}};
    json kinks = json::array();
    for (int idx : structure.kink_indices) kinks.push_back(solution.grid[idx]);
    summary["kinks"] = kinks;
    summary.update(mech_summary_thresholds(mech));

    // The two-threshold construction and its duality certificate, where the
    // density qualifies.
    json certificate;
    if (cfg.dist.log_concave()) {
        const LogConcaveSolution lc = solve_logconcave(cfg.dist, cfg.n);
        summary["tau"] = lc.tau;
        const json th = mech_summary_thresholds(lc.mech);
        if (th.contains("s_min")) summary["s_min"] = th["s_min"];
        if (th.contains("s_max")) summary["s_max"] = th["s_max"];
        summary["construction_value"] = designer_value(lc.mech, &tails);
        certificate = verify_certificate(lc.mech).to_json();
        certificate["tau"] = lc.tau;
    } else {
        certificate = {{"skipped", "density not log-concave"}};
    }
    write_json(cfg.out_dir / "certificate.json", certificate);

    FeasibilityReport feas = check_epic(mech, 801, &tails);
    const McEstimate mc = mc_value(mech, cfg.mc_samples, cfg.seed);
    feas.value_mc = mc.mean;
    feas.value_mc_se = mc.se;
    write_json(cfg.out_dir / "feasibility.json", feas.to_json());

    summary["meta"] = meta_block(cfg);
    write_json(cfg.out_dir / "summary.json", summary);
    std::printf("solve: V=%s efficient=%s out=%s\n", fmt(stats.value).c_str(),
                fmt(summary["efficient_value"].get<double>()).c_str(), cfg.out_dir.c_str());
    return 0;
}

int cmd_sweep_n(const RunConfig& cfg, const std::vector<int>& n_list) {
    if (n_list.empty()) throw ConfigError("sweep-n needs a nonempty increasing n list");
    for (std::size_t i = 1; i < n_list.size(); ++i)
        if (n_list[i] <= n_list[i - 1]) throw ConfigError("n list must be increasing");
    cfg.dist.validate();

    const ObjectiveWeights weights = objective_weights(cfg.dist, cfg.grid_k);
    const IndirectUtility u_limit = solve_asymptotic(weights, cfg.grid_k);
    std::string csv = "n,v_n,s_min,s_max,gap_to_asymptotic\n";
    json rows = json::array();
    for (int n : n_list) {
        const LikelihoodTails tails =
            LikelihoodTails::make(cfg.dist, n - 1, cfg.log_bins, cfg.log_range);
        const EnvelopeBounds env = efficient_envelope(tails, n, cfg.grid_k);
        LpStats stats;
        (void)solve_reduced(weights, env, &stats);

        double s_min = 0.0, s_max = 1.0;
        if (cfg.dist.log_concave()) {
            const auto lc = solve_logconcave(cfg.dist, n);
            const json th = mech_summary_thresholds(lc.mech);
            s_min = th.value("s_min", 0.0);
            s_max = th.value("s_max", 1.0);
        }
        const auto family = asymptotic_family(cfg.dist, n, u_limit, &tails);
        const double family_value = designer_value(family, &tails);
        const double gap = std::abs(stats.value - family_value);
        csv += std::to_string(n) + "," + fmt(stats.value) + "," + fmt(s_min) + "," + fmt(s_max) +
               "," + fmt(gap) + "\n";
        rows.push_back({{"n", n},
                        {"v_n", stats.value},
                        {"s_min", s_min},
                        {"s_max", s_max},
                        {"family_value", family_value},
                        {"gap_to_asymptotic", gap}});
    }
    write_file(cfg.out_dir / "sweep.csv", csv);
    json summary{{"rows", rows}, {"v_infinity", objective_value(weights, u_limit)}};
    summary["meta"] = meta_block(cfg);
    write_json(cfg.out_dir / "sweep_summary.json", summary);
    std::printf("sweep-n: %zu rows -> %s\n", n_list.size(), cfg.out_dir.c_str());
    return 0;
}

void write_positions_csv(const fs::path& p, const QueueStats& stats) {
    std::string csv = "position,acceptance_rate,se\n";
    for (std::size_t i = 0; i < stats.accept_rate.size(); ++i)
        csv += std::to_string(i + 1) + "," + fmt(stats.accept_rate[i]) + "," +
               fmt(stats.accept_se[i]) + "\n";
    write_file(p, csv);
}

int cmd_simulate(const RunConfig& cfg, const std::string& network_arg) {
    if (!cfg.raw.contains("signal")) throw ConfigError("simulate needs a signal block {l, h}");
    const auto model = BinarySignalModel::make(cfg.raw["signal"].value("l", 0.2),
                                               cfg.raw["signal"].value("h", 0.7));
    json net_json;
    if (!network_arg.empty() && fs::exists(network_arg)) {
        std::ifstream in(network_arg);
        in >> net_json;
    } else if (!network_arg.empty()) {
        try {
            net_json = json::parse(network_arg);
        } catch (const json::exception& e) {
            throw ConfigError(std::string("network spec is neither a file nor JSON: ") + e.what());
        }
    } else if (cfg.raw.contains("network")) {
        net_json = cfg.raw["network"];
    } else {
        throw ConfigError("simulate needs --network or a network block in the config");
    }
    const QueueNetwork net = QueueNetwork::from_json(net_json);

    const QueueStats stats = simulate_queue(net, model, cfg.trials, cfg.seed);
    const char* kind_name = net.kind == QueueNetwork::Kind::Full    ? "full"
                            : net.kind == QueueNetwork::Kind::Empty ? "empty"
                                                                    : "custom";
    write_positions_csv(cfg.out_dir / (std::string(kind_name) + "_positions.csv"), stats);

    json summary;
    summary["network"] = kind_name;
    summary["signal"] = {{"l", model.l}, {"h", model.h}, {"p_h", model.p_h}};
    summary["cascade_condition"] =
        cascade_condition(model) == CascadeVerdict::RejectCascade ? "RejectCascade" : "AcceptCascade";
    summary[kind_name] = stats.to_json();

    // Canonical comparison: run the opposite observation regime as well.
    if (net.kind != QueueNetwork::Kind::Custom) {
        const QueueNetwork other = net.kind == QueueNetwork::Kind::Full
                                       ? QueueNetwork::empty(net.n)
                                       : QueueNetwork::full(net.n);
        const QueueStats other_stats = simulate_queue(other, model, cfg.trials, cfg.seed + 1);
        const char* other_name = other.kind == QueueNetwork::Kind::Full ? "full" : "empty";
        write_positions_csv(cfg.out_dir / (std::string(other_name) + "_positions.csv"), other_stats);
        summary[other_name] = other_stats.to_json();
        const double full_mean = net.kind == QueueNetwork::Kind::Full ? stats.mean_acceptance
                                                                      : other_stats.mean_acceptance;
        const double empty_mean = net.kind == QueueNetwork::Kind::Empty ? stats.mean_acceptance
                                                                        : other_stats.mean_acceptance;
        summary["verdict"] = full_mean <= empty_mean ? "RejectCascadeDominatedByConcealment"
                                                     : "ObservationFavoredByAcceptanceHerding";
    }
    summary["meta"] = meta_block(cfg);
    write_json(cfg.out_dir / "simulate_summary.json", summary);
    std::printf("simulate: %s network, %zu trials -> %s\n", kind_name, cfg.trials,
                cfg.out_dir.c_str());
    return 0;
}

int cmd_verify(const RunConfig& cfg, const std::string& mech_path) {
    std::ifstream in(mech_path);
    if (!in) throw ConfigError("cannot open mechanism file: " + mech_path);
    json mech_json;
    try {
        in >> mech_json;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("mechanism file is not valid JSON: ") + e.what());
    }
    const auto mech = MonotoneThresholdMechanism::from_json(mech_json);
    const LikelihoodTails tails =
        LikelihoodTails::make(mech.dist, mech.market_size - 1, cfg.log_bins, cfg.log_range);

    FeasibilityReport rep = check_epic(mech, 801, &tails);
    const McEstimate mc = mc_value(mech, cfg.mc_samples, cfg.seed);
    rep.value_mc = mc.mean;
    rep.value_mc_se = mc.se;
    const double quadrature_value = designer_value(mech, &tails);

    json out = rep.to_json();
    out["designer_value"] = quadrature_value;
    out["mc_agrees_within_4se"] = std::abs(mc.mean - quadrature_value) <= 4.0 * mc.se;
    out["meta"] = meta_block(cfg);
    write_json(cfg.out_dir / "verify.json", out);
    std::printf("verify: ic_margin=%s ir=%s epic_mass=%s -> %s\n", fmt(rep.ic_min_margin).c_str(),
                fmt(rep.ir_min).c_str(), fmt(rep.epic_violation_mass).c_str(),
                cfg.out_dir.c_str());
    return 0;  // verification reports, never fails
}

int cmd_export_menu(const RunConfig& cfg, const std::string& mech_path) {
    MonotoneThresholdMechanism mech;
    if (!mech_path.empty()) {
        std::ifstream in(mech_path);
        if (!in) throw ConfigError("cannot open mechanism file: " + mech_path);
        json j;
        in >> j;
        mech = MonotoneThresholdMechanism::from_json(j);
    } else {
        if (cfg.n != 2) throw ConfigError("persuasion export needs n = 2");
        cfg.dist.validate();
        mech = solve_logconcave(cfg.dist, 2).mech;
    }
    json menu = export_persuasion_menu(mech);
    menu["meta"] = meta_block(cfg);
    write_json(cfg.out_dir / "menu.json", menu);
    std::printf("export-menu: %zu entries -> %s\n", menu["entries"].size(), cfg.out_dir.c_str());
    return 0;
}

int fail(int code, const std::string& kind, const std::string& what, const fs::path& out_dir) {
    const json err{{"error", kind}, {"message", what}};
    std::cerr << err.dump() << "\n";
    try {
        write_json(out_dir / "error.json", err);
    } catch (...) {
    }
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"optimal no-transfer allocation mechanisms for common-value goods"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand

    std::string config_path;
    std::string out_override, network_arg, mech_path, n_list_arg;
    std::optional<std::uint64_t> seed_override;
    std::optional<int> grid_k_override, n_override;

    app.add_option("--config", config_path, "run configuration JSON")->required();
    app.add_option("--out", out_override, "output directory (overrides config)");
    app.add_option("--seed", seed_override, "RNG seed (overrides config)");
    app.add_option("--grid-k", grid_k_override, "belief grid size (overrides config)");
    app.add_option("--n", n_override, "market size (overrides config)");

    auto* solve = app.add_subcommand("solve", "solve the designer problem end to end");
    auto* sweep = app.add_subcommand("sweep-n", "solve across market sizes");
    sweep->add_option("--n-list", n_list_arg, "comma-separated increasing market sizes")
        ->required();
    auto* simulate = app.add_subcommand("simulate", "queue simulation with observational learning");
    simulate->add_option("--network", network_arg, "network spec JSON (inline or file)");
    auto* verify = app.add_subcommand("verify", "feasibility report for a mechanism JSON");
    verify->add_option("--mechanism", mech_path, "mechanism JSON path")->required();
    auto* menu = app.add_subcommand("export-menu", "persuasion menu of the two-agent optimum");
    menu->add_option("--mechanism", mech_path, "mechanism JSON path (otherwise solve)");

    CLI11_PARSE(app, argc, argv);

    fs::path out_dir = out_override.empty() ? "out" : fs::path(out_override);
    try {
        RunConfig cfg = load_config(config_path);
        if (!out_override.empty()) cfg.out_dir = out_override;
        if (seed_override) cfg.seed = *seed_override;
        if (grid_k_override) cfg.grid_k = *grid_k_override;
        if (n_override) cfg.n = *n_override;
        out_dir = cfg.out_dir;
        fs::create_directories(cfg.out_dir);

        if (solve->parsed()) return cmd_solve(cfg);
        if (sweep->parsed()) {
            std::vector<int> n_list;
            std::string token;
            std::istringstream stream(n_list_arg);
            while (std::getline(stream, token, ',')) n_list.push_back(std::stoi(token));
            return cmd_sweep_n(cfg, n_list);
        }
        if (simulate->parsed()) return cmd_simulate(cfg, network_arg);
        if (verify->parsed()) return cmd_verify(cfg, mech_path);
        if (menu->parsed()) return cmd_export_menu(cfg, mech_path);
        return 2;
    } catch (const ConfigError& e) {
        return fail(2, "config", e.what(), out_dir);
    } catch (const InvalidDistribution& e) {
        return fail(2, "invalid_distribution", e.what(), out_dir);
    } catch (const WrongMarketSize& e) {
        return fail(2, "wrong_market_size", e.what(), out_dir);
    } catch (const CertificateFailed& e) {
        return fail(4, "certificate_failed", e.what(), out_dir);
    } catch (const Error& e) {
        return fail(3, "numerical", e.what(), out_dir);
    } catch (const std::exception& e) {
        return fail(3, "unexpected", e.what(), out_dir);
    }
}
