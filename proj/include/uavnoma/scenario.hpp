#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uavnoma/learning.hpp"
#include "uavnoma/spatial.hpp"
#include "uavnoma/trajectory.hpp"

namespace uavnoma {

inline constexpr const char* kToolVersion = "1.0.0";

enum class RunMode { disc, ppp, trajectory, placement, movement };

std::string to_string(RunMode mode);

/// Reinforcement-learning scenario block (placement and movement modes).
struct RlScenario {
    GridWorld grid;
    RlHyper hyper;
    RandomWalkParams walk;
    RewardObjective objective = RewardObjective::min_rate;
    std::vector<Vec2> users;
    double total_power = 1.0;
    std::size_t eval_horizon = 40;
    ChannelParams channel;
};

/// One fully-resolved run description. Mode-specific blocks other than the
/// active one keep their defaults and do not enter the scenario hash.
struct Scenario {
    RunMode mode = RunMode::disc;
    std::uint64_t seed = 1;
    std::uint64_t trials = 100000;
    unsigned workers = 1;
    std::string output_dir; // empty -> resolved by the CLI

    DiscScenario disc;
    DiscMcConfig disc_mc;
    PppScenario ppp;
    PppMcConfig ppp_mc;
    FlightConfig flight;
    bool flight_oma = false; // serve one user per slot (baseline scheme)
    RlScenario rl;

    void validate() const;
};

/// Parses and validates a config file. Unknown keys are rejected; dB-suffixed
/// channel fields are converted to linear on load. Throws std::runtime_error
/// with the offending field name.
Scenario parse_scenario(const std::string& path);
Scenario parse_scenario_text(const std::string& text);

/// FNV-1a over the canonical (key-sorted) serialization of the resolved
/// active-mode config. Stable under key reordering in the input file;
/// excludes seed, workers and output paths.
std::string scenario_hash(const Scenario& scenario);

struct RunManifest {
    std::string scenario_hash;
    std::string tool_version = kToolVersion;
    double wall_time_s = 0.0;
    std::uint64_t seed = 0;
    std::vector<std::string> outputs; // file names relative to the run dir
};

/// Executes the scenario and writes result files into `out_dir` (created if
/// missing): result CSVs, summary.json, manifest.json. Deterministic for a
/// given (scenario, seed) up to the manifest wall time.
RunManifest run(const Scenario& scenario, const std::string& out_dir);

struct CompareRow {
    std::string key;    // joined metric identity
    double a = 0.0;
    double b = 0.0;
    double gain = 0.0;  // (b - a) / |a|, 0 when a == 0
};

struct CompareReport {
    bool hash_mismatch = false;
    std::vector<CompareRow> rows;

    std::string table() const; // aligned text table
};

/// Pairs metrics of two completed run directories by identity. Throws when a
/// requested metric is absent from either run.
CompareReport compare_runs(const std::string& dir_a, const std::string& dir_b,
                           const std::string& metric = "");

} // namespace uavnoma
