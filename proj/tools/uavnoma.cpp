#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "uavnoma/scenario.hpp"

namespace {

struct CommonOpts {
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    bool has_seed = false;
    std::uint64_t trials = 0;
    bool has_trials = false;
    std::uint64_t episodes = 0;
    bool has_episodes = false;
    unsigned workers = 0;
    bool has_workers = false;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config, "scenario config file (JSON)")->required();
    cmd->add_option("--seed", o.seed, "override the config seed")
        ->each([&](const std::string&) { o.has_seed = true; });
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--trials", o.trials, "override Monte Carlo trials")
        ->each([&](const std::string&) { o.has_trials = true; });
    cmd->add_option("--episodes", o.episodes, "override training episodes")
        ->each([&](const std::string&) { o.has_episodes = true; });
    cmd->add_option("--workers", o.workers, "worker threads for Monte Carlo")
        ->each([&](const std::string&) { o.has_workers = true; });
}

std::string resolve_out_dir(const uavnoma::Scenario& s, const CommonOpts& o) {
    if (!o.out.empty()) return o.out;
    if (!s.output_dir.empty()) return s.output_dir;
    std::string root = "runs";
    if (const char* env = std::getenv("UAVNOMA_OUT_ROOT"); env != nullptr && *env != '\0')
        root = env;
    const std::string hash = uavnoma::scenario_hash(s);
    return root + "/" + uavnoma::to_string(s.mode) + "-" + hash.substr(0, 8) + "-seed" +
           std::to_string(s.seed);
}

int run_subcommand(const CommonOpts& o, bool want_stochastic, uavnoma::RunMode want_mode) {
    uavnoma::Scenario s = uavnoma::parse_scenario(o.config);
    const bool mode_ok =
        want_stochastic
            ? (s.mode == uavnoma::RunMode::disc || s.mode == uavnoma::RunMode::ppp)
            : s.mode == want_mode;
    if (!mode_ok)
        throw std::runtime_error("config error: mode '" + uavnoma::to_string(s.mode) +
                                 "' does not match this subcommand");
    if (o.has_seed) s.seed = o.seed;
    if (o.has_trials) s.trials = o.trials;
    if (o.has_episodes) s.rl.hyper.episodes = o.episodes;
    if (o.has_workers) s.workers = o.workers;
    s.validate();
    const std::string dir = resolve_out_dir(s, o);
    const auto man = uavnoma::run(s, dir);
    nlohmann::json j;
    j["status"] = "ok";
    j["out_dir"] = dir;
    j["scenario_hash"] = man.scenario_hash;
    j["seed"] = man.seed;
    j["outputs"] = man.outputs;
    j["wall_time_s"] = man.wall_time_s;
    std::cout << j.dump() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"NOMA-aided UAV network simulation laboratory"};
    app.require_subcommand(1);
    app.set_version_flag("--version", uavnoma::kToolVersion);

    CommonOpts stoch_o, traj_o, place_o, move_o;
    auto* stoch = app.add_subcommand("stochastic", "Monte Carlo outage/rate (disc or ppp mode)");
    add_common(stoch, stoch_o);
    auto* traj = app.add_subcommand("trajectory", "joint trajectory/power optimization");
    add_common(traj, traj_o);
    auto* place = app.add_subcommand("placement", "Q-learning UAV placement, static users");
    add_common(place, place_o);
    auto* move = app.add_subcommand("movement", "Q-learning UAV movement, mobile users");
    add_common(move, move_o);

    auto* cmp = app.add_subcommand("compare", "pair metrics of two completed runs");
    std::string dir_a, dir_b, metric;
    cmp->add_option("run_a", dir_a, "first run directory")->required();
    cmp->add_option("run_b", dir_b, "second run directory")->required();
    cmp->add_option("--metric", metric, "restrict to one metric name");

    CLI11_PARSE(app, argc, argv);

    try {
        if (stoch->parsed())
            return run_subcommand(stoch_o, true, uavnoma::RunMode::disc);
        if (traj->parsed())
            return run_subcommand(traj_o, false, uavnoma::RunMode::trajectory);
        if (place->parsed())
            return run_subcommand(place_o, false, uavnoma::RunMode::placement);
        if (move->parsed())
            return run_subcommand(move_o, false, uavnoma::RunMode::movement);
        if (cmp->parsed()) {
            const auto rep = uavnoma::compare_runs(dir_a, dir_b, metric);
            std::cout << rep.table();
            return 0;
        }
    } catch (const std::exception& e) {
        nlohmann::json err;
        err["status"] = "error";
        err["error"] = e.what();
        std::cout << err.dump() << "\n";
        return 1;
    }
    return 0;
}
