#include "uavnoma/scenario.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace uavnoma {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_text(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

std::string run_stochastic(const Scenario& s, const McResult& r, const std::string& hash) {
    const std::string policy = [&] {
        if (s.mode == RunMode::ppp) {
            switch (s.ppp_mc.policy) {
                case AssociationPolicy::k_nearest: return "k_nearest";
                case AssociationPolicy::mean_power: return "mean_power";
                case AssociationPolicy::max_sinr: return "max_sinr";
            }
        }
        switch (s.disc_mc.strategy) {
            case PairingStrategy::random: return "random";
            case PairingStrategy::near_near: return "near_near";
            case PairingStrategy::near_far: return "near_far";
        }
        return "?";
    }();
    std::ostringstream csv;
    csv << "scenario_hash,seed,mode,policy,user_class,metric,estimate,ci_halfwidth,trials\n";
    for (const auto& m : r.metrics) {
        csv << hash << ',' << s.seed << ',' << to_string(s.mode) << ',' << policy << ','
            << m.user_class << ',' << m.name << ',' << fmt(m.estimate) << ','
            << fmt(m.ci_halfwidth) << ',' << r.trials << '\n';
    }
    return csv.str();
}

std::string waypoints_csv(const Scenario& s, const TrajectorySolution& sol,
                          const std::string& hash) {
    const std::size_t n_users = s.flight.users.size();
    std::ostringstream csv;
    csv << "scenario_hash,seed,slot,x,y,speed";
    for (std::size_t k = 1; k <= n_users; ++k) csv << ",p_" << k;
    for (std::size_t k = 1; k <= n_users; ++k) csv << ",rate_" << k;
    csv << '\n';
    for (std::size_t n = 0; n < sol.waypoints.size(); ++n) {
        csv << hash << ',' << s.seed << ',' << n << ',' << fmt(sol.waypoints[n][0]) << ','
            << fmt(sol.waypoints[n][1]);
        if (n == 0) {
            csv << ",0";
            for (std::size_t k = 0; k < 2 * n_users; ++k) csv << ",0";
        } else {
            const double dx = sol.waypoints[n][0] - sol.waypoints[n - 1][0];
            const double dy = sol.waypoints[n][1] - sol.waypoints[n - 1][1];
            csv << ',' << fmt(std::hypot(dx, dy) / s.flight.delta);
            std::vector<double> p(n_users);
            for (std::size_t k = 0; k < n_users; ++k) p[k] = sol.powers[k][n - 1];
            const auto rates = slot_rates(sol.waypoints[n], p, s.flight);
            for (std::size_t k = 0; k < n_users; ++k) csv << ',' << fmt(p[k]);
            for (std::size_t k = 0; k < n_users; ++k) csv << ',' << fmt(rates[k]);
        }
        csv << '\n';
    }
    return csv.str();
}

std::string trace_csv(const Scenario& s, const std::vector<TraceStep>& trace,
                      const std::string& hash) {
    std::ostringstream csv;
    csv << "scenario_hash,seed,t,uav,x,y,z,action,reward\n";
    for (const auto& ts : trace) {
        csv << hash << ',' << s.seed << ',' << ts.t << ',' << ts.uav << ','
            << fmt(ts.position[0]) << ',' << fmt(ts.position[1]) << ',' << fmt(ts.position[2])
            << ',' << ts.action << ',' << fmt(ts.reward) << '\n';
    }
    return csv.str();
}

} // namespace

RunManifest run(const Scenario& scenario, const std::string& out_dir) {
    const auto t0 = std::chrono::steady_clock::now();
    scenario.validate();
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);

    RunManifest man;
    man.seed = scenario.seed;
    man.scenario_hash = scenario_hash(scenario);

    json summary;
    summary["scenario_hash"] = man.scenario_hash;
    summary["seed"] = scenario.seed;
    summary["mode"] = to_string(scenario.mode);
    summary["tool_version"] = kToolVersion;

    auto emit = [&](const std::string& name, const std::string& content) {
        write_text(dir / name, content);
        man.outputs.push_back(name);
    };

    switch (scenario.mode) {
        case RunMode::disc:
        case RunMode::ppp: {
            const McResult r =
                scenario.mode == RunMode::disc
                    ? mc_disc(scenario.disc, scenario.disc_mc, scenario.trials, scenario.seed,
                              scenario.workers)
                    : mc_ppp(scenario.ppp, scenario.ppp_mc, scenario.trials, scenario.seed,
                             scenario.workers);
            emit("results.csv", run_stochastic(scenario, r, man.scenario_hash));
            summary["trials"] = r.trials;
            summary["csi_probes"] = r.csi_probes;
            summary["metric_count"] = r.metrics.size();
            break;
        }
        case RunMode::trajectory: {
            const TrajectorySolution sol = scenario.flight_oma
                                               ? oma_baseline(scenario.flight)
                                               : optimize_joint(scenario.flight);
            audit_solution(sol, scenario.flight, 1e-9);
            emit("waypoints.csv", waypoints_csv(scenario, sol, man.scenario_hash));
            summary["scheme"] = scenario.flight_oma ? "oma" : "noma";
            summary["min_avg_rate"] = sol.min_avg_rate;
            summary["iterations"] = sol.iterations;
            summary["converged"] = sol.converged;
            break;
        }
        case RunMode::placement:
        case RunMode::movement: {
            const bool moving = scenario.mode == RunMode::movement;
            const auto& rl = scenario.rl;
            const TrainResult tr =
                moving ? train_movement(rl.users, rl.walk, rl.grid, rl.hyper, rl.channel,
                                        rl.total_power, rl.objective, scenario.seed)
                       : train_placement(rl.users, rl.grid, rl.hyper, rl.channel,
                                         rl.total_power, rl.objective, scenario.seed);
            // held-out greedy evaluation on its own stream
            const EvalResult ev =
                evaluate_policy(tr.table, rl.users, rl.walk, moving, rl.grid, rl.channel,
                                rl.total_power, rl.objective, rl.eval_horizon,
                                scenario.seed ^ 0x9e3779b97f4a7c15ull);
            emit("trace.csv", trace_csv(scenario, ev.trace, man.scenario_hash));
            emit("qtable.json", tr.table.to_json(rl.grid, rl.hyper));
            summary["episodes"] = rl.hyper.episodes;
            summary["greedy_mean_reward"] = tr.greedy_mean_reward;
            summary["eval_mean_reward"] = ev.mean_reward;
            json cells = json::array();
            for (const auto& c : tr.final_cells) cells.push_back(c);
            summary["final_cells"] = cells;
            break;
        }
    }

    const auto t1 = std::chrono::steady_clock::now();
    man.wall_time_s = std::chrono::duration<double>(t1 - t0).count();
    summary["wall_time_s"] = man.wall_time_s;
    emit("summary.json", summary.dump(2) + "\n");

    json mj;
    mj["scenario_hash"] = man.scenario_hash;
    mj["tool_version"] = man.tool_version;
    mj["wall_time_s"] = man.wall_time_s;
    mj["seed"] = man.seed;
    mj["outputs"] = man.outputs;
    write_text(dir / "manifest.json", mj.dump(2) + "\n");
    return man;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

// metric identity -> estimate, keyed "policy/user_class/metric"
std::vector<std::pair<std::string, double>> load_metrics(const fs::path& dir) {
    std::vector<std::pair<std::string, double>> out;
    const fs::path csv = dir / "results.csv";
    if (fs::exists(csv)) {
        std::ifstream in(csv);
        std::string line;
        std::getline(in, line); // header
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto f = split_csv_line(line);
            if (f.size() < 9) continue;
            out.emplace_back(f[3] + "/" + f[4] + "/" + f[5], std::stod(f[6]));
        }
        return out;
    }
    const fs::path sj = dir / "summary.json";
    if (!fs::exists(sj)) throw std::runtime_error("compare: no results in " + dir.string());
    std::ifstream in(sj);
    const json j = json::parse(in);
    for (const auto& [key, val] : j.items())
        if (val.is_number()) out.emplace_back(key, val.get<double>());
    return out;
}

std::string manifest_hash(const fs::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw std::runtime_error("compare: missing manifest in " + dir.string());
    return json::parse(in).at("scenario_hash").get<std::string>();
}

} // namespace

std::string CompareReport::table() const {
    std::size_t w = 6;
    for (const auto& r : rows) w = std::max(w, r.key.size());
    std::ostringstream os;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%-*s %14s %14s %12s\n", static_cast<int>(w), "metric",
                  "run_a", "run_b", "rel_gain");
    os << buf;
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%-*s %14.6g %14.6g %12.4g\n", static_cast<int>(w),
                      r.key.c_str(), r.a, r.b, r.gain);
        os << buf;
    }
    if (hash_mismatch) os << "warning: scenario hashes differ between runs\n";
    return os.str();
}

CompareReport compare_runs(const std::string& dir_a, const std::string& dir_b,
                           const std::string& metric) {
    CompareReport rep;
    rep.hash_mismatch = manifest_hash(dir_a) != manifest_hash(dir_b);
    const auto ma = load_metrics(dir_a);
    const auto mb = load_metrics(dir_b);
    auto matches = [&](const std::string& key) {
        if (metric.empty()) return true;
        return key == metric || key.size() > metric.size() &&
                                    key.compare(key.size() - metric.size() - 1,
                                                metric.size() + 1, "/" + metric) == 0;
    };
    bool found = false;
    for (const auto& [key, va] : ma) {
        if (!matches(key)) continue;
        for (const auto& [kb, vb] : mb) {
            if (kb != key) continue;
            CompareRow row;
            row.key = key;
            row.a = va;
            row.b = vb;
            row.gain = va != 0.0 ? (vb - va) / std::abs(va) : 0.0;
            rep.rows.push_back(row);
            found = true;
            break;
        }
    }
    if (!metric.empty() && !found)
        throw std::runtime_error("compare: metric '" + metric + "' absent from both runs");
    if (rep.rows.empty()) throw std::runtime_error("compare: no common metrics");
    return rep;
}

} // namespace uavnoma
