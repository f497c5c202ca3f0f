// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Heavier ensembles than the unit tests; roughly ten minutes total.

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "uavnoma/learning.hpp"
#include "uavnoma/noma.hpp"
#include "uavnoma/scenario.hpp"
#include "uavnoma/spatial.hpp"
#include "uavnoma/trajectory.hpp"

using namespace uavnoma;
namespace fs = std::filesystem;

namespace {

unsigned n_workers() {
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 4 : hc;
}

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

// ---------------------------------------------------------------------------

bool criterion1_rayleigh_outage(std::string& detail) {
    Timer timer;
    FixedScenario sc; // defaults: m=1, los_only, fading on
    const double d = 100.0;
    sc.uav = {0.0, 0.0, d};
    sc.users = {{0.0, 0.0}};
    const double snr0 =
        sc.total_power * sc.channel.beta0 * std::pow(d, -2.0) / sc.channel.noise_power;
    const double r_th = std::log2(1.0 + snr0); // makes the closed-form exponent 1
    const auto res = mc_fixed(sc, {r_th}, 1000000, 20260824, n_workers());
    const auto* m = res.find("user0", "outage");
    if (m == nullptr) {
        detail = "metric missing";
        return false;
    }
    const double want = 1.0 - std::exp(-1.0);
    const double se = m->ci_halfwidth / 1.96;
    std::ostringstream os;
    os << "estimate " << m->estimate << " vs " << want << ", " << timer.seconds() << " s";
    detail = os.str();
    return std::abs(m->estimate - want) <= 3.0 * se &&
           std::abs(m->estimate - 0.6321) <= 0.002 && timer.seconds() < 30.0;
}

// ---------------------------------------------------------------------------

double grid_max_min(const std::vector<double>& gains, double step) {
    const auto order = decoding_order(gains);
    auto eval = [&](const std::vector<double>& coeffs_by_id) {
        NomaGroup g;
        g.user_ids = order;
        g.coeffs.resize(gains.size());
        for (std::size_t t = 0; t < gains.size(); ++t) g.coeffs[t] = coeffs_by_id[order[t]];
        const auto rep = noma_rates(gains, g, 1.0);
        return *std::min_element(rep.rates.begin(), rep.rates.end());
    };
    double best = 0.0;
    if (gains.size() == 2) {
        for (double a = 0.0; a <= 1.0 + 1e-12; a += step)
            best = std::max(best, eval({a, std::max(0.0, 1.0 - a)}));
    } else {
        for (double a = 0.0; a <= 1.0 + 1e-12; a += step)
            for (double b = 0.0; a + b <= 1.0 + 1e-12; b += step)
                best = std::max(best, eval({a, b, std::max(0.0, 1.0 - a - b)}));
    }
    return best;
}

bool criterion2_maxmin_oracle(std::string& detail) {
    const auto coeffs = max_min_power_allocation({10.0, 1.0}, 1.0, 1.0);
    const bool coeff_ok = std::abs(coeffs[0] - 0.08443) <= 1e-4;
    const double rate = std::log2(1.0 + 10.0 * coeffs[0]);
    const bool rate_ok = std::abs(rate - 0.8832) <= 1e-3;

    Rng rng(777);
    int bad = 0;
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = 2 + rng.below(2);
        std::vector<double> gains(n);
        for (auto& g : gains) g = std::exp(rng.uniform(-1.0, 4.0));
        const auto c = max_min_power_allocation(gains, 1.0, 1.0);
        NomaGroup grp;
        grp.user_ids = decoding_order(gains);
        grp.coeffs.resize(n);
        for (std::size_t i = 0; i < n; ++i) grp.coeffs[i] = c[grp.user_ids[i]];
        const auto rep = noma_rates(gains, grp, 1.0);
        const double ours = *std::min_element(rep.rates.begin(), rep.rates.end());
        const double grid = grid_max_min(gains, n == 2 ? 1e-4 : 1e-3);
        if (ours < grid - 1e-3) ++bad;
    }
    std::ostringstream os;
    os << "a_center " << coeffs[0] << ", rate " << rate << ", grid mismatches " << bad
       << "/100";
    detail = os.str();
    return coeff_ok && rate_ok && bad == 0;
}

// ---------------------------------------------------------------------------

struct Fig3Instance {
    double noma = 0.0, oma = 0.0;
    TrajectorySolution noma_sol, oma_sol;
    FlightConfig config;
};

bool criterion3_fig3(std::string& detail, std::vector<Fig3Instance>& audited) {
    Timer timer;
    const std::vector<double> horizons{10.0, 15.0, 20.0, 25.0};
    const int n_seeds = 100;
    std::vector<std::vector<Fig3Instance>> results(
        horizons.size(), std::vector<Fig3Instance>(n_seeds));

    std::atomic<int> next{0};
    const int total = static_cast<int>(horizons.size()) * n_seeds;
    auto work = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= total) return;
            const int hi = i / n_seeds;
            const int seed = i % n_seeds;
            FlightConfig c;
            c.T = horizons[hi];
            c.delta = 0.5;
            Rng rng = substream(9000, static_cast<std::uint64_t>(seed));
            c.users.clear();
            for (int u = 0; u < 3; ++u)
                c.users.push_back(
                    {{rng.uniform(-500.0, 500.0), rng.uniform(-500.0, 500.0)}, 0.0});
            Fig3Instance inst;
            inst.config = c;
            inst.noma_sol = optimize_joint(c);
            inst.oma_sol = oma_baseline(c);
            inst.noma = inst.noma_sol.min_avg_rate;
            inst.oma = inst.oma_sol.min_avg_rate;
            results[hi][seed] = std::move(inst);
        }
    };
    {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < n_workers(); ++w) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }

    int dominated = 0;
    std::vector<double> gap(horizons.size(), 0.0);
    for (std::size_t hi = 0; hi < horizons.size(); ++hi) {
        for (const auto& inst : results[hi]) {
            dominated += inst.noma >= inst.oma - 1e-6;
            gap[hi] += inst.noma - inst.oma;
        }
        gap[hi] /= n_seeds;
    }
    bool gap_monotone = true;
    for (std::size_t hi = 1; hi < gap.size(); ++hi)
        if (gap[hi] < gap[hi - 1] - 1e-9) gap_monotone = false;

    // keep a sample for the constraint audit
    for (std::size_t hi = 0; hi < horizons.size(); ++hi)
        for (int s = 0; s < n_seeds; s += 25) audited.push_back(results[hi][s]);

    std::ostringstream os;
    os << "NOMA>=OMA on " << dominated << "/" << total << "; gaps";
    for (const double g : gap) os << " " << g;
    os << "; " << timer.seconds() << " s";
    detail = os.str();
    return dominated >= total * 95 / 100 && gap_monotone && timer.seconds() < 600.0;
}

// ---------------------------------------------------------------------------

bool criterion4_pairing(std::string& detail) {
    DiscScenario sc;
    DiscMcConfig cfg;
    cfg.all_strategies = true;
    const auto r = mc_disc(sc, cfg, 100000, 4, n_workers());
    const auto* d1 = r.find("all", "sum_rate[near_near-random]");
    const auto* d2 = r.find("all", "noma_gain[near_far-near_near]");
    if (d1 == nullptr || d2 == nullptr) {
        detail = "paired metrics missing";
        return false;
    }
    std::ostringstream os;
    os << "nn-random " << d1->estimate << " +- " << d1->ci_halfwidth << "; nf-nn gain "
       << d2->estimate << " +- " << d2->ci_halfwidth;
    detail = os.str();
    return d1->estimate - d1->ci_halfwidth > 0.0 && d2->estimate - d2->ci_halfwidth > 0.0;
}

// ---------------------------------------------------------------------------

bool criterion5_rl_oracle(std::string& detail, std::vector<TraceStep>& trace_out) {
    GridWorld g;
    g.min_corner = {0.0, 0.0, 50.0};
    g.max_corner = {300.0, 300.0, 250.0};
    g.cell_size = {100.0, 100.0, 100.0};
    g.n_uav = 1;
    g.initial_altitude = 100.0;
    ChannelParams ch;
    const std::vector<Vec2> users{{50.0, 50.0}};
    RlHyper h;
    h.gamma = 0.9;
    h.alpha_visit_decay = true;
    h.epsilon_start = 1.0;
    h.epsilon_end = 1.0;
    h.epsilon_decay = 1.0;
    h.episodes = 600;
    h.steps_per_episode = 60;

    using Cell = std::array<std::size_t, 3>;
    const auto dims = g.dims();
    auto cell_reward = [&](const Cell& c) {
        return reward({c}, users, {0}, g, ch, 1.0, RewardObjective::min_rate);
    };
    auto step = [&](const Cell& c, int a, Cell* nxt) {
        const auto d = action_delta(a);
        for (int i = 0; i < 3; ++i) {
            const long long v = static_cast<long long>(c[i]) + d[i];
            if (v < 0 || v >= static_cast<long long>(dims[i])) return false;
            (*nxt)[i] = static_cast<std::size_t>(v);
        }
        return true;
    };
    std::map<Cell, double> value;
    std::vector<Cell> cells;
    double r_max = 0.0;
    for (std::size_t x = 0; x < dims[0]; ++x)
        for (std::size_t y = 0; y < dims[1]; ++y)
            for (std::size_t z = 0; z < dims[2]; ++z) {
                cells.push_back({x, y, z});
                value[{x, y, z}] = 0.0;
                r_max = std::max(r_max, cell_reward({x, y, z}));
            }
    for (int sweep = 0; sweep < 600; ++sweep) {
        auto next_v = value;
        for (const auto& c : cells) {
            double best = -1e300;
            for (int a = 0; a < kNumActions; ++a) {
                Cell n;
                if (!step(c, a, &n)) continue;
                best = std::max(best, cell_reward(n) + h.gamma * value[n]);
            }
            next_v[c] = best;
        }
        value = next_v;
    }

    const auto tr = train_placement(users, g, h, ch, 1.0, RewardObjective::min_rate, 4242);

    const auto km = kmeans(users, 1, 100, 1e-6, 4242);
    Cell c = g.snap({km.centroids[0][0], km.centroids[0][1], g.initial_altitude});
    const double v_star = value[c];
    double ret = 0.0, disc = 1.0;
    Rng rng(0);
    for (int t = 0; t < 600; ++t) {
        const auto key = QTable::encode(g, c);
        const int a = epsilon_greedy(tr.table, 0, key, g, c, 0.0, rng);
        Cell n;
        if (!step(c, a, &n)) {
            detail = "greedy policy chose a masked action";
            return false;
        }
        ret += disc * cell_reward(n);
        disc *= h.gamma;
        c = n;
    }

    const double bound = r_max / (1.0 - h.gamma) + 1e-9;
    bool bound_ok = true;
    for (std::size_t u = 0; u < tr.table.uav_count(); ++u)
        for (const auto& [key, q] : tr.table.table(u))
            for (const double v : q)
                if (v < -1e-12 || v > bound) bound_ok = false;

    const auto ev = evaluate_policy(tr.table, users, {}, false, g, ch, 1.0,
                                    RewardObjective::min_rate, 40, 1);
    trace_out = ev.trace;

    std::ostringstream os;
    os << "greedy return " << ret << " vs VI " << v_star << "; Q bound "
       << (bound_ok ? "held" : "violated");
    detail = os.str();
    return std::abs(ret - v_star) <= 1e-6 && bound_ok;
}

// ---------------------------------------------------------------------------

bool criterion6_constraint_audit(std::string& detail,
                                 const std::vector<Fig3Instance>& solutions,
                                 const std::vector<TraceStep>& rl_trace) {
    std::size_t audited = 0;
    try {
        for (const auto& inst : solutions) {
            audit_solution(inst.noma_sol, inst.config, 1e-9);
            audit_solution(inst.oma_sol, inst.config, 1e-9);
            audited += 2;
        }
    } catch (const std::exception& e) {
        detail = std::string("trajectory audit: ") + e.what();
        return false;
    }

    GridWorld g;
    g.min_corner = {0.0, 0.0, 50.0};
    g.max_corner = {300.0, 300.0, 250.0};
    g.cell_size = {100.0, 100.0, 100.0};
    for (const auto& ts : rl_trace)
        for (int i = 0; i < 3; ++i)
            if (ts.position[i] < g.min_corner[i] || ts.position[i] > g.max_corner[i]) {
                detail = "RL trace left the grid";
                return false;
            }

    Rng rng(31337);
    for (int t = 0; t < 1000; ++t) {
        const std::size_t n = 1 + rng.below(4);
        std::vector<double> gains(n);
        for (auto& x : gains) x = std::exp(rng.uniform(-2.0, 4.0));
        const auto c = max_min_power_allocation(gains, 1.0, 1.0);
        NomaGroup grp;
        grp.user_ids = decoding_order(gains);
        grp.coeffs.resize(n);
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            grp.coeffs[i] = c[grp.user_ids[i]];
            sum += c[i];
        }
        try {
            grp.validate();
        } catch (const std::exception& e) {
            detail = std::string("NomaGroup: ") + e.what();
            return false;
        }
        if (std::abs(sum - 1.0) > 1e-9) {
            detail = "coefficient conservation violated";
            return false;
        }
    }
    std::ostringstream os;
    os << audited << " trajectory solutions, " << rl_trace.size()
       << " trace rows, 1000 allocations audited";
    detail = os.str();
    return true;
}

// ---------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

bool criterion7_determinism(std::string& detail) {
    const char* cli = std::getenv("UAVNOMA_CLI");
    if (cli == nullptr) {
        detail = "UAVNOMA_CLI not set";
        return false;
    }
    const fs::path root = fs::temp_directory_path() / "uavnoma-acceptance";
    fs::remove_all(root);
    fs::create_directories(root);
    const fs::path cfg_s = root / "stoch.json";
    {
        std::ofstream out(cfg_s);
        out << R"({"mode": "disc", "seed": 99, "trials": 20000})";
    }
    const fs::path cfg_t = root / "traj.json";
    {
        std::ofstream out(cfg_t);
        out << R"({"mode": "trajectory", "trajectory": {"duration": 10, "slot": 0.5,
                   "users": [[200, 100], [-300, -200], [50, -400]]}})";
    }
    auto run_cli = [&](const std::string& args, const fs::path& out_dir) {
        const std::string cmd = std::string(cli) + " " + args + " --out " +
                                out_dir.string() + " > /dev/null";
        return std::system(cmd.c_str()) == 0;
    };
    bool ok = true;
    std::ostringstream os;
    // stochastic: reruns and worker counts
    for (int rep = 0; rep < 2; ++rep)
        for (const int w : {1, 4})
            ok = ok && run_cli("stochastic --config " + cfg_s.string() + " --workers " +
                                   std::to_string(w),
                               root / ("s" + std::to_string(rep) + "w" + std::to_string(w)));
    if (ok) {
        const std::string ref = slurp(root / "s0w1" / "results.csv");
        for (const char* d : {"s0w4", "s1w1", "s1w4"})
            if (slurp(root / d / "results.csv") != ref) {
                ok = false;
                os << "stochastic CSVs differ (" << d << "); ";
            }
        if (ref.empty()) ok = false;
    } else {
        os << "stochastic subcommand failed; ";
    }
    // trajectory: rerun
    bool tok = run_cli("trajectory --config " + cfg_t.string(), root / "t0") &&
               run_cli("trajectory --config " + cfg_t.string(), root / "t1");
    if (tok) {
        if (slurp(root / "t0" / "waypoints.csv") != slurp(root / "t1" / "waypoints.csv")) {
            tok = false;
            os << "trajectory CSVs differ; ";
        }
    } else {
        os << "trajectory subcommand failed; ";
    }
    fs::remove_all(root);
    if (ok && tok) detail = "stochastic workers {1,4} x2 and trajectory x2 byte-identical";
    else detail = os.str();
    return ok && tok;
}

// ---------------------------------------------------------------------------

bool criterion8_channel_statistics(std::string& detail) {
    std::ostringstream os;
    bool ok = true;

    ChannelParams p;
    Rng rng(101);
    double sum = 0.0;
    for (int i = 0; i < 1000000; ++i) sum += sample_fading(p, rng);
    const double naka_mean = sum / 1e6;
    ok = ok && std::abs(naka_mean - p.omega) <= 0.01 * p.omega;
    os << "Nakagami mean " << naka_mean;

    double csum = 0.0;
    const int reps = 100000;
    for (int i = 0; i < reps; ++i)
        csum += static_cast<double>(sample_hppp(1000.0, 1000.0, 1e-5, rng).size());
    const double count_mean = csum / reps;
    ok = ok && std::abs(count_mean - 10.0) <= 0.02 * 10.0;
    os << "; HPPP mean " << count_mean;

    DiscScenario sc;
    std::vector<double> rs;
    while (rs.size() < 100000) {
        const auto [centers, _] = sample_disc_users(sc, rng);
        for (const auto& q : centers) rs.push_back(std::hypot(q[0], q[1]));
    }
    rs.resize(100000);
    std::sort(rs.begin(), rs.end());
    double dstat = 0.0;
    const double n = static_cast<double>(rs.size());
    for (std::size_t i = 0; i < rs.size(); ++i) {
        const double f = rs[i] * rs[i] / (sc.r_split * sc.r_split);
        dstat = std::max(dstat, std::abs(f - static_cast<double>(i + 1) / n));
        dstat = std::max(dstat, std::abs(f - static_cast<double>(i) / n));
    }
    const double crit = std::sqrt(-0.5 * std::log(0.5e-3)) / std::sqrt(n);
    ok = ok && dstat < crit;
    os << "; KS " << dstat << " < " << crit;

    detail = os.str();
    return ok;
}

} // namespace

int main() {
    int failures = 0;
    std::vector<Fig3Instance> fig3_sample;
    std::vector<TraceStep> rl_trace;

    auto report = [&](int idx, const char* name, bool pass, const std::string& detail) {
        std::printf("%s criterion %d (%s): %s\n", pass ? "PASS" : "FAIL", idx, name,
                    detail.c_str());
        std::fflush(stdout);
        failures += !pass;
    };

    std::string d;
    report(1, "Rayleigh outage oracle", criterion1_rayleigh_outage(d), d);
    report(2, "max-min power oracle", criterion2_maxmin_oracle(d), d);
    report(3, "Fig. 3a qualitative reproduction", criterion3_fig3(d, fig3_sample), d);
    report(4, "pairing-strategy ordering", criterion4_pairing(d), d);
    report(5, "RL oracle equivalence", criterion5_rl_oracle(d, rl_trace), d);
    report(6, "constraint audit", criterion6_constraint_audit(d, fig3_sample, rl_trace), d);
    report(7, "determinism", criterion7_determinism(d), d);
    report(8, "statistical channel checks", criterion8_channel_statistics(d), d);

    return failures == 0 ? 0 : 1;
}
