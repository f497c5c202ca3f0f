#include "uavnoma/learning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

#include "uavnoma/noma.hpp"

namespace uavnoma {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
using Cell = std::array<std::size_t, 3>;
} // namespace

std::array<std::size_t, 3> GridWorld::dims() const {
    std::array<std::size_t, 3> d{};
    for (int i = 0; i < 3; ++i) {
        const double span = max_corner[i] - min_corner[i];
        d[i] = static_cast<std::size_t>(std::max(1.0, std::floor(span / cell_size[i] + 0.5)));
    }
    return d;
}

Vec3 GridWorld::cell_center(const Cell& cell) const {
    Vec3 p;
    for (int i = 0; i < 3; ++i)
        p[i] = min_corner[i] + (static_cast<double>(cell[i]) + 0.5) * cell_size[i];
    return p;
}

Cell GridWorld::snap(const Vec3& pos) const {
    const auto d = dims();
    Cell c{};
    for (int i = 0; i < 3; ++i) {
        const double rel = (pos[i] - min_corner[i]) / cell_size[i];
        const auto idx = static_cast<long long>(std::floor(rel));
        c[i] = static_cast<std::size_t>(std::clamp<long long>(idx, 0, static_cast<long long>(d[i]) - 1));
    }
    return c;
}

void GridWorld::validate() const {
    for (int i = 0; i < 3; ++i) {
        if (!(cell_size[i] > 0.0)) throw std::invalid_argument("grid: cell size must be positive");
        if (!(max_corner[i] > min_corner[i]))
            throw std::invalid_argument("grid: empty bounds");
    }
    if (n_uav < 1) throw std::invalid_argument("grid: n_uav >= 1 required");
    const auto d = dims();
    for (int i = 0; i < 3; ++i)
        if (d[i] > 1024) throw std::invalid_argument("grid: more than 1024 cells on an axis");
}

void RlHyper::validate() const {
    if (!(alpha_q > 0.0 && alpha_q <= 1.0)) throw std::invalid_argument("rl: alpha_q in (0,1] required");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("rl: gamma in [0,1) required");
    if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0 && epsilon_end >= 0.0 &&
          epsilon_end <= 1.0))
        throw std::invalid_argument("rl: epsilon in [0,1] required");
    if (!(epsilon_decay > 0.0 && epsilon_decay <= 1.0))
        throw std::invalid_argument("rl: epsilon_decay in (0,1] required");
}

std::array<int, 3> action_delta(int action) {
    switch (action) {
        case 0: return {1, 0, 0};
        case 1: return {-1, 0, 0};
        case 2: return {0, 1, 0};
        case 3: return {0, -1, 0};
        case 4: return {0, 0, 1};
        case 5: return {0, 0, -1};
        case kActionStay: return {0, 0, 0};
        default: throw std::invalid_argument("action_delta: bad action");
    }
}

QTable::Key QTable::encode(const GridWorld&, const Cell& own, const Cell* centroid) {
    Key k = static_cast<Key>(own[0]) | (static_cast<Key>(own[1]) << 10) |
            (static_cast<Key>(own[2]) << 20);
    if (centroid != nullptr) {
        k |= (static_cast<Key>((*centroid)[0]) << 30) |
             (static_cast<Key>((*centroid)[1]) << 40) |
             (static_cast<Key>((*centroid)[2]) << 50) | (Key(1) << 63);
    }
    return k;
}

std::array<double, kNumActions>& QTable::values(std::size_t uav, Key state) {
    return tables_.at(uav)[state]; // zero-initialized on first touch
}

const std::array<double, kNumActions>* QTable::find(std::size_t uav, Key state) const {
    const auto& t = tables_.at(uav);
    const auto it = t.find(state);
    return it == t.end() ? nullptr : &it->second;
}

std::string QTable::to_json(const GridWorld& grid, const RlHyper& hyper) const {
    nlohmann::json j;
    j["version"] = 1;
    j["grid"] = {{"min", grid.min_corner},       {"max", grid.max_corner},
                 {"cell", grid.cell_size},       {"n_uav", grid.n_uav},
                 {"initial_altitude", grid.initial_altitude}};
    j["hyper"] = {{"alpha_q", hyper.alpha_q}, {"gamma", hyper.gamma},
                  {"episodes", hyper.episodes}, {"steps_per_episode", hyper.steps_per_episode}};
    nlohmann::json tables = nlohmann::json::array();
    for (const auto& t : tables_) {
        // sort keys for stable output
        std::vector<Key> keys;
        keys.reserve(t.size());
        for (const auto& [k, _] : t) keys.push_back(k);
        std::sort(keys.begin(), keys.end());
        nlohmann::json states = nlohmann::json::array();
        for (Key k : keys) {
            states.push_back({{"s", k}, {"q", t.at(k)}});
        }
        tables.push_back(std::move(states));
    }
    j["tables"] = std::move(tables);
    return j.dump();
}

QTable QTable::from_json(const std::string& text, GridWorld* grid_out) {
    const auto j = nlohmann::json::parse(text);
    if (j.at("version").get<int>() != 1)
        throw std::runtime_error("qtable: unsupported schema version");
    if (grid_out != nullptr) {
        const auto& g = j.at("grid");
        g.at("min").get_to(grid_out->min_corner);
        g.at("max").get_to(grid_out->max_corner);
        g.at("cell").get_to(grid_out->cell_size);
        grid_out->n_uav = g.at("n_uav").get<std::size_t>();
        grid_out->initial_altitude = g.at("initial_altitude").get<double>();
    }
    QTable table;
    table.resize(j.at("tables").size());
    for (std::size_t u = 0; u < table.tables_.size(); ++u) {
        for (const auto& e : j.at("tables")[u]) {
            std::array<double, kNumActions> q{};
            e.at("q").get_to(q);
            table.tables_[u][e.at("s").get<Key>()] = q;
        }
    }
    return table;
}

KmeansResult kmeans(const std::vector<Vec2>& users, std::size_t k,
                    std::size_t max_iter, double tol, std::uint64_t seed) {
    if (k < 1) throw std::invalid_argument("kmeans: k >= 1 required");
    if (users.size() < k) throw std::invalid_argument("kmeans: fewer points than clusters");
    Rng rng(seed);

    auto d2 = [](const Vec2& a, const Vec2& b) {
        const double dx = a[0] - b[0], dy = a[1] - b[1];
        return dx * dx + dy * dy;
    };

    // k-means++ seeding
    KmeansResult res;
    res.centroids.push_back(users[rng.below(users.size())]);
    std::vector<double> dist(users.size());
    while (res.centroids.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < users.size(); ++i) {
            double best = std::numeric_limits<double>::max();
            for (const auto& c : res.centroids) best = std::min(best, d2(users[i], c));
            dist[i] = best;
            total += best;
        }
        if (total <= 0.0) {
            res.centroids.push_back(users[rng.below(users.size())]);
            continue;
        }
        double pick = rng.uniform() * total;
        std::size_t chosen = users.size() - 1;
        for (std::size_t i = 0; i < users.size(); ++i) {
            pick -= dist[i];
            if (pick <= 0.0) {
                chosen = i;
                break;
            }
        }
        res.centroids.push_back(users[chosen]);
    }

    res.assignment.assign(users.size(), 0);
    for (res.iterations = 0; res.iterations < max_iter; ++res.iterations) {
        // assignment step
        for (std::size_t i = 0; i < users.size(); ++i) {
            std::size_t best = 0;
            double bd = d2(users[i], res.centroids[0]);
            for (std::size_t c = 1; c < k; ++c) {
                const double dd = d2(users[i], res.centroids[c]);
                if (dd < bd) {
                    bd = dd;
                    best = c;
                }
            }
            res.assignment[i] = best;
        }
        // update step
        std::vector<Vec2> next(k, {0.0, 0.0});
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < users.size(); ++i) {
            next[res.assignment[i]][0] += users[i][0];
            next[res.assignment[i]][1] += users[i][1];
            ++counts[res.assignment[i]];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                // re-seed at the point farthest from its assigned centroid
                std::size_t far = 0;
                double fd = -1.0;
                for (std::size_t i = 0; i < users.size(); ++i) {
                    const double dd = d2(users[i], res.centroids[res.assignment[i]]);
                    if (dd > fd) {
                        fd = dd;
                        far = i;
                    }
                }
                next[c] = users[far];
                counts[c] = 0;
            } else {
                next[c][0] /= static_cast<double>(counts[c]);
                next[c][1] /= static_cast<double>(counts[c]);
            }
        }
        double shift = 0.0;
        for (std::size_t c = 0; c < k; ++c) shift = std::max(shift, d2(res.centroids[c], next[c]));
        res.centroids = std::move(next);
        if (std::sqrt(shift) < tol) {
            ++res.iterations;
            break;
        }
    }

    // final assignment, counts, distortion
    res.counts.assign(k, 0);
    res.distortion = 0.0;
    for (std::size_t i = 0; i < users.size(); ++i) {
        std::size_t best = 0;
        double bd = d2(users[i], res.centroids[0]);
        for (std::size_t c = 1; c < k; ++c) {
            const double dd = d2(users[i], res.centroids[c]);
            if (dd < bd) {
                bd = dd;
                best = c;
            }
        }
        res.assignment[i] = best;
        ++res.counts[best];
        res.distortion += bd;
    }
    return res;
}

double reward(const std::vector<Cell>& uav_cells, const std::vector<Vec2>& users,
              const std::vector<std::size_t>& assignment, const GridWorld& grid,
              const ChannelParams& channel, double total_power,
              RewardObjective objective) {
    if (assignment.size() != users.size())
        throw std::invalid_argument("reward: assignment size mismatch");
    const std::size_t n_clusters = uav_cells.size();
    std::vector<std::vector<std::size_t>> members(n_clusters);
    for (std::size_t i = 0; i < users.size(); ++i)
        members.at(assignment[i]).push_back(i);
    std::size_t nonempty = 0;
    for (const auto& m : members) nonempty += !m.empty();
    if (nonempty == 0) return 0.0;
    const double fraction = 1.0 / static_cast<double>(nonempty);

    std::vector<double> user_rates(users.size(), 0.0);
    for (std::size_t c = 0; c < n_clusters; ++c) {
        if (members[c].empty()) continue;
        const Vec3 uav = grid.cell_center(uav_cells[c]);
        std::vector<double> gains(members[c].size());
        for (std::size_t i = 0; i < members[c].size(); ++i)
            gains[i] = mean_effective_gain(uav, users[members[c][i]], channel);
        const auto coeffs = max_min_power_allocation(gains, total_power, channel.noise_power);
        NomaGroup grp;
        grp.user_ids = decoding_order(gains);
        grp.total_power = total_power;
        grp.coeffs.resize(gains.size());
        for (std::size_t t = 0; t < gains.size(); ++t) grp.coeffs[t] = coeffs[grp.user_ids[t]];
        const auto rep = noma_rates(gains, grp, channel.noise_power);
        for (std::size_t i = 0; i < members[c].size(); ++i)
            user_rates[members[c][i]] = fraction * rep.rates[i];
    }

    if (objective == RewardObjective::sum_rate)
        return std::accumulate(user_rates.begin(), user_rates.end(), 0.0);
    return *std::min_element(user_rates.begin(), user_rates.end());
}

double q_update(QTable& table, std::size_t uav, QTable::Key state, int action,
                double r, QTable::Key next_state, const RlHyper& hyper,
                std::uint64_t visits) {
    double best_next = 0.0;
    if (const auto* nq = table.find(uav, next_state)) {
        best_next = *std::max_element(nq->begin(), nq->end());
    }
    auto& q = table.values(uav, state);
    const double alpha =
        hyper.alpha_visit_decay && visits > 0 ? 1.0 / static_cast<double>(visits) : hyper.alpha_q;
    q[action] = (1.0 - alpha) * q[action] + alpha * (r + hyper.gamma * best_next);
    return q[action];
}

namespace {

void legal_actions(const GridWorld& grid, const Cell& cell, std::array<bool, kNumActions>& ok) {
    const auto d = grid.dims();
    for (int a = 0; a < kNumActions; ++a) {
        const auto delta = action_delta(a);
        ok[a] = true;
        for (int i = 0; i < 3; ++i) {
            const long long nxt = static_cast<long long>(cell[i]) + delta[i];
            if (nxt < 0 || nxt >= static_cast<long long>(d[i])) ok[a] = false;
        }
    }
}

Cell apply_action(const Cell& cell, int action) {
    const auto delta = action_delta(action);
    Cell next = cell;
    for (int i = 0; i < 3; ++i)
        next[i] = static_cast<std::size_t>(static_cast<long long>(cell[i]) + delta[i]);
    return next;
}

} // namespace

int epsilon_greedy(const QTable& table, std::size_t uav, QTable::Key state,
                   const GridWorld& grid, const Cell& cell, double epsilon, Rng& rng) {
    if (!(epsilon >= 0.0 && epsilon <= 1.0))
        throw std::invalid_argument("epsilon_greedy: epsilon in [0,1] required");
    std::array<bool, kNumActions> ok{};
    legal_actions(grid, cell, ok);
    if (epsilon > 0.0 && rng.uniform() < epsilon) {
        int n_legal = 0;
        for (bool b : ok) n_legal += b;
        auto pick = rng.below(static_cast<std::uint64_t>(n_legal));
        for (int a = 0; a < kNumActions; ++a) {
            if (!ok[a]) continue;
            if (pick == 0) return a;
            --pick;
        }
    }
    const auto* q = table.find(uav, state);
    int best = -1;
    double best_v = 0.0;
    for (int a = 0; a < kNumActions; ++a) {
        if (!ok[a]) continue;
        const double v = q != nullptr ? (*q)[a] : 0.0;
        if (best < 0 || v > best_v) {
            best = a;
            best_v = v;
        }
    }
    return best;
}

namespace {

struct Env {
    const GridWorld& grid;
    const ChannelParams& channel;
    double total_power;
    RewardObjective objective;
    bool moving;
    RandomWalkParams walk;

    std::vector<std::size_t> assign_nearest(const std::vector<Cell>& uav_cells,
                                            const std::vector<Vec2>& users) const {
        std::vector<std::size_t> a(users.size(), 0);
        std::vector<Vec3> pos(uav_cells.size());
        for (std::size_t v = 0; v < uav_cells.size(); ++v) pos[v] = grid.cell_center(uav_cells[v]);
        for (std::size_t i = 0; i < users.size(); ++i) {
            double bd = std::numeric_limits<double>::max();
            for (std::size_t v = 0; v < pos.size(); ++v) {
                const double dx = pos[v][0] - users[i][0];
                const double dy = pos[v][1] - users[i][1];
                const double dd = dx * dx + dy * dy;
                if (dd < bd) {
                    bd = dd;
                    a[i] = v;
                }
            }
        }
        return a;
    }

    QTable::Key state_key(std::size_t uav, const std::vector<Cell>& uav_cells,
                          const std::vector<Vec2>& users,
                          const std::vector<std::size_t>& assignment) const {
        if (!moving) return QTable::encode(grid, uav_cells[uav]);
        // centroid cell of the assigned cluster; own cell when empty
        double sx = 0.0, sy = 0.0;
        std::size_t n = 0;
        for (std::size_t i = 0; i < users.size(); ++i) {
            if (assignment[i] != uav) continue;
            sx += users[i][0];
            sy += users[i][1];
            ++n;
        }
        Cell centroid = uav_cells[uav];
        if (n > 0) {
            const Vec3 c{sx / static_cast<double>(n), sy / static_cast<double>(n),
                         grid.min_corner[2]};
            centroid = grid.snap(c);
            centroid[2] = 0;
        }
        return QTable::encode(grid, uav_cells[uav], &centroid);
    }
};

std::vector<Cell> initial_cells(const std::vector<Vec2>& users, const GridWorld& grid,
                                std::uint64_t seed) {
    const auto km = kmeans(users, grid.n_uav, 100, 1e-6, seed);
    std::vector<Cell> cells(grid.n_uav);
    for (std::size_t v = 0; v < grid.n_uav; ++v)
        cells[v] = grid.snap({km.centroids[v][0], km.centroids[v][1], grid.initial_altitude});
    return cells;
}

TrainResult train_impl(const std::vector<Vec2>& users0, const Env& env,
                       const RlHyper& hyper, std::uint64_t seed) {
    env.grid.validate();
    hyper.validate();
    TrainResult out;
    out.table.resize(env.grid.n_uav);
    const auto start_cells = initial_cells(users0, env.grid, seed);
    std::vector<std::unordered_map<QTable::Key, std::array<std::uint64_t, kNumActions>>>
        visit_counts(env.grid.n_uav);

    double eps = hyper.epsilon_start;
    for (std::size_t ep = 0; ep < hyper.episodes; ++ep) {
        Rng rng = substream(seed, ep + 1);
        auto cells = start_cells;
        auto users = users0;
        auto assignment = env.assign_nearest(cells, users);
        for (std::size_t step = 0; step < hyper.steps_per_episode; ++step) {
            if (env.moving)
                for (auto& u : users) u = random_walk_step(u, env.walk, env.grid, rng);
            assignment = env.assign_nearest(cells, users);

            std::vector<QTable::Key> keys(env.grid.n_uav);
            std::vector<int> actions(env.grid.n_uav);
            for (std::size_t v = 0; v < env.grid.n_uav; ++v) {
                keys[v] = env.state_key(v, cells, users, assignment);
                actions[v] = epsilon_greedy(out.table, v, keys[v], env.grid, cells[v], eps, rng);
            }
            for (std::size_t v = 0; v < env.grid.n_uav; ++v)
                cells[v] = apply_action(cells[v], actions[v]);

            const auto next_assignment = env.assign_nearest(cells, users);
            const double r = reward(cells, users, next_assignment, env.grid, env.channel,
                                    env.total_power, env.objective);
            for (std::size_t v = 0; v < env.grid.n_uav; ++v) {
                const auto next_key = env.state_key(v, cells, users, next_assignment);
                std::uint64_t vc = 0;
                if (hyper.alpha_visit_decay)
                    vc = ++visit_counts[v][keys[v]][actions[v]];
                q_update(out.table, v, keys[v], actions[v], r, next_key, hyper, vc);
            }
        }
        eps = std::max(hyper.epsilon_end, eps * hyper.epsilon_decay);
    }

    // greedy rollout from the initial cells
    {
        Rng rng = substream(seed, 0); // evaluation stream, disjoint from training
        auto cells = start_cells;
        auto users = users0;
        double total_r = 0.0;
        for (std::size_t step = 0; step < hyper.steps_per_episode; ++step) {
            if (env.moving)
                for (auto& u : users) u = random_walk_step(u, env.walk, env.grid, rng);
            const auto assignment = env.assign_nearest(cells, users);
            for (std::size_t v = 0; v < env.grid.n_uav; ++v) {
                const auto key = env.state_key(v, cells, users, assignment);
                const int a = epsilon_greedy(out.table, v, key, env.grid, cells[v], 0.0, rng);
                cells[v] = apply_action(cells[v], a);
                TraceStep ts;
                ts.t = step;
                ts.uav = v;
                ts.position = env.grid.cell_center(cells[v]);
                ts.action = a;
                out.greedy_trace.push_back(ts);
            }
            const auto na = env.assign_nearest(cells, users);
            const double r = reward(cells, users, na, env.grid, env.channel, env.total_power,
                                    env.objective);
            for (std::size_t v = 0; v < env.grid.n_uav; ++v)
                out.greedy_trace[out.greedy_trace.size() - env.grid.n_uav + v].reward = r;
            total_r += r;
        }
        out.final_cells = cells;
        out.greedy_mean_reward =
            total_r / static_cast<double>(std::max<std::size_t>(1, hyper.steps_per_episode));
    }
    return out;
}

} // namespace

TrainResult train_placement(const std::vector<Vec2>& users, const GridWorld& grid,
                            const RlHyper& hyper, const ChannelParams& channel,
                            double total_power, RewardObjective objective,
                            std::uint64_t seed) {
    Env env{grid, channel, total_power, objective, /*moving=*/false, {}};
    return train_impl(users, env, hyper, seed);
}

TrainResult train_movement(const std::vector<Vec2>& users, const RandomWalkParams& walk,
                           const GridWorld& grid, const RlHyper& hyper,
                           const ChannelParams& channel, double total_power,
                           RewardObjective objective, std::uint64_t seed) {
    if (walk.step_length < 0.0)
        throw std::invalid_argument("random walk: step length must be nonnegative");
    // degenerate walk: identical problem to static placement, same streams
    if (walk.step_length == 0.0 || walk.move_probability == 0.0)
        return train_placement(users, grid, hyper, channel, total_power, objective, seed);
    Env env{grid, channel, total_power, objective, /*moving=*/true, walk};
    return train_impl(users, env, hyper, seed);
}

Vec2 random_walk_step(const Vec2& user, const RandomWalkParams& params,
                      const GridWorld& grid, Rng& rng) {
    if (params.step_length < 0.0)
        throw std::invalid_argument("random walk: step length must be nonnegative");
    // keep the draw count fixed so degenerate walks stay stream-compatible
    const double u_move = rng.uniform();
    const double theta = kTwoPi * rng.uniform();
    if (params.step_length == 0.0 || u_move >= params.move_probability) return user;
    Vec2 p{user[0] + params.step_length * std::cos(theta),
           user[1] + params.step_length * std::sin(theta)};
    for (int i = 0; i < 2; ++i) {
        const double lo = grid.min_corner[i], hi = grid.max_corner[i];
        // reflect; a single fold suffices for steps shorter than the span
        for (int guard = 0; guard < 64 && (p[i] < lo || p[i] > hi); ++guard) {
            if (p[i] < lo) p[i] = 2.0 * lo - p[i];
            if (p[i] > hi) p[i] = 2.0 * hi - p[i];
        }
        p[i] = std::clamp(p[i], lo, hi);
    }
    return p;
}

EvalResult evaluate_policy(const QTable& table, const std::vector<Vec2>& users0,
                           const RandomWalkParams& walk, bool moving,
                           const GridWorld& grid, const ChannelParams& channel,
                           double total_power, RewardObjective objective,
                           std::size_t horizon, std::uint64_t seed) {
    grid.validate();
    Env env{grid, channel, total_power, objective, moving, walk};
    EvalResult out;
    Rng rng(seed);
    auto cells = initial_cells(users0, grid, seed);
    auto users = users0;
    double total_r = 0.0;
    for (std::size_t step = 0; step < horizon; ++step) {
        if (moving)
            for (auto& u : users) u = random_walk_step(u, walk, grid, rng);
        const auto assignment = env.assign_nearest(cells, users);
        for (std::size_t v = 0; v < grid.n_uav; ++v) {
            const auto key = env.state_key(v, cells, users, assignment);
            const int a = epsilon_greedy(table, v, key, grid, cells[v], 0.0, rng);
            cells[v] = apply_action(cells[v], a);
            TraceStep ts;
            ts.t = step;
            ts.uav = v;
            ts.position = grid.cell_center(cells[v]);
            ts.action = a;
            out.trace.push_back(ts);
        }
        const auto na = env.assign_nearest(cells, users);
        const double r =
            reward(cells, users, na, grid, channel, total_power, objective);
        for (std::size_t v = 0; v < grid.n_uav; ++v)
            out.trace[out.trace.size() - grid.n_uav + v].reward = r;
        total_r += r;
    }
    out.mean_reward = horizon > 0 ? total_r / static_cast<double>(horizon) : 0.0;
    return out;
}

} // namespace uavnoma
