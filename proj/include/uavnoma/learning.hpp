#pragma once

#include <array>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "uavnoma/channel.hpp"
#include "uavnoma/rng.hpp"

namespace uavnoma {

/// Discretized 3D box the UAVs move in. UAV positions snap to cell centers.
struct GridWorld {
    Vec3 min_corner{0.0, 0.0, 50.0};
    Vec3 max_corner{1000.0, 1000.0, 250.0};
    Vec3 cell_size{100.0, 100.0, 50.0};
    std::size_t n_uav = 1;
    double initial_altitude = 100.0; // placement starting height (snapped)

    std::array<std::size_t, 3> dims() const;
    Vec3 cell_center(const std::array<std::size_t, 3>& cell) const;
    std::array<std::size_t, 3> snap(const Vec3& pos) const;
    void validate() const;
};

/// 7-action set: +/-x, +/-y, +/-z, stay.
inline constexpr int kNumActions = 7;
inline constexpr int kActionStay = 6;
std::array<int, 3> action_delta(int action);

struct RlHyper {
    double alpha_q = 0.1;     // learning rate; ignored when alpha_visit_decay
    double gamma = 0.9;       // discount
    double epsilon_start = 1.0;
    double epsilon_end = 0.05;
    double epsilon_decay = 0.99; // multiplicative, per episode
    std::size_t episodes = 300;
    std::size_t steps_per_episode = 40;
    bool alpha_visit_decay = false; // alpha = 1/visits(s,a)

    void validate() const;
};

struct RandomWalkParams {
    double step_length = 0.0;     // meters per time slot
    double move_probability = 1.0;
    // boundary policy: reflect (the only one implemented)
};

enum class RewardObjective { min_rate, sum_rate };

/// Tabular action values keyed by (uav, state). A state is the UAV's own
/// cell, optionally augmented with the cell of its assigned cluster's user
/// centroid (movement training).
class QTable {
public:
    using Key = std::uint64_t;

    static Key encode(const GridWorld& grid, const std::array<std::size_t, 3>& own,
                      const std::array<std::size_t, 3>* centroid = nullptr);

    std::array<double, kNumActions>& values(std::size_t uav, Key state);
    const std::array<double, kNumActions>* find(std::size_t uav, Key state) const;
    std::size_t uav_count() const { return tables_.size(); }
    void resize(std::size_t n_uav) { tables_.resize(n_uav); }
    const std::unordered_map<Key, std::array<double, kNumActions>>& table(std::size_t uav) const {
        return tables_.at(uav);
    }

    std::string to_json(const GridWorld& grid, const RlHyper& hyper) const;
    static QTable from_json(const std::string& text, GridWorld* grid_out = nullptr);

private:
    std::vector<std::unordered_map<Key, std::array<double, kNumActions>>> tables_;
};

struct KmeansResult {
    std::vector<Vec2> centroids;
    std::vector<std::size_t> assignment; // user -> cluster
    std::vector<std::size_t> counts;     // users per cluster
    double distortion = 0.0;             // sum of squared distances
    std::size_t iterations = 0;
};

/// Lloyd's iterations with k-means++ seeding. Empty clusters are re-seeded
/// at the point farthest from its centroid.
KmeansResult kmeans(const std::vector<Vec2>& users, std::size_t k,
                    std::size_t max_iter, double tol, std::uint64_t seed);

/// Global reward: per-cluster NOMA with max-min coefficients, TDMA with equal
/// fractions across nonempty clusters, mean-gain channel (no fading draw).
double reward(const std::vector<std::array<std::size_t, 3>>& uav_cells,
              const std::vector<Vec2>& users,
              const std::vector<std::size_t>& assignment, const GridWorld& grid,
              const ChannelParams& channel, double total_power,
              RewardObjective objective);

/// One-step Q-learning update; returns the new Q(s, a).
double q_update(QTable& table, std::size_t uav, QTable::Key state, int action,
                double r, QTable::Key next_state, const RlHyper& hyper,
                std::uint64_t visits = 0);

/// Epsilon-greedy over legal (in-bounds) actions; argmax ties break to the
/// lowest action index.
int epsilon_greedy(const QTable& table, std::size_t uav, QTable::Key state,
                   const GridWorld& grid, const std::array<std::size_t, 3>& cell,
                   double epsilon, Rng& rng);

struct TraceStep {
    std::size_t t = 0;
    std::size_t uav = 0;
    Vec3 position{};
    int action = kActionStay;
    double reward = 0.0;
};

struct TrainResult {
    QTable table;
    std::vector<std::array<std::size_t, 3>> final_cells; // greedy terminal cells
    std::vector<TraceStep> greedy_trace;
    double greedy_mean_reward = 0.0;
};

/// Step 2: static users, state = own cell, UAVs start at the K-means
/// centroid cells at the grid's initial altitude.
TrainResult train_placement(const std::vector<Vec2>& users, const GridWorld& grid,
                            const RlHyper& hyper, const ChannelParams& channel,
                            double total_power, RewardObjective objective,
                            std::uint64_t seed);

/// Step 3: users random-walk each slot; state = own cell + assigned-cluster
/// centroid cell; evaluation runs the greedy policy on a held-out trace.
TrainResult train_movement(const std::vector<Vec2>& users,
                           const RandomWalkParams& walk, const GridWorld& grid,
                           const RlHyper& hyper, const ChannelParams& channel,
                           double total_power, RewardObjective objective,
                           std::uint64_t seed);

/// Planar random-walk displacement with reflecting bounds.
Vec2 random_walk_step(const Vec2& user, const RandomWalkParams& params,
                      const GridWorld& grid, Rng& rng);

struct EvalResult {
    std::vector<TraceStep> trace;
    double mean_reward = 0.0;
};

/// Greedy (epsilon = 0) rollout of a trained table. `moving` selects the
/// movement state encoding and per-slot user walks.
EvalResult evaluate_policy(const QTable& table, const std::vector<Vec2>& users,
                           const RandomWalkParams& walk, bool moving,
                           const GridWorld& grid, const ChannelParams& channel,
                           double total_power, RewardObjective objective,
                           std::size_t horizon, std::uint64_t seed);

} // namespace uavnoma
