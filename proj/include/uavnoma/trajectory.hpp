#pragma once

#include <cstddef>
#include <vector>

#include "uavnoma/channel.hpp"

namespace uavnoma {

/// A ground terminal.
struct GroundUser {
    Vec2 position{0.0, 0.0};
    double rate_threshold = 0.0; // bits/s/Hz QoS target (Monte Carlo use)
};

/// Fixed-altitude flight problem: maximize the minimum time-averaged user
/// rate over waypoints and per-slot powers. The channel here is deterministic
/// LOS (no fading draws); alpha_los, beta0 and noise come from `channel`.
struct FlightConfig {
    Vec2 start{0.0, 500.0};
    Vec2 end{0.0, -500.0};
    double altitude = 100.0;
    double T = 25.0;      // seconds
    double delta = 0.5;   // slot length, seconds
    double v_max = 100.0; // m/s
    double P_max = 1.0;   // watts
    std::vector<GroundUser> users;
    ChannelParams channel;

    std::size_t slots() const; // N = round(T/delta)
    void validate() const;
};

struct TrajectorySolution {
    std::vector<Vec2> waypoints;             // q[0..N], q[0]=start, q[N]=end
    std::vector<std::vector<double>> powers; // powers[k][n], watts, slot n at q[n+1]
    double min_avg_rate = 0.0;               // bits/s/Hz, exactly evaluate(*this)
    int iterations = 0;
    bool converged = false;
};

/// Straight-line, uniform-speed path with N+1 waypoints.
std::vector<Vec2> init_trajectory(const FlightConfig& config);

/// Per-user rates for one slot at UAV position q with the given powers
/// (watts, by user). Decoding order is recomputed from the slot gains.
std::vector<double> slot_rates(const Vec2& q, const std::vector<double>& powers,
                               const FlightConfig& config);

/// Max-min average rate powers for a fixed trajectory. Solved in rate space
/// over the per-slot superposition-coding rate regions (Frank-Wolfe with the
/// exact weighted-sum-rate oracle, annealed soft-min objective). Never
/// returns a worse objective than `incoming` evaluates to.
std::vector<std::vector<double>>
power_subproblem(const std::vector<Vec2>& waypoints, const FlightConfig& config,
                 const std::vector<std::vector<double>>* incoming = nullptr);

/// One pass of projected gradient ascent on the soft-min objective over
/// interior waypoints, powers held fixed. Accepted steps never decrease the
/// true (unsmoothed) min average rate.
std::vector<Vec2> trajectory_subproblem(const std::vector<std::vector<double>>& powers,
                                        const std::vector<Vec2>& waypoints,
                                        const FlightConfig& config,
                                        double softmin_tau = 0.05, int max_iters = 60);

/// Alternating power / trajectory optimization.
TrajectorySolution optimize_joint(const FlightConfig& config);

/// TDMA baseline: one user served per slot at full power (greedy max-min
/// schedule), trajectory optimized with the same machinery.
TrajectorySolution oma_baseline(const FlightConfig& config);

/// Recomputes the min average rate of a solution from scratch.
double evaluate(const TrajectorySolution& solution, const FlightConfig& config);

/// Constraint audit: endpoints exact, per-segment speed and per-slot power
/// within `tol`. Throws std::runtime_error naming the violated constraint.
void audit_solution(const TrajectorySolution& solution, const FlightConfig& config,
                    double tol = 1e-9);

} // namespace uavnoma
