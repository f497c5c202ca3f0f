#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "uavnoma/channel.hpp"
#include "uavnoma/noma.hpp"
#include "uavnoma/rng.hpp"

namespace uavnoma {

/// Single-UAV disc model: M cell-center users uniform on the disc of radius
/// r_split, M cell-edge users uniform on the annulus [r_split, R_d]; UAV at
/// altitude h over the disc center.
struct DiscScenario {
    double R_d = 500.0;
    double r_split = 250.0;
    double h = 100.0;
    std::size_t M = 2;
    double total_power = 1.0;
    ChannelParams channel{.m = 2.0}; // Nakagami-2 default for the disc study

    void validate() const;
};

/// Multi-UAV model: two independent HPPPs on a finite window (centered at the
/// origin) standing in for the infinite plane; UAVs at altitude h.
struct PppScenario {
    double window_w = 2000.0;
    double window_h = 2000.0;
    double lambda_u = 4e-5; // users per m^2
    double lambda_v = 4e-6; // UAVs per m^2
    double h = 100.0;
    std::size_t K = 2; // users per UAV group
    double total_power = 1.0;
    ChannelParams channel;

    void validate() const;
};

/// Test/oracle scenario: fixed user positions, one UAV, each user on its own
/// orthogonal block at full power.
struct FixedScenario {
    Vec3 uav{0.0, 0.0, 100.0};
    std::vector<Vec2> users;
    double total_power = 1.0;
    ChannelParams channel;
};

enum class PairingStrategy { random, near_near, near_far };
enum class AssociationPolicy { k_nearest, mean_power, max_sinr };

struct DiscMcConfig {
    PairingStrategy strategy = PairingStrategy::near_near;
    bool maxmin_pa = true;      // else fixed coefficients below
    double fixed_a_edge = 0.8;
    std::vector<double> thresholds{1.0, 0.5}; // center, edge (bits/s/Hz)
    SicModel sic = SicModel::idealized;
    bool all_strategies = false; // also emit paired per-strategy metrics
};

struct PppMcConfig {
    AssociationPolicy policy = AssociationPolicy::k_nearest;
    double threshold = 0.5;
    SicModel sic = SicModel::idealized;
};

struct McResult {
    struct Metric {
        std::string user_class;
        std::string name;
        double estimate = 0.0;
        double ci_halfwidth = 0.0; // 95%, normal approximation
    };
    std::vector<Metric> metrics;
    std::uint64_t trials = 0;
    std::uint64_t csi_probes = 0; // instantaneous-CSI acquisitions (max_sinr cost)

    const Metric* find(const std::string& user_class, const std::string& name) const;
};

std::pair<std::vector<Vec2>, std::vector<Vec2>>
sample_disc_users(const DiscScenario& scenario, Rng& rng);

std::vector<Vec2> sample_hppp(double window_w, double window_h, double density, Rng& rng);

/// Matches each cell-center user with one cell-edge user. Indices returned as
/// (center index, edge index) pairs.
std::vector<std::pair<std::size_t, std::size_t>>
pair_users(PairingStrategy strategy, const std::vector<Vec2>& centers,
           const std::vector<Vec2>& edges, const Vec3& uav_pos, Rng& rng);

/// Per-UAV user lists honoring capacity K. `csi_probes`, when given, counts
/// instantaneous-CSI evaluations (nonzero only for max_sinr).
std::vector<std::vector<std::size_t>>
associate_users(AssociationPolicy policy, const std::vector<Vec3>& uavs,
                const std::vector<Vec2>& users, std::size_t K,
                double total_power, const ChannelParams& channel, Rng& rng,
                std::uint64_t* csi_probes = nullptr);

// Monte Carlo engines. Deterministic for a given seed regardless of
// `workers`: every trial draws from its own substream and partial sums are
// reduced in fixed block order.
McResult mc_disc(const DiscScenario& scenario, const DiscMcConfig& config,
                 std::uint64_t trials, std::uint64_t seed, unsigned workers = 1);
McResult mc_ppp(const PppScenario& scenario, const PppMcConfig& config,
                std::uint64_t trials, std::uint64_t seed, unsigned workers = 1);
McResult mc_fixed(const FixedScenario& scenario, const std::vector<double>& thresholds,
                  std::uint64_t trials, std::uint64_t seed, unsigned workers = 1);

} // namespace uavnoma
