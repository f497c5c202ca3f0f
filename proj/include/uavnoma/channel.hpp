#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "uavnoma/rng.hpp"

namespace uavnoma {

using Vec2 = std::array<double, 2>;
using Vec3 = std::array<double, 3>;

enum class LinkType { LOS, NLOS };
enum class LosMode { los_only, probabilistic_los };

/// Air-to-ground channel parameters. Gains and powers are linear (not dB).
struct ChannelParams {
    double beta0 = 1e-3;       // reference path gain at 1 m
    double alpha_los = 2.0;
    double alpha_nlos = 3.5;
    double kappa_nlos = 0.01;  // extra NLOS attenuation, <= 1
    double los_a = 9.61;       // sigmoid constants, urban defaults
    double los_b = 0.16;
    double m = 1.0;            // Nakagami shape
    double omega = 1.0;        // mean fading power
    double noise_power = 1e-10; // watts
    LosMode mode = LosMode::los_only;
    bool fading_enabled = true;

    void validate() const;
};

struct LinkSample {
    double distance = 0.0;
    double elevation_deg = 0.0;
    LinkType link_type = LinkType::LOS;
    double power_gain = 0.0;
};

/// P(LOS) = 1 / (1 + a*exp(-b*(theta - a))), strictly increasing in theta.
double los_probability(double elevation_deg, const ChannelParams& params);

double path_gain(double distance, LinkType link_type, const ChannelParams& params);

/// Squared Nakagami-m envelope: Gamma(shape=m, mean=omega).
double sample_fading(const ChannelParams& params, Rng& rng);

/// Composite gain UAV -> ground user: path gain (LOS drawn per mode) times
/// fading. Distance is clamped to 1 m.
LinkSample effective_gain(const Vec3& uav_pos, const Vec2& user_pos,
                          const ChannelParams& params, Rng& rng);

/// Fading- and LOS-averaged gain: p_los*g_los + (1-p_los)*g_nlos, with the
/// fading mean omega folded in. Used by the learning reward.
double mean_effective_gain(const Vec3& uav_pos, const Vec2& user_pos,
                           const ChannelParams& params);

/// Geometry helper shared by the samplers: clamped 3D distance and
/// elevation angle in degrees.
void link_geometry(const Vec3& uav_pos, const Vec2& user_pos,
                   double& distance, double& elevation_deg);

/// Batch LOS path gains for one UAV against many users (kernel-backed).
void batch_los_gain(const Vec3& uav_pos, const std::vector<Vec2>& users,
                    const ChannelParams& params, std::vector<double>& out);

} // namespace uavnoma
