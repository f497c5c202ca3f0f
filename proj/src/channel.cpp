#include "uavnoma/channel.hpp"

#include <cmath>
#include <stdexcept>

#include "uavnoma/kernels.hpp"

namespace uavnoma {

namespace {
constexpr double kMinDistance = 1.0; // UAV never occupies a user position
constexpr double kRadToDeg = 57.295779513082320877;
} // namespace

void ChannelParams::validate() const {
    if (!(beta0 > 0.0)) throw std::domain_error("channel: beta0 > 0 required");
    if (!(alpha_los >= 2.0)) throw std::domain_error("channel: alpha_los >= 2 required");
    if (!(alpha_nlos >= alpha_los)) throw std::domain_error("channel: alpha_nlos >= alpha_los required");
    if (!(kappa_nlos > 0.0 && kappa_nlos <= 1.0)) throw std::domain_error("channel: 0 < kappa_nlos <= 1 required");
    if (!(los_a > 0.0 && los_b > 0.0)) throw std::domain_error("channel: los_a, los_b > 0 required");
    if (!(m >= 0.5)) throw std::domain_error("channel: Nakagami m >= 0.5 required");
    if (!(omega > 0.0)) throw std::domain_error("channel: omega > 0 required");
    if (!(noise_power > 0.0)) throw std::domain_error("channel: noise_power > 0 required");
}

double los_probability(double elevation_deg, const ChannelParams& params) {
    if (!(elevation_deg >= 0.0 && elevation_deg <= 90.0))
        throw std::domain_error("los_probability: elevation must be in [0, 90] degrees");
    return 1.0 / (1.0 + params.los_a *
                            std::exp(-params.los_b * (elevation_deg - params.los_a)));
}

double path_gain(double distance, LinkType link_type, const ChannelParams& params) {
    if (!(distance > 0.0)) throw std::domain_error("path_gain: distance > 0 required");
    if (link_type == LinkType::LOS)
        return params.beta0 * std::pow(distance, -params.alpha_los);
    return params.kappa_nlos * params.beta0 * std::pow(distance, -params.alpha_nlos);
}

double sample_fading(const ChannelParams& params, Rng& rng) {
    if (!(params.m >= 0.5) || !(params.omega > 0.0))
        throw std::domain_error("sample_fading: m >= 0.5 and omega > 0 required");
    return rng.gamma(params.m, params.omega / params.m);
}

void link_geometry(const Vec3& uav_pos, const Vec2& user_pos,
                   double& distance, double& elevation_deg) {
    const double dx = uav_pos[0] - user_pos[0];
    const double dy = uav_pos[1] - user_pos[1];
    const double h = uav_pos[2];
    const double horiz = std::sqrt(dx * dx + dy * dy);
    distance = std::sqrt(horiz * horiz + h * h);
    if (distance < kMinDistance) distance = kMinDistance;
    elevation_deg = std::atan2(h, horiz) * kRadToDeg;
}

LinkSample effective_gain(const Vec3& uav_pos, const Vec2& user_pos,
                          const ChannelParams& params, Rng& rng) {
    if (!(uav_pos[2] > 0.0)) throw std::domain_error("effective_gain: UAV altitude must be positive");
    LinkSample s;
    link_geometry(uav_pos, user_pos, s.distance, s.elevation_deg);
    if (params.mode == LosMode::probabilistic_los) {
        const double p = los_probability(s.elevation_deg, params);
        s.link_type = (rng.uniform() < p) ? LinkType::LOS : LinkType::NLOS;
    } else {
        s.link_type = LinkType::LOS;
    }
    s.power_gain = path_gain(s.distance, s.link_type, params);
    if (params.fading_enabled) s.power_gain *= sample_fading(params, rng);
    return s;
}

double mean_effective_gain(const Vec3& uav_pos, const Vec2& user_pos,
                           const ChannelParams& params) {
    double d, elev;
    link_geometry(uav_pos, user_pos, d, elev);
    const double g_los = path_gain(d, LinkType::LOS, params);
    if (params.mode == LosMode::los_only) return params.omega * g_los;
    const double p = los_probability(elev, params);
    const double g_nlos = path_gain(d, LinkType::NLOS, params);
    return params.omega * (p * g_los + (1.0 - p) * g_nlos);
}

void batch_los_gain(const Vec3& uav_pos, const std::vector<Vec2>& users,
                    const ChannelParams& params, std::vector<double>& out) {
    const std::size_t n = users.size();
    static thread_local std::vector<double> ux, uy, d2;
    ux.resize(n);
    uy.resize(n);
    d2.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        ux[i] = users[i][0];
        uy[i] = users[i][1];
    }
    out.resize(n);
    const auto& k = kernels::active();
    const double h2 = uav_pos[2] * uav_pos[2];
    k.dist2_to_point(ux.data(), uy.data(), n, uav_pos[0], uav_pos[1], h2, d2.data());
    for (std::size_t i = 0; i < n; ++i)
        if (d2[i] < kMinDistance) d2[i] = kMinDistance;
    if (params.alpha_los == 2.0)
        k.recip_gain(d2.data(), n, params.beta0, out.data());
    else
        k.pow_gain(d2.data(), n, params.beta0, params.alpha_los, out.data());
}

} // namespace uavnoma
