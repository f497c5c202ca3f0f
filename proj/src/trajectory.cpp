#include "uavnoma/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "uavnoma/kernels.hpp"
#include "uavnoma/noma.hpp"

namespace uavnoma {

namespace {

constexpr double kInvLn2 = 1.4426950408889634073599246810019;

double norm2(const Vec2& a, const Vec2& b) {
    const double dx = a[0] - b[0];
    const double dy = a[1] - b[1];
    return std::sqrt(dx * dx + dy * dy);
}

// ghat[n][k] = P_max * g_k(q[n+1]) / noise for slot n = 0..N-1
std::vector<std::vector<double>> gain_matrix(const std::vector<Vec2>& waypoints,
                                             const FlightConfig& cfg) {
    const std::size_t n_slots = waypoints.size() - 1;
    const std::size_t k = cfg.users.size();
    std::vector<Vec2> upos(k);
    for (std::size_t i = 0; i < k; ++i) upos[i] = cfg.users[i].position;
    std::vector<std::vector<double>> ghat(n_slots, std::vector<double>(k));
    const double scale = cfg.P_max / cfg.channel.noise_power;
    std::vector<double> g;
    for (std::size_t n = 0; n < n_slots; ++n) {
        const Vec3 uav{waypoints[n + 1][0], waypoints[n + 1][1], cfg.altitude};
        batch_los_gain(uav, upos, cfg.channel, g);
        for (std::size_t i = 0; i < k; ++i) ghat[n][i] = scale * g[i];
    }
    return ghat;
}

// rates[n][k] from normalized coefficients a[n][k]; SIC order per slot
std::vector<double> slot_rates_from_coeffs(const std::vector<double>& ghat_n,
                                           const std::vector<double>& a_n) {
    const std::size_t k = ghat_n.size();
    const auto order = decoding_order(ghat_n);
    std::vector<double> r(k, 0.0);
    double after = 0.0; // coefficients of users decoded later than current
    for (std::size_t t = k; t-- > 0;) {
        // traverse in reverse decoding order so `after` accumulates correctly
        const std::size_t uid = order[t];
        const double g = ghat_n[uid];
        r[uid] = std::log1p(a_n[uid] * g / (g * after + 1.0)) * kInvLn2;
        after += a_n[uid];
    }
    return r;
}

std::vector<double> average_rates(const std::vector<std::vector<double>>& rates) {
    const std::size_t n = rates.size();
    const std::size_t k = rates.empty() ? 0 : rates[0].size();
    std::vector<double> avg(k, 0.0);
    for (const auto& rn : rates)
        for (std::size_t i = 0; i < k; ++i) avg[i] += rn[i];
    for (auto& a : avg) a /= static_cast<double>(n);
    return avg;
}

double min_of(const std::vector<double>& v) {
    return *std::min_element(v.begin(), v.end());
}

std::vector<double> softmin_weights(const std::vector<double>& avg, double tau) {
    const double lo = min_of(avg);
    std::vector<double> w(avg.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < avg.size(); ++i) {
        w[i] = std::exp(-(avg[i] - lo) / tau);
        sum += w[i];
    }
    for (auto& x : w) x /= sum;
    return w;
}

bool speed_feasible(const std::vector<Vec2>& q, double max_len, double tol) {
    for (std::size_t i = 0; i + 1 < q.size(); ++i)
        if (norm2(q[i], q[i + 1]) > max_len + tol) return false;
    return true;
}

// speed-constraint projection: endpoints fixed.  Iterative segment clamping
// first; if that stalls, blend back toward the feasible base path.
void project_speed(std::vector<Vec2>& q, const std::vector<Vec2>& base, double max_len,
                   int max_sweeps, double tol) {
    const std::size_t n = q.size() - 1;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double worst = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double len = norm2(q[i], q[i + 1]);
            if (len <= max_len + 0.5 * tol) continue;
            worst = std::max(worst, len - max_len);
            const double excess = len - max_len;
            const double ux = (q[i + 1][0] - q[i][0]) / len;
            const double uy = (q[i + 1][1] - q[i][1]) / len;
            const bool a_fixed = (i == 0);
            const bool b_fixed = (i + 1 == n);
            const double pull_a = a_fixed ? 0.0 : (b_fixed ? excess : 0.5 * excess);
            const double pull_b = b_fixed ? 0.0 : (a_fixed ? excess : 0.5 * excess);
            q[i][0] += ux * pull_a;
            q[i][1] += uy * pull_a;
            q[i + 1][0] -= ux * pull_b;
            q[i + 1][1] -= uy * pull_b;
        }
        if (worst <= 0.5 * tol) return;
    }
    // clamping stalled: find the largest feasible blend toward `base`
    double lo = 0.0, hi = 1.0; // lambda = 1 keeps q, 0 recovers base
    const std::vector<Vec2> raw = q;
    auto blend = [&](double lam) {
        for (std::size_t i = 0; i < q.size(); ++i)
            for (int c = 0; c < 2; ++c)
                q[i][c] = base[i][c] + lam * (raw[i][c] - base[i][c]);
    };
    for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        blend(mid);
        if (speed_feasible(q, max_len, 0.5 * tol)) lo = mid;
        else hi = mid;
    }
    blend(lo);
    if (!speed_feasible(q, max_len, tol)) q = base;
}

} // namespace

std::size_t FlightConfig::slots() const {
    return static_cast<std::size_t>(std::llround(T / delta));
}

void FlightConfig::validate() const {
    if (!(delta > 0.0)) throw std::invalid_argument("flight: delta > 0 required");
    if (slots() < 2) throw std::invalid_argument("flight: need at least 2 slots");
    if (!(altitude > 0.0)) throw std::invalid_argument("flight: altitude > 0 required");
    if (!(v_max > 0.0) || !(P_max > 0.0))
        throw std::invalid_argument("flight: v_max and P_max must be positive");
    if (users.empty()) throw std::invalid_argument("flight: at least one user required");
    if (norm2(start, end) > v_max * T * (1.0 + 1e-9))
        throw std::invalid_argument("flight: endpoints unreachable at v_max within T");
    channel.validate();
}

std::vector<Vec2> init_trajectory(const FlightConfig& config) {
    config.validate();
    const std::size_t n = config.slots();
    std::vector<Vec2> q(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        const double s = static_cast<double>(i) / static_cast<double>(n);
        q[i] = {config.start[0] + s * (config.end[0] - config.start[0]),
                config.start[1] + s * (config.end[1] - config.start[1])};
    }
    return q;
}

std::vector<double> slot_rates(const Vec2& q, const std::vector<double>& powers,
                               const FlightConfig& config) {
    if (powers.size() != config.users.size())
        throw std::invalid_argument("slot_rates: power count mismatch");
    const std::size_t k = powers.size();
    std::vector<Vec2> wp{q, q};
    const auto ghat = gain_matrix(wp, config); // one slot
    std::vector<double> a(k);
    for (std::size_t i = 0; i < k; ++i) {
        if (powers[i] < 0.0) throw std::invalid_argument("slot_rates: negative power");
        a[i] = powers[i] / config.P_max;
    }
    return slot_rates_from_coeffs(ghat[0], a);
}

namespace {

std::vector<std::vector<double>> coeffs_from_powers(
    const std::vector<std::vector<double>>& powers, double p_max) {
    // powers[k][n] -> a[n][k]
    const std::size_t k = powers.size();
    const std::size_t n = powers.empty() ? 0 : powers[0].size();
    std::vector<std::vector<double>> a(n, std::vector<double>(k));
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t s = 0; s < n; ++s) a[s][i] = powers[i][s] / p_max;
    return a;
}

std::vector<std::vector<double>> rates_for_coeffs(
    const std::vector<std::vector<double>>& ghat,
    const std::vector<std::vector<double>>& a) {
    std::vector<std::vector<double>> r(ghat.size());
    for (std::size_t n = 0; n < ghat.size(); ++n)
        r[n] = slot_rates_from_coeffs(ghat[n], a[n]);
    return r;
}

} // namespace

std::vector<std::vector<double>>
power_subproblem(const std::vector<Vec2>& waypoints, const FlightConfig& config,
                 const std::vector<std::vector<double>>* incoming) {
    config.validate();
    const std::size_t n_slots = waypoints.size() - 1;
    const std::size_t k = config.users.size();
    const auto ghat = gain_matrix(waypoints, config);

    // initial rate point: per-slot max-min allocation
    std::vector<std::vector<double>> r(n_slots, std::vector<double>(k));
    for (std::size_t n = 0; n < n_slots; ++n) {
        const auto coeffs =
            max_min_power_allocation(ghat[n], 1.0, 1.0); // ghat already normalized
        NomaGroup grp;
        grp.user_ids = decoding_order(ghat[n]);
        grp.coeffs.resize(k);
        for (std::size_t t = 0; t < k; ++t) grp.coeffs[t] = coeffs[grp.user_ids[t]];
        const auto rep = noma_rates(ghat[n], grp, 1.0);
        r[n] = rep.rates;
    }
    if (incoming != nullptr && !incoming->empty()) {
        const auto r_in = rates_for_coeffs(ghat, coeffs_from_powers(*incoming, config.P_max));
        if (min_of(average_rates(r_in)) > min_of(average_rates(r))) r = r_in;
    }

    if (k > 1) {
        // Frank-Wolfe over the product of per-slot rate regions with an
        // annealed soft-min of the per-user averages
        double tau = 0.5;
        std::vector<std::vector<double>> vtx(n_slots, std::vector<double>(k));
        const int iters = 600;
        for (int it = 0; it < iters; ++it) {
            if (it % 60 == 59) tau = std::max(tau * 0.5, 1e-4);
            const auto avg = average_rates(r);
            const auto w = softmin_weights(avg, tau);
            for (std::size_t n = 0; n < n_slots; ++n) vtx[n] = weighted_sum_rate(ghat[n], w);

            // line search on the true min average along r + s*(v - r)
            double best_s = 0.0;
            double best_f = min_of(avg);
            std::vector<double> avg_v = average_rates(vtx);
            for (int gi = 1; gi <= 40; ++gi) {
                const double s = gi / 40.0;
                double lo = 1e300;
                for (std::size_t i = 0; i < k; ++i)
                    lo = std::min(lo, (1.0 - s) * avg[i] + s * avg_v[i]);
                if (lo > best_f) {
                    best_f = lo;
                    best_s = s;
                }
            }
            if (best_s == 0.0) best_s = 0.02 / (it + 1); // keep exploring
            for (std::size_t n = 0; n < n_slots; ++n)
                for (std::size_t i = 0; i < k; ++i)
                    r[n][i] = (1.0 - best_s) * r[n][i] + best_s * vtx[n][i];
        }

        // equalize averages down to the common value (reducing a user's rate
        // frees power, so feasibility is preserved)
        const auto avg = average_rates(r);
        const double mu = min_of(avg);
        for (std::size_t i = 0; i < k; ++i) {
            if (avg[i] <= mu || avg[i] <= 0.0) continue;
            const double scale = mu / avg[i];
            for (std::size_t n = 0; n < n_slots; ++n) r[n][i] *= scale;
        }
    }

    // realize rate targets as per-slot coefficients
    std::vector<std::vector<double>> powers(k, std::vector<double>(n_slots, 0.0));
    for (std::size_t n = 0; n < n_slots; ++n) {
        auto c = coeffs_for_rates(ghat[n], r[n]);
        double sum = std::accumulate(c.begin(), c.end(), 0.0);
        for (int guard = 0; sum > 1.0 && guard < 64; ++guard) {
            // floating-point spill over the budget: shave the targets
            for (auto& ri : r[n]) ri *= 0.999999;
            c = coeffs_for_rates(ghat[n], r[n]);
            sum = std::accumulate(c.begin(), c.end(), 0.0);
        }
        for (std::size_t i = 0; i < k; ++i)
            powers[i][n] = std::max(0.0, c[i]) * config.P_max;
    }
    return powers;
}

namespace {

double objective_for(const std::vector<std::vector<double>>& ghat,
                     const std::vector<std::vector<double>>& a) {
    return min_of(average_rates(rates_for_coeffs(ghat, a)));
}

} // namespace

std::vector<Vec2> trajectory_subproblem(const std::vector<std::vector<double>>& powers,
                                        const std::vector<Vec2>& waypoints,
                                        const FlightConfig& config,
                                        double softmin_tau, int max_iters) {
    config.validate();
    const std::size_t n_slots = waypoints.size() - 1;
    const std::size_t k = config.users.size();
    const auto a = coeffs_from_powers(powers, config.P_max);
    const double max_len = config.v_max * config.delta;
    const double h2 = config.altitude * config.altitude;

    std::vector<Vec2> q = waypoints;
    double step = 0.25 * max_len;
    auto truth = [&](const std::vector<Vec2>& qq) {
        return objective_for(gain_matrix(qq, config), a);
    };
    double cur = truth(q);

    for (int it = 0; it < max_iters && step > 1e-12 * max_len; ++it) {
        const auto ghat = gain_matrix(q, config);
        const auto rates = rates_for_coeffs(ghat, a);
        const auto avg = average_rates(rates);
        const auto w = softmin_weights(avg, softmin_tau);

        // gradient of the soft-min w.r.t. interior waypoints q[1..N-1]
        std::vector<Vec2> grad(q.size(), {0.0, 0.0});
        for (std::size_t n = 0; n < n_slots; ++n) {
            const std::size_t wp = n + 1; // slot n evaluated at q[n+1]
            if (wp == q.size() - 1) continue; // final waypoint fixed
            const auto order = decoding_order(ghat[n]);
            double after = 0.0;
            for (std::size_t t = k; t-- > 0;) {
                const std::size_t uid = order[t];
                const double u = ghat[n][uid];
                const double ai = a[n][uid];
                // r = [ln(1+u*(a+A)) - ln(1+u*A)] / ln2 with A = later coeffs
                const double dr_du =
                    ((ai + after) / (1.0 + u * (ai + after)) - after / (1.0 + u * after)) *
                    kInvLn2;
                after += ai;
                const double dx = q[wp][0] - config.users[uid].position[0];
                const double dy = q[wp][1] - config.users[uid].position[1];
                const double d2 = dx * dx + dy * dy + h2;
                const double du_dd2 = -0.5 * config.channel.alpha_los * u / d2;
                const double c = w[uid] / static_cast<double>(n_slots) * dr_du * du_dd2 * 2.0;
                grad[wp][0] += c * dx;
                grad[wp][1] += c * dy;
            }
        }
        double gnorm = 0.0;
        for (const auto& g : grad) gnorm += g[0] * g[0] + g[1] * g[1];
        gnorm = std::sqrt(gnorm);
        if (gnorm < 1e-300) break;

        bool accepted = false;
        for (int bt = 0; bt < 12 && !accepted; ++bt) {
            std::vector<Vec2> cand = q;
            const double s = step / gnorm;
            for (std::size_t i = 1; i + 1 < q.size(); ++i) {
                cand[i][0] += s * grad[i][0];
                cand[i][1] += s * grad[i][1];
            }
            project_speed(cand, q, max_len, 100, 1e-9);
            const double f = truth(cand);
            if (f >= cur - 1e-9 * std::max(1.0, std::abs(cur)) && f >= cur - 1e-9) {
                if (f > cur) {
                    q = std::move(cand);
                    cur = f;
                    step = std::min(step * 1.5, 2.0 * max_len);
                    accepted = true;
                } else {
                    step *= 0.5; // flat step: shrink but keep position
                    accepted = true;
                }
            } else {
                step *= 0.5;
            }
        }
    }
    return q;
}

namespace {

TrajectorySolution finish_solution(std::vector<Vec2> q,
                                   std::vector<std::vector<double>> powers,
                                   int iterations, bool converged,
                                   const FlightConfig& config) {
    TrajectorySolution sol;
    sol.waypoints = std::move(q);
    sol.powers = std::move(powers);
    sol.iterations = iterations;
    sol.converged = converged;
    sol.min_avg_rate = evaluate(sol, config);
    return sol;
}

} // namespace

TrajectorySolution optimize_joint(const FlightConfig& config) {
    config.validate();
    std::vector<Vec2> q = init_trajectory(config);
    auto powers = power_subproblem(q, config);
    double obj = objective_for(gain_matrix(q, config), coeffs_from_powers(powers, config.P_max));

    double tau = 0.05;
    int it = 0;
    bool converged = false;
    for (; it < 200; ++it) {
        if (it > 0 && it % 20 == 0) tau = std::max(tau * 0.5, 1e-4);
        auto q_new = trajectory_subproblem(powers, q, config, tau);
        auto p_new = power_subproblem(q_new, config, &powers);
        const double f =
            objective_for(gain_matrix(q_new, config), coeffs_from_powers(p_new, config.P_max));
        if (f >= obj) {
            q = std::move(q_new);
            powers = std::move(p_new);
            const bool small = (f - obj) < 1e-4 * std::max(1.0, std::abs(obj));
            obj = f;
            if (small && it > 0) {
                converged = true;
                ++it;
                break;
            }
        } else {
            converged = true; // no accepted improvement left
            ++it;
            break;
        }
    }
    return finish_solution(std::move(q), std::move(powers), it, converged, config);
}

namespace {

// greedy schedule: per slot serve the user that maximizes the minimum
// running average, favoring the most-starved user on ties
std::vector<std::size_t> greedy_schedule(const std::vector<std::vector<double>>& ghat) {
    const std::size_t n_slots = ghat.size();
    const std::size_t k = ghat[0].size();
    std::vector<double> total(k, 0.0);
    std::vector<std::size_t> serve(n_slots);
    for (std::size_t n = 0; n < n_slots; ++n) {
        std::size_t best = 0;
        double best_min = -1.0, best_total = 1e300;
        for (std::size_t c = 0; c < k; ++c) {
            const double rate = std::log1p(ghat[n][c]) * kInvLn2;
            double lo = 1e300;
            for (std::size_t i = 0; i < k; ++i)
                lo = std::min(lo, total[i] + (i == c ? rate : 0.0));
            if (lo > best_min + 1e-15 ||
                (std::abs(lo - best_min) <= 1e-15 && total[c] < best_total)) {
                best = c;
                best_min = lo;
                best_total = total[c];
            }
        }
        serve[n] = best;
        total[best] += std::log1p(ghat[n][best]) * kInvLn2;
    }
    return serve;
}

std::vector<std::vector<double>> schedule_to_powers(const std::vector<std::size_t>& serve,
                                                    std::size_t k, double p_max) {
    std::vector<std::vector<double>> powers(k, std::vector<double>(serve.size(), 0.0));
    for (std::size_t n = 0; n < serve.size(); ++n) powers[serve[n]][n] = p_max;
    return powers;
}

} // namespace

TrajectorySolution oma_baseline(const FlightConfig& config) {
    config.validate();
    const std::size_t k = config.users.size();
    std::vector<Vec2> q = init_trajectory(config);
    auto powers = schedule_to_powers(greedy_schedule(gain_matrix(q, config)), k, config.P_max);
    double obj = objective_for(gain_matrix(q, config), coeffs_from_powers(powers, config.P_max));

    double tau = 0.05;
    int it = 0;
    bool converged = false;
    for (; it < 200; ++it) {
        if (it > 0 && it % 20 == 0) tau = std::max(tau * 0.5, 1e-4);
        auto q_new = trajectory_subproblem(powers, q, config, tau);
        const auto ghat_new = gain_matrix(q_new, config);
        auto p_new = schedule_to_powers(greedy_schedule(ghat_new), k, config.P_max);
        double f = objective_for(ghat_new, coeffs_from_powers(p_new, config.P_max));
        {
            // rescheduling is heuristic: keep the old schedule if it is better
            const double f_old_sched =
                objective_for(ghat_new, coeffs_from_powers(powers, config.P_max));
            if (f_old_sched > f) {
                p_new = powers;
                f = f_old_sched;
            }
        }
        if (f >= obj) {
            q = std::move(q_new);
            powers = std::move(p_new);
            const bool small = (f - obj) < 1e-4 * std::max(1.0, std::abs(obj));
            obj = f;
            if (small && it > 0) {
                converged = true;
                ++it;
                break;
            }
        } else {
            converged = true;
            ++it;
            break;
        }
    }
    return finish_solution(std::move(q), std::move(powers), it, converged, config);
}

double evaluate(const TrajectorySolution& solution, const FlightConfig& config) {
    const auto ghat = gain_matrix(solution.waypoints, config);
    return objective_for(ghat, coeffs_from_powers(solution.powers, config.P_max));
}

void audit_solution(const TrajectorySolution& solution, const FlightConfig& config,
                    double tol) {
    const std::size_t n = config.slots();
    if (solution.waypoints.size() != n + 1)
        throw std::runtime_error("audit: waypoint count mismatch");
    if (norm2(solution.waypoints.front(), config.start) > tol)
        throw std::runtime_error("audit: start endpoint violated");
    if (norm2(solution.waypoints.back(), config.end) > tol)
        throw std::runtime_error("audit: end endpoint violated");
    const double max_len = config.v_max * config.delta;
    for (std::size_t i = 0; i < n; ++i)
        if (norm2(solution.waypoints[i], solution.waypoints[i + 1]) > max_len + tol)
            throw std::runtime_error("audit: speed limit violated");
    if (solution.powers.size() != config.users.size())
        throw std::runtime_error("audit: power row count mismatch");
    for (std::size_t s = 0; s < n; ++s) {
        double sum = 0.0;
        for (std::size_t i = 0; i < solution.powers.size(); ++i) {
            if (solution.powers[i].size() != n)
                throw std::runtime_error("audit: power column count mismatch");
            if (solution.powers[i][s] < -tol)
                throw std::runtime_error("audit: negative power");
            sum += solution.powers[i][s];
        }
        if (sum > config.P_max + tol)
            throw std::runtime_error("audit: power budget violated");
    }
}

} // namespace uavnoma
