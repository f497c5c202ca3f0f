#include "uavnoma/spatial.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace uavnoma {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

Vec2 polar(double r, double theta) { return {r * std::cos(theta), r * std::sin(theta)}; }

double horiz_dist(const Vec3& uav, const Vec2& p) {
    const double dx = uav[0] - p[0];
    const double dy = uav[1] - p[1];
    return std::sqrt(dx * dx + dy * dy);
}

// ---- deterministic block-parallel trial runner ----
//
// Each trial draws from substream(seed, trial). Partial (sum, sumsq, count)
// triples are produced per fixed-size block and reduced in block order, so
// the result is bit-identical for any worker count.
struct Accum {
    std::vector<double> sum, sumsq;
    std::vector<std::uint64_t> count;
    explicit Accum(std::size_t n) : sum(n, 0.0), sumsq(n, 0.0), count(n, 0) {}
    void add(std::size_t i, double v) {
        sum[i] += v;
        sumsq[i] += v * v;
        ++count[i];
    }
    void merge(const Accum& o) {
        for (std::size_t i = 0; i < sum.size(); ++i) {
            sum[i] += o.sum[i];
            sumsq[i] += o.sumsq[i];
            count[i] += o.count[i];
        }
    }
};

template <typename TrialFn>
Accum run_trials(std::uint64_t trials, std::uint64_t seed, unsigned workers,
                 std::size_t nstats, std::uint64_t& csi_total, TrialFn&& trial_fn) {
    if (trials < 1) throw std::invalid_argument("monte carlo: trials >= 1 required");
    constexpr std::uint64_t kBlock = 1024;
    const std::uint64_t nblocks = (trials + kBlock - 1) / kBlock;
    std::vector<Accum> partial(nblocks, Accum(nstats));
    std::vector<std::uint64_t> csi(nblocks, 0);

    std::atomic<std::uint64_t> next{0};
    auto work = [&]() {
        for (;;) {
            const std::uint64_t b = next.fetch_add(1);
            if (b >= nblocks) return;
            const std::uint64_t lo = b * kBlock;
            const std::uint64_t hi = std::min(trials, lo + kBlock);
            for (std::uint64_t t = lo; t < hi; ++t) {
                Rng rng = substream(seed, t);
                trial_fn(rng, partial[b], csi[b]);
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    Accum total(nstats);
    csi_total = 0;
    for (std::uint64_t b = 0; b < nblocks; ++b) {
        total.merge(partial[b]);
        csi_total += csi[b];
    }
    return total;
}

McResult::Metric make_metric(const std::string& cls, const std::string& name,
                             const Accum& acc, std::size_t i) {
    McResult::Metric m;
    m.user_class = cls;
    m.name = name;
    const auto n = acc.count[i];
    if (n > 0) {
        const double mean = acc.sum[i] / static_cast<double>(n);
        m.estimate = mean;
        if (n > 1) {
            const double var =
                std::max(0.0, acc.sumsq[i] / static_cast<double>(n) - mean * mean);
            m.ci_halfwidth = 1.96 * std::sqrt(var / static_cast<double>(n));
        }
    }
    return m;
}

} // namespace

void DiscScenario::validate() const {
    if (!(r_split > 0.0 && r_split < R_d))
        throw std::invalid_argument("disc: 0 < r_split < R_d required");
    if (!(h > 0.0)) throw std::invalid_argument("disc: h > 0 required");
    if (M < 1) throw std::invalid_argument("disc: M >= 1 required");
    if (!(total_power > 0.0)) throw std::invalid_argument("disc: total_power > 0 required");
    channel.validate();
}

void PppScenario::validate() const {
    if (!(lambda_u > 0.0 && lambda_v > 0.0))
        throw std::invalid_argument("ppp: densities must be positive");
    if (!(h > 0.0)) throw std::invalid_argument("ppp: h > 0 required");
    if (K < 1) throw std::invalid_argument("ppp: K >= 1 required");
    if (!(window_w > 0.0 && window_h > 0.0))
        throw std::invalid_argument("ppp: window must be nonempty");
    if (window_w * window_h * std::min(lambda_u, lambda_v) < 1.0)
        throw std::invalid_argument("ppp: window too small for the given densities");
    if (!(total_power > 0.0)) throw std::invalid_argument("ppp: total_power > 0 required");
    channel.validate();
}

const McResult::Metric* McResult::find(const std::string& user_class,
                                       const std::string& name) const {
    for (const auto& m : metrics)
        if (m.user_class == user_class && m.name == name) return &m;
    return nullptr;
}

std::pair<std::vector<Vec2>, std::vector<Vec2>>
sample_disc_users(const DiscScenario& scenario, Rng& rng) {
    scenario.validate();
    std::vector<Vec2> centers, edges;
    centers.reserve(scenario.M);
    edges.reserve(scenario.M);
    const double r1sq = scenario.r_split * scenario.r_split;
    const double r2sq = scenario.R_d * scenario.R_d;
    for (std::size_t i = 0; i < scenario.M; ++i)
        centers.push_back(polar(std::sqrt(r1sq * rng.uniform()), kTwoPi * rng.uniform()));
    for (std::size_t i = 0; i < scenario.M; ++i)
        edges.push_back(
            polar(std::sqrt(r1sq + (r2sq - r1sq) * rng.uniform()), kTwoPi * rng.uniform()));
    return {std::move(centers), std::move(edges)};
}

std::vector<Vec2> sample_hppp(double window_w, double window_h, double density, Rng& rng) {
    if (!(density > 0.0)) throw std::invalid_argument("sample_hppp: density > 0 required");
    const double area = window_w * window_h;
    if (area <= 0.0) return {};
    const std::uint64_t n = rng.poisson(density * area);
    std::vector<Vec2> pts(n);
    for (auto& p : pts)
        p = {rng.uniform(-0.5 * window_w, 0.5 * window_w),
             rng.uniform(-0.5 * window_h, 0.5 * window_h)};
    return pts;
}

std::vector<std::pair<std::size_t, std::size_t>>
pair_users(PairingStrategy strategy, const std::vector<Vec2>& centers,
           const std::vector<Vec2>& edges, const Vec3& uav_pos, Rng& rng) {
    if (centers.size() != edges.size())
        throw std::invalid_argument("pair_users: group size mismatch");
    const std::size_t m = centers.size();
    std::vector<std::pair<std::size_t, std::size_t>> pairs(m);

    if (strategy == PairingStrategy::random) {
        std::vector<std::size_t> perm(m);
        std::iota(perm.begin(), perm.end(), 0);
        for (std::size_t i = m; i > 1; --i)
            std::swap(perm[i - 1], perm[rng.below(i)]);
        for (std::size_t i = 0; i < m; ++i) pairs[i] = {i, perm[i]};
        return pairs;
    }

    auto by_dist = [&](const std::vector<Vec2>& pts) {
        std::vector<std::size_t> idx(pts.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            return horiz_dist(uav_pos, pts[a]) < horiz_dist(uav_pos, pts[b]);
        });
        return idx;
    };
    const auto ci = by_dist(centers);
    auto ei = by_dist(edges);
    if (strategy == PairingStrategy::near_far) std::reverse(ei.begin(), ei.end());
    for (std::size_t i = 0; i < m; ++i) pairs[i] = {ci[i], ei[i]};
    std::sort(pairs.begin(), pairs.end());
    return pairs;
}

std::vector<std::vector<std::size_t>>
associate_users(AssociationPolicy policy, const std::vector<Vec3>& uavs,
                const std::vector<Vec2>& users, std::size_t K,
                double total_power, const ChannelParams& channel, Rng& rng,
                std::uint64_t* csi_probes) {
    if (uavs.empty()) throw std::invalid_argument("associate_users: empty uav set");
    const std::size_t nv = uavs.size();
    const std::size_t nu = users.size();

    // metric[v][u]: larger is better
    std::vector<std::vector<double>> metric(nv, std::vector<double>(nu));
    if (policy == AssociationPolicy::max_sinr) {
        // instantaneous SINR with interference from all other UAVs at full power
        std::vector<std::vector<double>> rx(nv, std::vector<double>(nu));
        for (std::size_t v = 0; v < nv; ++v)
            for (std::size_t u = 0; u < nu; ++u)
                rx[v][u] = total_power * effective_gain(uavs[v], users[u], channel, rng).power_gain;
        if (csi_probes) *csi_probes += nv * nu;
        for (std::size_t u = 0; u < nu; ++u) {
            double total_rx = channel.noise_power;
            for (std::size_t v = 0; v < nv; ++v) total_rx += rx[v][u];
            for (std::size_t v = 0; v < nv; ++v)
                metric[v][u] = rx[v][u] / (total_rx - rx[v][u]);
        }
    } else {
        for (std::size_t v = 0; v < nv; ++v)
            for (std::size_t u = 0; u < nu; ++u) {
                if (policy == AssociationPolicy::k_nearest) {
                    double d, e;
                    link_geometry(uavs[v], users[u], d, e);
                    metric[v][u] = -d;
                } else {
                    metric[v][u] = total_power * mean_effective_gain(uavs[v], users[u], channel);
                }
            }
    }

    // users in order of their best achievable metric; each takes its best
    // UAV that still has room
    std::vector<double> best(nu);
    for (std::size_t u = 0; u < nu; ++u) {
        double b = metric[0][u];
        for (std::size_t v = 1; v < nv; ++v) b = std::max(b, metric[v][u]);
        best[u] = b;
    }
    std::vector<std::size_t> uorder(nu);
    std::iota(uorder.begin(), uorder.end(), 0);
    std::stable_sort(uorder.begin(), uorder.end(),
                     [&](std::size_t a, std::size_t b) { return best[a] > best[b]; });

    std::vector<std::vector<std::size_t>> groups(nv);
    for (std::size_t u : uorder) {
        std::size_t pick = nv;
        double pick_m = 0.0;
        for (std::size_t v = 0; v < nv; ++v) {
            if (groups[v].size() >= K) continue;
            if (pick == nv || metric[v][u] > pick_m) {
                pick = v;
                pick_m = metric[v][u];
            }
        }
        if (pick < nv) groups[pick].push_back(u);
    }
    return groups;
}

// ---------------------------------------------------------------------------
// Disc Monte Carlo
//
// All three pairing strategies are evaluated on common geometry and fading
// per trial, which is what makes the paired-difference metrics meaningful.
// ---------------------------------------------------------------------------

namespace {

struct PairEval {
    double rate_center = 0.0, rate_edge = 0.0;
    bool out_center = false, out_edge = false;
    double oma_sum = 0.0;
};

PairEval eval_pair(double g_center, double g_edge, const DiscScenario& sc,
                   const DiscMcConfig& cfg) {
    const std::vector<double> gains{g_center, g_edge};
    NomaGroup grp;
    grp.user_ids = decoding_order(gains);
    grp.total_power = sc.total_power;
    if (cfg.maxmin_pa) {
        const auto coeffs = max_min_power_allocation(gains, sc.total_power, sc.channel.noise_power);
        grp.coeffs = {coeffs[grp.user_ids[0]], coeffs[grp.user_ids[1]]};
    } else {
        grp.coeffs = {cfg.fixed_a_edge, 1.0 - cfg.fixed_a_edge}; // weaker user first
    }
    const auto rep = noma_rates(gains, grp, sc.channel.noise_power, {}, cfg.thresholds, cfg.sic);

    PairEval ev;
    ev.rate_center = rep.rates[0];
    ev.rate_edge = rep.rates[1];
    ev.out_center = rep.outage[0];
    ev.out_edge = rep.outage[1];
    const auto shares = max_min_time_shares(gains, sc.total_power, sc.channel.noise_power);
    const auto oma = oma_rates(gains, sc.total_power, sc.channel.noise_power, shares);
    ev.oma_sum = oma.rates[0] + oma.rates[1];
    return ev;
}

} // namespace

McResult mc_disc(const DiscScenario& scenario, const DiscMcConfig& config,
                 std::uint64_t trials, std::uint64_t seed, unsigned workers) {
    scenario.validate();
    if (config.thresholds.size() != 2)
        throw std::invalid_argument("mc_disc: thresholds must be {center, edge}");

    // per strategy: outage_c, outage_e, rate_c, rate_e, sum, oma_sum, gain
    constexpr std::size_t kPerStrat = 7;
    constexpr std::size_t kStrats = 3;
    // + paired diffs: sumrate(nn) - sumrate(random), gain(nf) - gain(nn)
    const std::size_t nstats = kPerStrat * kStrats + 2;
    const Vec3 uav{0.0, 0.0, scenario.h};

    std::uint64_t csi = 0;
    const Accum acc = run_trials(
        trials, seed, workers, nstats, csi, [&](Rng& rng, Accum& a, std::uint64_t&) {
            const auto [centers, edges] = sample_disc_users(scenario, rng);
            std::vector<double> gc(scenario.M), ge(scenario.M);
            for (std::size_t i = 0; i < scenario.M; ++i)
                gc[i] = effective_gain(uav, centers[i], scenario.channel, rng).power_gain;
            for (std::size_t i = 0; i < scenario.M; ++i)
                ge[i] = effective_gain(uav, edges[i], scenario.channel, rng).power_gain;

            double sums[kStrats] = {0, 0, 0};
            double gains_vs_oma[kStrats] = {0, 0, 0};
            const PairingStrategy strats[kStrats] = {
                PairingStrategy::random, PairingStrategy::near_near, PairingStrategy::near_far};
            for (std::size_t s = 0; s < kStrats; ++s) {
                const auto pairs = pair_users(strats[s], centers, edges, uav, rng);
                double out_c = 0, out_e = 0, rate_c = 0, rate_e = 0, oma_sum = 0;
                for (const auto& [ci, ei] : pairs) {
                    const auto ev = eval_pair(gc[ci], ge[ei], scenario, config);
                    out_c += ev.out_center;
                    out_e += ev.out_edge;
                    rate_c += ev.rate_center;
                    rate_e += ev.rate_edge;
                    oma_sum += ev.oma_sum;
                }
                const double m = static_cast<double>(scenario.M);
                const std::size_t base = s * kPerStrat;
                a.add(base + 0, out_c / m);
                a.add(base + 1, out_e / m);
                a.add(base + 2, rate_c / m);
                a.add(base + 3, rate_e / m);
                sums[s] = rate_c + rate_e;
                gains_vs_oma[s] = sums[s] - oma_sum;
                a.add(base + 4, sums[s]);
                a.add(base + 5, oma_sum);
                a.add(base + 6, gains_vs_oma[s]);
            }
            a.add(kPerStrat * kStrats + 0, sums[1] - sums[0]);
            a.add(kPerStrat * kStrats + 1, gains_vs_oma[2] - gains_vs_oma[1]);
        });

    const char* snames[kStrats] = {"random", "near_near", "near_far"};
    std::size_t headline = config.strategy == PairingStrategy::random      ? 0
                           : config.strategy == PairingStrategy::near_near ? 1
                                                                           : 2;
    McResult res;
    res.trials = trials;
    auto emit = [&](const std::string& cls, const std::string& name, std::size_t i) {
        res.metrics.push_back(make_metric(cls, name, acc, i));
    };
    emit("center", "outage", headline * kPerStrat + 0);
    emit("edge", "outage", headline * kPerStrat + 1);
    emit("center", "ergodic_rate", headline * kPerStrat + 2);
    emit("edge", "ergodic_rate", headline * kPerStrat + 3);
    emit("all", "sum_rate", headline * kPerStrat + 4);
    emit("all", "oma_sum_rate", headline * kPerStrat + 5);
    emit("all", "noma_gain", headline * kPerStrat + 6);
    if (config.all_strategies) {
        for (std::size_t s = 0; s < kStrats; ++s) {
            const std::string tag = std::string("[") + snames[s] + "]";
            emit("center", "outage" + tag, s * kPerStrat + 0);
            emit("edge", "outage" + tag, s * kPerStrat + 1);
            emit("center", "ergodic_rate" + tag, s * kPerStrat + 2);
            emit("edge", "ergodic_rate" + tag, s * kPerStrat + 3);
            emit("all", "sum_rate" + tag, s * kPerStrat + 4);
            emit("all", "oma_sum_rate" + tag, s * kPerStrat + 5);
            emit("all", "noma_gain" + tag, s * kPerStrat + 6);
        }
        emit("all", "sum_rate[near_near-random]", kPerStrat * kStrats + 0);
        emit("all", "noma_gain[near_far-near_near]", kPerStrat * kStrats + 1);
    }
    return res;
}

// ---------------------------------------------------------------------------
// PPP Monte Carlo
// ---------------------------------------------------------------------------

McResult mc_ppp(const PppScenario& scenario, const PppMcConfig& config,
                std::uint64_t trials, std::uint64_t seed, unsigned workers) {
    scenario.validate();
    // stats: outage(all), rate(all), outage/rate by decoding position (first/last)
    constexpr std::size_t kStats = 6;
    const double noise = scenario.channel.noise_power;

    std::uint64_t csi = 0;
    const Accum acc = run_trials(
        trials, seed, workers, kStats, csi, [&](Rng& rng, Accum& a, std::uint64_t& probes) {
            const auto uav_xy =
                sample_hppp(scenario.window_w, scenario.window_h, scenario.lambda_v, rng);
            const auto users =
                sample_hppp(scenario.window_w, scenario.window_h, scenario.lambda_u, rng);
            if (uav_xy.empty() || users.empty()) return;
            std::vector<Vec3> uavs(uav_xy.size());
            for (std::size_t v = 0; v < uav_xy.size(); ++v)
                uavs[v] = {uav_xy[v][0], uav_xy[v][1], scenario.h};

            const auto groups =
                associate_users(config.policy, uavs, users, scenario.K, scenario.total_power,
                                scenario.channel, rng, &probes);

            // per-link fading gains for serving and interfering links
            std::vector<std::vector<double>> gain(uavs.size(),
                                                  std::vector<double>(users.size()));
            for (std::size_t v = 0; v < uavs.size(); ++v)
                for (std::size_t u = 0; u < users.size(); ++u)
                    gain[v][u] =
                        effective_gain(uavs[v], users[u], scenario.channel, rng).power_gain;

            // guard ring: only users in the inner half of the window count
            auto measured = [&](std::size_t u) {
                return std::abs(users[u][0]) <= 0.25 * scenario.window_w &&
                       std::abs(users[u][1]) <= 0.25 * scenario.window_h;
            };

            double out_all = 0, rate_all = 0, n_all = 0;
            double out_first = 0, rate_first = 0, n_first = 0;
            double out_last = 0, rate_last = 0, n_last = 0;
            for (std::size_t v = 0; v < uavs.size(); ++v) {
                const auto& grp_users = groups[v];
                if (grp_users.empty()) continue;
                // fold inter-UAV interference into effective gains so the
                // standard SIC chain applies (interference treated as noise)
                std::vector<double> geff(grp_users.size());
                for (std::size_t i = 0; i < grp_users.size(); ++i) {
                    const std::size_t u = grp_users[i];
                    double iext = 0.0;
                    for (std::size_t w = 0; w < uavs.size(); ++w)
                        if (w != v) iext += scenario.total_power * gain[w][u];
                    geff[i] = gain[v][u] * noise / (noise + iext);
                }
                NomaGroup grp;
                grp.user_ids = decoding_order(geff);
                grp.total_power = scenario.total_power;
                const auto coeffs = max_min_power_allocation(geff, scenario.total_power, noise);
                grp.coeffs.resize(grp.user_ids.size());
                for (std::size_t t = 0; t < grp.user_ids.size(); ++t)
                    grp.coeffs[t] = coeffs[grp.user_ids[t]];
                const std::vector<double> thr(grp_users.size(), config.threshold);
                const auto rep = noma_rates(geff, grp, noise, {}, thr, config.sic);

                for (std::size_t i = 0; i < grp_users.size(); ++i) {
                    if (!measured(grp_users[i])) continue;
                    out_all += rep.outage[i];
                    rate_all += rep.rates[i];
                    n_all += 1;
                    if (i == grp.user_ids.front()) {
                        out_first += rep.outage[i];
                        rate_first += rep.rates[i];
                        n_first += 1;
                    }
                    if (i == grp.user_ids.back() && grp.user_ids.size() > 1) {
                        out_last += rep.outage[i];
                        rate_last += rep.rates[i];
                        n_last += 1;
                    }
                }
            }
            if (n_all > 0) {
                a.add(0, out_all / n_all);
                a.add(1, rate_all / n_all);
            }
            if (n_first > 0) {
                a.add(2, out_first / n_first);
                a.add(3, rate_first / n_first);
            }
            if (n_last > 0) {
                a.add(4, out_last / n_last);
                a.add(5, rate_last / n_last);
            }
        });

    McResult res;
    res.trials = trials;
    res.csi_probes = csi;
    res.metrics.push_back(make_metric("all", "outage", acc, 0));
    res.metrics.push_back(make_metric("all", "ergodic_rate", acc, 1));
    res.metrics.push_back(make_metric("first_decoded", "outage", acc, 2));
    res.metrics.push_back(make_metric("first_decoded", "ergodic_rate", acc, 3));
    res.metrics.push_back(make_metric("last_decoded", "outage", acc, 4));
    res.metrics.push_back(make_metric("last_decoded", "ergodic_rate", acc, 5));
    return res;
}

McResult mc_fixed(const FixedScenario& scenario, const std::vector<double>& thresholds,
                  std::uint64_t trials, std::uint64_t seed, unsigned workers) {
    scenario.channel.validate();
    if (thresholds.size() != scenario.users.size())
        throw std::invalid_argument("mc_fixed: threshold count mismatch");
    const std::size_t n = scenario.users.size();
    const std::size_t nstats = 2 * n;
    const double noise = scenario.channel.noise_power;

    std::uint64_t csi = 0;
    const Accum acc = run_trials(
        trials, seed, workers, nstats, csi, [&](Rng& rng, Accum& a, std::uint64_t&) {
            for (std::size_t u = 0; u < n; ++u) {
                const double g =
                    effective_gain(scenario.uav, scenario.users[u], scenario.channel, rng)
                        .power_gain;
                const double rate =
                    std::log2(1.0 + scenario.total_power * g / noise);
                a.add(2 * u, rate < thresholds[u] ? 1.0 : 0.0);
                a.add(2 * u + 1, rate);
            }
        });

    McResult res;
    res.trials = trials;
    for (std::size_t u = 0; u < n; ++u) {
        const std::string cls = "user" + std::to_string(u);
        res.metrics.push_back(make_metric(cls, "outage", acc, 2 * u));
        res.metrics.push_back(make_metric(cls, "ergodic_rate", acc, 2 * u + 1));
    }
    return res;
}

} // namespace uavnoma
