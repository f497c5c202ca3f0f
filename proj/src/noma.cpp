#include "uavnoma/noma.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace uavnoma {

namespace {
constexpr double kFracTol = 1e-9;

double log2_1p(double x) { return std::log1p(x) * 1.4426950408889634073599246810019; }
} // namespace

void NomaGroup::validate() const {
    if (user_ids.empty()) throw std::invalid_argument("NomaGroup: empty group");
    if (user_ids.size() != coeffs.size())
        throw std::invalid_argument("NomaGroup: coeff/user count mismatch");
    double sum = 0.0;
    for (double a : coeffs) {
        if (a < 0.0) throw std::invalid_argument("NomaGroup: negative coefficient");
        sum += a;
    }
    if (sum > 1.0 + kFracTol) throw std::invalid_argument("NomaGroup: coefficients exceed 1");
    if (total_power < 0.0) throw std::invalid_argument("NomaGroup: negative power");
}

std::vector<std::size_t> decoding_order(const std::vector<double>& gains) {
    if (gains.empty()) throw std::invalid_argument("decoding_order: empty input");
    std::vector<std::size_t> order(gains.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return gains[a] < gains[b]; });
    return order;
}

RateReport noma_rates(const std::vector<double>& gains, const NomaGroup& group,
                      double noise, const std::vector<double>& ext_interference,
                      const std::vector<double>& thresholds, SicModel model) {
    group.validate();
    const std::size_t k = group.user_ids.size();
    if (gains.size() < k) throw std::invalid_argument("noma_rates: gains too short");
    if (!ext_interference.empty() && ext_interference.size() != gains.size())
        throw std::invalid_argument("noma_rates: ext_interference size mismatch");

    RateReport rep;
    rep.order = group.user_ids;
    rep.rates.assign(gains.size(), 0.0);
    rep.sinrs.assign(gains.size(), 0.0);
    rep.prior_stage_rates.assign(gains.size(), {});

    const double p = group.total_power;
    // suffix[t] = sum of coefficients decoded at position >= t
    std::vector<double> suffix(k + 1, 0.0);
    for (std::size_t t = k; t-- > 0;) suffix[t] = suffix[t + 1] + group.coeffs[t];

    for (std::size_t t = 0; t < k; ++t) {
        const std::size_t uid = group.user_ids[t];
        const double g = gains[uid];
        if (!(g > 0.0)) throw std::invalid_argument("noma_rates: gains must be positive");
        const double iext = ext_interference.empty() ? 0.0 : ext_interference[uid];
        // stages 0..t at receiver uid; the last is its own message
        rep.prior_stage_rates[uid].reserve(t);
        for (std::size_t s = 0; s <= t; ++s) {
            const double sig = group.coeffs[s] * p * g;
            const double den = p * g * suffix[s + 1] + noise + iext;
            const double sinr = sig / den;
            if (s == t) {
                rep.sinrs[uid] = sinr;
                rep.rates[uid] = log2_1p(sinr);
            } else {
                rep.prior_stage_rates[uid].push_back(log2_1p(sinr));
            }
        }
    }
    if (!thresholds.empty()) rep.outage = sic_outage(rep, thresholds, model);
    return rep;
}

RateReport oma_rates(const std::vector<double>& gains, double total_power,
                     double noise, const std::vector<double>& slot_fractions,
                     const std::vector<double>& thresholds) {
    if (slot_fractions.size() != gains.size())
        throw std::invalid_argument("oma_rates: fraction count mismatch");
    double sum = 0.0;
    for (double f : slot_fractions) {
        if (f < 0.0) throw std::invalid_argument("oma_rates: negative fraction");
        sum += f;
    }
    if (std::abs(sum - 1.0) > kFracTol)
        throw std::invalid_argument("oma_rates: fractions must sum to 1");

    RateReport rep;
    rep.order.resize(gains.size());
    std::iota(rep.order.begin(), rep.order.end(), 0);
    rep.rates.resize(gains.size());
    rep.sinrs.resize(gains.size());
    rep.prior_stage_rates.assign(gains.size(), {});
    for (std::size_t i = 0; i < gains.size(); ++i) {
        rep.sinrs[i] = total_power * gains[i] / noise;
        rep.rates[i] = slot_fractions[i] * log2_1p(rep.sinrs[i]);
    }
    if (!thresholds.empty()) {
        rep.outage.resize(gains.size());
        for (std::size_t i = 0; i < gains.size(); ++i)
            rep.outage[i] = rep.rates[i] < thresholds[i];
    }
    return rep;
}

std::vector<double> max_min_power_allocation(const std::vector<double>& gains,
                                             double total_power, double noise) {
    if (gains.empty()) throw std::invalid_argument("max_min_power_allocation: empty input");
    const std::size_t k = gains.size();
    std::vector<double> ghat(k);
    for (std::size_t i = 0; i < k; ++i) {
        if (!(gains[i] > 0.0))
            throw std::invalid_argument("max_min_power_allocation: gains must be positive");
        ghat[i] = total_power * gains[i] / noise;
    }
    const auto order = decoding_order(gains);
    if (k == 1) return {1.0};

    // Sequential fill: in decoding order, give each user the minimum
    // coefficient meeting the target, assuming all remaining budget becomes
    // its interference. Feasible iff the budget is not exhausted.
    auto fill = [&](double mu, std::vector<double>* out) -> double {
        const double gamma = std::exp2(mu) - 1.0;
        double remaining = 1.0;
        for (std::size_t t = 0; t < k; ++t) {
            const double gh = ghat[order[t]];
            const double a = gamma * (remaining + 1.0 / gh) / (1.0 + gamma);
            if (out) (*out)[t] = a;
            remaining -= a;
            if (remaining < -kFracTol) return remaining;
        }
        return remaining;
    };

    double lo = 0.0;
    double hi = log2_1p(*std::max_element(ghat.begin(), ghat.end()));
    for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        (fill(mid, nullptr) >= 0.0 ? lo : hi) = mid;
    }
    std::vector<double> by_pos(k);
    fill(lo, &by_pos);
    // bisection slack can leave O(1e-12) negatives or a hair over budget
    double used = 0.0;
    for (auto& a : by_pos) {
        a = std::max(a, 0.0);
        used += a;
    }
    if (used > 1.0) {
        for (auto& a : by_pos) a /= used;
    } else {
        by_pos[k - 1] += 1.0 - used; // last-decoded user absorbs the residual
    }

    std::vector<double> coeffs(k);
    for (std::size_t t = 0; t < k; ++t) coeffs[order[t]] = by_pos[t];
    return coeffs;
}

std::vector<double> max_min_time_shares(const std::vector<double>& gains,
                                        double total_power, double noise) {
    if (gains.empty()) throw std::invalid_argument("max_min_time_shares: empty input");
    std::vector<double> inv(gains.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < gains.size(); ++i) {
        const double r = log2_1p(total_power * gains[i] / noise);
        if (!(r > 0.0)) throw std::invalid_argument("max_min_time_shares: zero-rate user");
        inv[i] = 1.0 / r;
        sum += inv[i];
    }
    for (double& f : inv) f /= sum;
    return inv;
}

std::vector<char> sic_outage(const RateReport& report,
                             const std::vector<double>& thresholds,
                             SicModel model) {
    if (thresholds.size() != report.rates.size())
        throw std::invalid_argument("sic_outage: threshold count mismatch");
    std::vector<char> out(report.rates.size(), 0);
    for (std::size_t t = 0; t < report.order.size(); ++t) {
        const std::size_t uid = report.order[t];
        bool failed = report.rates[uid] < thresholds[uid];
        if (!failed && model == SicModel::strict) {
            // earlier stages must be decodable at this receiver at the
            // earlier user's threshold
            for (std::size_t s = 0; s < report.prior_stage_rates[uid].size(); ++s) {
                const std::size_t earlier = report.order[s];
                if (report.prior_stage_rates[uid][s] < thresholds[earlier]) {
                    failed = true;
                    break;
                }
            }
        }
        out[uid] = failed;
    }
    return out;
}

ClusterSchedule cluster_schedule(const std::vector<NomaGroup>& clusters,
                                 const std::vector<std::vector<double>>& cluster_gains,
                                 const std::vector<std::vector<std::size_t>>& cluster_user_ids,
                                 const std::vector<double>& fractions,
                                 double noise, std::size_t n_users) {
    if (clusters.size() != fractions.size() || clusters.size() != cluster_gains.size() ||
        clusters.size() != cluster_user_ids.size())
        throw std::invalid_argument("cluster_schedule: size mismatch");
    double fsum = 0.0;
    for (double f : fractions) {
        if (f < 0.0) throw std::invalid_argument("cluster_schedule: negative fraction");
        fsum += f;
    }
    if (std::abs(fsum - 1.0) > kFracTol)
        throw std::invalid_argument("cluster_schedule: fractions must sum to 1");

    std::set<std::size_t> seen;
    ClusterSchedule sched;
    sched.clusters = clusters;
    sched.fractions = fractions;
    sched.user_rates.assign(n_users, 0.0);
    for (std::size_t c = 0; c < clusters.size(); ++c) {
        for (std::size_t gid : cluster_user_ids[c])
            if (!seen.insert(gid).second)
                throw std::invalid_argument("cluster_schedule: user in two clusters");
        if (clusters[c].user_ids.empty()) continue;
        const auto rep = noma_rates(cluster_gains[c], clusters[c], noise);
        for (std::size_t i = 0; i < cluster_user_ids[c].size(); ++i)
            sched.user_rates.at(cluster_user_ids[c][i]) = fractions[c] * rep.rates[i];
    }
    return sched;
}

std::vector<double> weighted_sum_rate(const std::vector<double>& ghat,
                                      const std::vector<double>& weights,
                                      std::vector<double>* coeffs_out) {
    const std::size_t k = ghat.size();
    if (k == 0 || weights.size() != k)
        throw std::invalid_argument("weighted_sum_rate: bad input sizes");
    std::vector<double> rates(k, 0.0);
    if (coeffs_out) coeffs_out->assign(k, 0.0);

    // breakpoints where the winning hyperbola w_i*g_i/(1+g_i z) changes
    std::vector<double> bps{0.0, 1.0};
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
            const double den = (weights[i] - weights[j]) * ghat[i] * ghat[j];
            if (den == 0.0) continue;
            const double z = (weights[j] * ghat[j] - weights[i] * ghat[i]) / den;
            if (z > 0.0 && z < 1.0) bps.push_back(z);
        }
    }
    std::sort(bps.begin(), bps.end());
    for (std::size_t b = 0; b + 1 < bps.size(); ++b) {
        const double z1 = bps[b], z2 = bps[b + 1];
        if (z2 - z1 <= 0.0) continue;
        const double zm = 0.5 * (z1 + z2);
        std::size_t best = 0;
        double best_u = -1.0;
        for (std::size_t i = 0; i < k; ++i) {
            const double u = weights[i] * ghat[i] / (1.0 + ghat[i] * zm);
            if (u > best_u) {
                best_u = u;
                best = i;
            }
        }
        rates[best] += std::log2((1.0 + ghat[best] * z2) / (1.0 + ghat[best] * z1));
        if (coeffs_out) (*coeffs_out)[best] += z2 - z1;
    }
    return rates;
}

std::vector<double> coeffs_for_rates(const std::vector<double>& ghat,
                                     const std::vector<double>& target_rates) {
    const std::size_t k = ghat.size();
    if (target_rates.size() != k)
        throw std::invalid_argument("coeffs_for_rates: size mismatch");
    const auto order = decoding_order(ghat);
    std::vector<double> coeffs(k, 0.0);
    double interference = 0.0; // power of users decoded after the current one
    for (std::size_t t = k; t-- > 0;) {
        const std::size_t uid = order[t];
        const double gamma = std::exp2(std::max(0.0, target_rates[uid])) - 1.0;
        coeffs[uid] = gamma * (1.0 / ghat[uid] + interference);
        interference += coeffs[uid];
    }
    return coeffs;
}

} // namespace uavnoma
