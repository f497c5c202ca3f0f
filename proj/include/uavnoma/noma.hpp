#pragma once

#include <cstddef>
#include <vector>

namespace uavnoma {

/// Co-channel user set under superposition coding. `user_ids` is the SIC
/// decoding order: first listed is decoded first at every receiver (the
/// weakest user). `coeffs` are power fractions aligned with `user_ids`.
struct NomaGroup {
    std::vector<std::size_t> user_ids;
    std::vector<double> coeffs;
    double total_power = 1.0;

    void validate() const;
};

enum class SicModel { idealized, strict };

/// Per-user results, indexed by user id (the index into the gains vector).
struct RateReport {
    std::vector<double> rates;     // bits/s/Hz, log2(1 + own-stage SINR)
    std::vector<double> sinrs;     // own-stage SINR, linear
    std::vector<char> outage;      // set against thresholds when provided
    // prior_stage_rates[j][t]: rate available at receiver j when decoding the
    // message of the user at decoding position t (t before j's own position).
    // Needed by the strict SIC outage model.
    std::vector<std::vector<double>> prior_stage_rates;
    std::vector<std::size_t> order; // decoding order used
};

struct ClusterSchedule {
    std::vector<NomaGroup> clusters;
    std::vector<double> fractions;     // per-cluster time shares, sum to 1
    std::vector<double> user_rates;    // effective rate by global user id
};

/// SIC decoding order: user indices sorted by ascending gain (weakest user's
/// signal is decoded first, at every receiver). Ties break by ascending id.
std::vector<std::size_t> decoding_order(const std::vector<double>& gains);

/// Downlink SIC rates. For user j at decoding position t, computed at its
/// own receiver: SINR = a_j*P*g_j / (P*g_j * sum_{later} a_k + noise + I_ext_j).
/// thresholds / ext_interference may be empty (treated as zero).
RateReport noma_rates(const std::vector<double>& gains, const NomaGroup& group,
                      double noise,
                      const std::vector<double>& ext_interference = {},
                      const std::vector<double>& thresholds = {},
                      SicModel model = SicModel::idealized);

/// TDMA baseline: rate_k = fraction_k * log2(1 + P*g_k/noise).
RateReport oma_rates(const std::vector<double>& gains, double total_power,
                     double noise, const std::vector<double>& slot_fractions,
                     const std::vector<double>& thresholds = {});

/// Coefficients (by user id, summing to 1) maximizing the minimum rate under
/// the ascending-gain SIC order. Bisection on the common rate target with a
/// sequential feasibility fill; all rates equal at the optimum.
std::vector<double> max_min_power_allocation(const std::vector<double>& gains,
                                             double total_power, double noise);

/// Slot fractions (by user id, summing to 1) equalizing OMA rates:
/// f_k proportional to 1/log2(1 + P*g_k/noise).
std::vector<double> max_min_time_shares(const std::vector<double>& gains,
                                        double total_power, double noise);

/// Outage per user: own stage below threshold, or (strict model) any earlier
/// decoding stage at this receiver below that user's threshold.
std::vector<char> sic_outage(const RateReport& report,
                             const std::vector<double>& thresholds,
                             SicModel model = SicModel::idealized);

/// Hybrid NOMA/TDMA: NOMA within each cluster, TDMA across clusters. Rates
/// are the intra-cluster NOMA rates scaled by the cluster's time fraction.
/// `cluster_gains[c][i]` is the gain of clusters[c].user_ids order... indexed
/// by position within the cluster's local id space (see noma_rates).
ClusterSchedule cluster_schedule(const std::vector<NomaGroup>& clusters,
                                 const std::vector<std::vector<double>>& cluster_gains,
                                 const std::vector<std::vector<std::size_t>>& cluster_user_ids,
                                 const std::vector<double>& fractions,
                                 double noise, std::size_t n_users);

// --- degraded-broadcast-region tools (used by the trajectory solver) ---

/// Maximizes sum_k weights[k]*rate[k] over coefficient allocations with unit
/// budget, for normalized gains ghat[k] = P*g_k/noise. Exact layered greedy:
/// power layer z in [0,1] goes to argmax_k w_k*ghat_k/(1+ghat_k*z).
/// Returns rates by user id; coeffs_out (optional) gets the allocation.
std::vector<double> weighted_sum_rate(const std::vector<double>& ghat,
                                      const std::vector<double>& weights,
                                      std::vector<double>* coeffs_out = nullptr);

/// Minimal coefficients realizing `target_rates` under the ascending-gain SIC
/// order, from last-decoded backward. Returns coeffs by user id; total may
/// exceed 1 if the targets are infeasible (caller checks).
std::vector<double> coeffs_for_rates(const std::vector<double>& ghat,
                                     const std::vector<double>& target_rates);

} // namespace uavnoma
