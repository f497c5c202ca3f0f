#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "uavnoma/rng.hpp"
#include "uavnoma/trajectory.hpp"

using namespace uavnoma;

namespace {

FlightConfig small_config() {
    FlightConfig c;
    c.T = 10.0;
    c.delta = 1.0;
    c.users = {{{200.0, 200.0}, 0.0}, {{-150.0, -250.0}, 0.0}};
    return c;
}

double min_avg(const std::vector<Vec2>& q, const std::vector<std::vector<double>>& powers,
               const FlightConfig& cfg) {
    const std::size_t n = cfg.slots();
    const std::size_t k = cfg.users.size();
    std::vector<double> avg(k, 0.0);
    for (std::size_t s = 0; s < n; ++s) {
        std::vector<double> p(k);
        for (std::size_t u = 0; u < k; ++u) p[u] = powers[u][s];
        const auto r = slot_rates(q[s + 1], p, cfg);
        for (std::size_t u = 0; u < k; ++u) avg[u] += r[u];
    }
    double lo = avg[0];
    for (double a : avg) lo = std::min(lo, a);
    return lo / static_cast<double>(n);
}

} // namespace

TEST_CASE("straight-line initialization") {
    FlightConfig c;
    c.T = 4.0;
    c.delta = 1.0;
    c.v_max = 300.0;
    c.users = {{{0.0, 0.0}, 0.0}};
    const auto q = init_trajectory(c);
    REQUIRE(q.size() == 5);
    const double want_y[5] = {500.0, 250.0, 0.0, -250.0, -500.0};
    for (int i = 0; i < 5; ++i) {
        CHECK(q[i][0] == doctest::Approx(0.0));
        CHECK(q[i][1] == doctest::Approx(want_y[i]));
    }
    SUBCASE("start == end gives a constant path") {
        c.end = c.start;
        for (const auto& p : init_trajectory(c)) {
            CHECK(p[0] == doctest::Approx(c.start[0]));
            CHECK(p[1] == doctest::Approx(c.start[1]));
        }
    }
    SUBCASE("infeasible distance rejected") {
        c.v_max = 100.0; // needs 250 m/s
        CHECK_THROWS(c.validate());
    }
    SUBCASE("too few slots rejected") {
        c.delta = 4.0;
        c.v_max = 300.0;
        CHECK_THROWS(c.validate());
    }
}

TEST_CASE("slot rates") {
    FlightConfig c;
    c.users = {{{0.0, 0.0}, 0.0}};
    c.channel.noise_power = 1e-9; // SNR 100 when overhead at 100 m
    SUBCASE("single user overhead") {
        const auto r = slot_rates({0.0, 0.0}, {1.0}, c);
        CHECK(r[0] == doctest::Approx(std::log2(101.0)).epsilon(1e-9));
        CHECK(r[0] == doctest::Approx(6.658).epsilon(1e-3));
    }
    SUBCASE("equidistant users: superposition sum rate equals single-user capacity") {
        c.users = {{{100.0, 0.0}, 0.0}, {{-100.0, 0.0}, 0.0}};
        const auto r = slot_rates({0.0, 0.0}, {0.5, 0.5}, c);
        // equal gains g: the rate pair lies on the simplex r0 + r1 = log2(1 + g)
        const double g = c.P_max * c.channel.beta0 / 20000.0 / c.channel.noise_power;
        CHECK(r[0] + r[1] == doctest::Approx(std::log2(1.0 + g)).epsilon(1e-9));
        // the first-decoded user sees the other's power as interference
        CHECK(std::min(r[0], r[1]) ==
              doctest::Approx(std::log2(1.0 + 0.5 * g / (0.5 * g + 1.0))).epsilon(1e-9));
    }
    SUBCASE("zero power, zero rates") {
        const auto r = slot_rates({0.0, 0.0}, {0.0}, c);
        CHECK(r[0] == 0.0);
    }
}

TEST_CASE("power subproblem") {
    SUBCASE("single user gets full power") {
        FlightConfig c;
        c.T = 10.0;
        c.delta = 1.0;
        c.users = {{{0.0, 100.0}, 0.0}};
        const auto q = init_trajectory(c);
        const auto p = power_subproblem(q, c);
        double want = 0.0;
        for (std::size_t n = 0; n < c.slots(); ++n) {
            CHECK(p[0][n] == doctest::Approx(c.P_max).epsilon(1e-6));
            want += slot_rates(q[n + 1], {c.P_max}, c)[0];
        }
        want /= static_cast<double>(c.slots());
        CHECK(min_avg(q, p, c) == doctest::Approx(want).epsilon(1e-9));
    }
    SUBCASE("co-located users reduce to the static max-min") {
        FlightConfig c;
        c.start = {0.0, 10.0};
        c.end = {0.0, -10.0};
        c.T = 10.0;
        c.delta = 1.0;
        c.v_max = 50.0;
        c.users = {{{0.0, 0.0}, 0.0}, {{0.0, 0.0}, 0.0}};
        const auto q = init_trajectory(c);
        const auto p = power_subproblem(q, c);
        // equal gains per slot: the per-slot rate region is the simplex
        // r0 + r1 <= log2(1 + g_n), so the max-min average is half the
        // average sum capacity (achieved by time sharing across slots)
        double want = 0.0;
        for (std::size_t n = 0; n < c.slots(); ++n) {
            const double d2 = q[n + 1][1] * q[n + 1][1] + c.altitude * c.altitude;
            const double g = c.P_max * c.channel.beta0 / d2 / c.channel.noise_power;
            want += 0.5 * std::log2(1.0 + g);
        }
        want /= static_cast<double>(c.slots());
        CHECK(min_avg(q, p, c) == doctest::Approx(want).epsilon(1e-3));
    }
    SUBCASE("matches 3-slot brute force") {
        FlightConfig c;
        c.start = {0.0, 100.0};
        c.end = {0.0, -100.0};
        c.T = 3.0;
        c.delta = 1.0;
        c.v_max = 100.0;
        c.users = {{{150.0, 100.0}, 0.0}, {{-50.0, -150.0}, 0.0}};
        const auto q = init_trajectory(c);
        const auto p = power_subproblem(q, c);
        const double ours = min_avg(q, p, c);

        // grid over per-slot user-1 split at full power, step 0.01*P_max
        double best = 0.0;
        std::vector<std::vector<double>> g(2, std::vector<double>(3));
        for (int a0 = 0; a0 <= 100; ++a0)
            for (int a1 = 0; a1 <= 100; ++a1)
                for (int a2 = 0; a2 <= 100; ++a2) {
                    const double s[3] = {a0 / 100.0, a1 / 100.0, a2 / 100.0};
                    for (int n = 0; n < 3; ++n) {
                        g[0][n] = s[n] * c.P_max;
                        g[1][n] = (1.0 - s[n]) * c.P_max;
                    }
                    best = std::max(best, min_avg(q, g, c));
                }
        CHECK(ours >= best - 1e-2);
        CHECK(ours <= best + 5e-2); // continuous optimum can top the grid slightly
    }
    SUBCASE("never worse than incoming powers") {
        FlightConfig c = small_config();
        const auto q = init_trajectory(c);
        std::vector<std::vector<double>> inc(2, std::vector<double>(c.slots(), 0.5 * c.P_max));
        const double before = min_avg(q, inc, c);
        const auto p = power_subproblem(q, c, &inc);
        CHECK(min_avg(q, p, c) >= before - 1e-12);
    }
    SUBCASE("per-user averages equal at the optimum") {
        FlightConfig c = small_config();
        const auto q = init_trajectory(c);
        const auto p = power_subproblem(q, c);
        std::vector<double> avg(2, 0.0);
        for (std::size_t n = 0; n < c.slots(); ++n) {
            const auto r = slot_rates(q[n + 1], {p[0][n], p[1][n]}, c);
            avg[0] += r[0];
            avg[1] += r[1];
        }
        CHECK(std::abs(avg[0] - avg[1]) / static_cast<double>(c.slots()) < 1e-4);
    }
}

TEST_CASE("trajectory subproblem") {
    SUBCASE("zero iterations leaves waypoints unchanged") {
        FlightConfig c = small_config();
        const auto q = init_trajectory(c);
        const auto p = power_subproblem(q, c);
        const auto q2 = trajectory_subproblem(p, q, c, 0.05, 0);
        CHECK(q2 == q);
    }
    SUBCASE("single user: UAV reaches the user's overhead position") {
        FlightConfig c;
        c.start = {0.0, 200.0};
        c.end = {0.0, -200.0};
        c.T = 20.0;
        c.delta = 1.0;
        c.v_max = 60.0;
        c.users = {{{0.0, 0.0}, 0.0}};
        const auto sol = optimize_joint(c);
        double closest = 1e18;
        for (const auto& w : sol.waypoints)
            closest = std::min(closest, std::hypot(w[0], w[1]));
        CHECK(closest <= c.v_max * c.delta);
    }
    SUBCASE("speed projection never violated") {
        FlightConfig c = small_config();
        const auto q = init_trajectory(c);
        auto p = power_subproblem(q, c);
        const auto q2 = trajectory_subproblem(p, q, c);
        for (std::size_t i = 0; i + 1 < q2.size(); ++i) {
            const double len = std::hypot(q2[i + 1][0] - q2[i][0], q2[i + 1][1] - q2[i][1]);
            CHECK(len <= c.v_max * c.delta + 1e-9);
        }
        CHECK(q2.front() == q.front());
        CHECK(q2.back() == q.back());
    }
}

TEST_CASE("joint optimization") {
    SUBCASE("audit, exact evaluate, determinism") {
        FlightConfig c = small_config();
        const auto a = optimize_joint(c);
        CHECK_NOTHROW(audit_solution(a, c));
        CHECK(evaluate(a, c) == a.min_avg_rate); // bitwise
        const auto b = optimize_joint(c);
        CHECK(a.waypoints == b.waypoints);
        CHECK(a.powers == b.powers);
        CHECK(a.min_avg_rate == b.min_avg_rate);
    }
    SUBCASE("optimization improves on the straight line") {
        FlightConfig c = small_config();
        const auto q0 = init_trajectory(c);
        const auto p0 = power_subproblem(q0, c);
        const auto sol = optimize_joint(c);
        CHECK(sol.min_avg_rate >= min_avg(q0, p0, c) - 1e-12);
    }
    SUBCASE("minimum-time flight is forced straight") {
        FlightConfig c;
        c.T = 10.0;
        c.delta = 1.0;
        c.v_max = 100.0; // exactly 1000 m in 10 s
        c.users = {{{100.0, 0.0}, 0.0}};
        const auto sol = optimize_joint(c);
        const auto q0 = init_trajectory(c);
        for (std::size_t i = 0; i < q0.size(); ++i) {
            CHECK(sol.waypoints[i][0] == doctest::Approx(q0[i][0]).epsilon(1e-6));
            CHECK(sol.waypoints[i][1] == doctest::Approx(q0[i][1]).epsilon(1e-6));
        }
    }
    SUBCASE("NOMA is never worse than the OMA baseline") {
        Rng rng(2718);
        for (int t = 0; t < 3; ++t) {
            FlightConfig c;
            c.T = 10.0;
            c.delta = 1.0;
            c.users.clear();
            for (int u = 0; u < 3; ++u)
                c.users.push_back({{rng.uniform(-500.0, 500.0), rng.uniform(-500.0, 500.0)}, 0.0});
            const auto noma = optimize_joint(c);
            const auto oma = oma_baseline(c);
            CHECK_NOTHROW(audit_solution(oma, c));
            CHECK(noma.min_avg_rate >= oma.min_avg_rate - 1e-6);
        }
    }
    SUBCASE("symmetric users get equal OMA average rates") {
        FlightConfig c;
        c.T = 10.0;
        c.delta = 1.0;
        c.users = {{{150.0, 0.0}, 0.0}, {{-150.0, 0.0}, 0.0}};
        const auto sol = oma_baseline(c);
        std::vector<double> avg(2, 0.0);
        for (std::size_t n = 0; n < c.slots(); ++n) {
            const auto r = slot_rates(sol.waypoints[n + 1], {sol.powers[0][n], sol.powers[1][n]}, c);
            avg[0] += r[0];
            avg[1] += r[1];
        }
        CHECK(avg[0] == doctest::Approx(avg[1]).epsilon(0.05));
    }
}
