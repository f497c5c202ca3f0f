#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "uavnoma/scenario.hpp"

using namespace uavnoma;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("uavnoma-test-" + name);
    fs::remove_all(dir);
    return dir;
}

} // namespace

TEST_CASE("minimal configs parse with defaults") {
    const auto s = parse_scenario_text(R"({"mode": "disc"})");
    CHECK(s.mode == RunMode::disc);
    CHECK(s.seed == 1);
    CHECK(s.trials == 100000);
    CHECK(s.disc.R_d == 500.0);
    CHECK(s.disc.channel.m == 2.0);
    const auto p = parse_scenario_text(R"({"mode": "ppp", "trials": 50})");
    CHECK(p.ppp.K == 2);
    CHECK(p.trials == 50);
}

TEST_CASE("parse errors name the offending field") {
    SUBCASE("unknown top-level key") {
        CHECK_THROWS_WITH_AS(parse_scenario_text(R"({"mode": "disc", "trails": 10})"),
                             doctest::Contains("trails"), std::runtime_error);
    }
    SUBCASE("unknown nested key") {
        CHECK_THROWS_WITH_AS(
            parse_scenario_text(R"({"mode": "disc", "disc": {"radius": 400, "radiis": 1}})"),
            doctest::Contains("radiis"), std::runtime_error);
    }
    SUBCASE("unknown channel key") {
        CHECK_THROWS_WITH_AS(
            parse_scenario_text(R"({"mode": "disc", "channel": {"beta1": 2}})"),
            doctest::Contains("beta1"), std::runtime_error);
    }
    SUBCASE("wrong type") {
        CHECK_THROWS_WITH_AS(parse_scenario_text(R"({"mode": "disc", "seed": "abc"})"),
                             doctest::Contains("seed"), std::runtime_error);
    }
    SUBCASE("bad mode") {
        CHECK_THROWS_AS(parse_scenario_text(R"({"mode": "dics"})"), std::runtime_error);
    }
    SUBCASE("zero trials") {
        CHECK_THROWS_WITH_AS(parse_scenario_text(R"({"mode": "ppp", "trials": 0})"),
                             doctest::Contains("trials >= 1"), std::runtime_error);
    }
    SUBCASE("not json") {
        CHECK_THROWS_AS(parse_scenario_text("mode = disc"), std::runtime_error);
    }
}

TEST_CASE("dB channel fields convert on load") {
    const auto s = parse_scenario_text(
        R"({"mode": "disc", "channel": {"beta0_db": -30, "noise_power_dbm": -100, "kappa_nlos_db": -20}})");
    CHECK(s.disc.channel.beta0 == doctest::Approx(1e-3));
    CHECK(s.disc.channel.noise_power == doctest::Approx(1e-13));
    CHECK(s.disc.channel.kappa_nlos == doctest::Approx(0.01));
    CHECK_THROWS_WITH_AS(
        parse_scenario_text(R"({"mode": "disc", "channel": {"beta0": 1e-3, "beta0_db": -30}})"),
        doctest::Contains("mutually exclusive"), std::runtime_error);
}

TEST_CASE("scenario hash is canonical") {
    const auto a = parse_scenario_text(
        R"({"mode": "disc", "seed": 1, "disc": {"radius": 400, "pairs": 3}})");
    const auto b = parse_scenario_text(
        R"({"disc": {"pairs": 3, "radius": 400}, "seed": 999, "mode": "disc"})");
    CHECK(scenario_hash(a) == scenario_hash(b)); // key order and seed ignored
    const auto c = parse_scenario_text(
        R"({"mode": "disc", "disc": {"radius": 401, "pairs": 3}})");
    CHECK(scenario_hash(a) != scenario_hash(c));
    CHECK(scenario_hash(a).size() == 16);
}

TEST_CASE("run emits deterministic files") {
    Scenario s = parse_scenario_text(R"({"mode": "disc", "seed": 11, "trials": 3000})");
    const fs::path d1 = fresh_dir("det1"), d2 = fresh_dir("det2");
    const auto m1 = run(s, d1.string());
    s.workers = 4;
    const auto m2 = run(s, d2.string());
    CHECK(m1.scenario_hash == m2.scenario_hash);
    CHECK(slurp(d1 / "results.csv") == slurp(d2 / "results.csv"));
    const std::string csv = slurp(d1 / "results.csv");
    CHECK(csv.rfind("scenario_hash,seed,mode,policy,user_class,metric,", 0) == 0);
    CHECK(csv.find(m1.scenario_hash) != std::string::npos);
    fs::remove_all(d1);
    fs::remove_all(d2);
}

TEST_CASE("trajectory run emits N+1 waypoint rows") {
    Scenario s = parse_scenario_text(
        R"({"mode": "trajectory", "trajectory": {"duration": 10, "slot": 1.0,
            "users": [[200, 200], [-150, -250]]}})");
    const fs::path dir = fresh_dir("traj");
    run(s, dir.string());
    const std::string csv = slurp(dir / "waypoints.csv");
    std::size_t rows = 0;
    for (char ch : csv) rows += ch == '\n';
    CHECK(rows == s.flight.slots() + 2); // header + N+1 waypoints
    CHECK(slurp(dir / "summary.json").find("min_avg_rate") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("compare pairs runs and flags hash mismatches") {
    Scenario s = parse_scenario_text(R"({"mode": "disc", "seed": 5, "trials": 2000})");
    const fs::path da = fresh_dir("cmpa"), db = fresh_dir("cmpb"), dc = fresh_dir("cmpc");
    run(s, da.string());
    run(s, db.string());
    SUBCASE("identical runs, zero gain, no warning") {
        const auto rep = compare_runs(da.string(), db.string());
        CHECK_FALSE(rep.hash_mismatch);
        REQUIRE_FALSE(rep.rows.empty());
        for (const auto& r : rep.rows) CHECK(r.gain == 0.0);
    }
    SUBCASE("different configs warn") {
        Scenario t = s;
        t.disc.R_d = 400.0;
        run(t, dc.string());
        const auto rep = compare_runs(da.string(), dc.string());
        CHECK(rep.hash_mismatch);
        CHECK(rep.table().find("warning") != std::string::npos);
    }
    SUBCASE("absent metric rejected") {
        CHECK_THROWS(compare_runs(da.string(), db.string(), "no_such_metric"));
    }
    fs::remove_all(da);
    fs::remove_all(db);
    fs::remove_all(dc);
}

TEST_CASE("cli binary end to end") {
    const char* cli = std::getenv("UAVNOMA_CLI");
    if (cli == nullptr) {
        MESSAGE("UAVNOMA_CLI not set; skipping binary tests");
        return;
    }
    const fs::path dir = fresh_dir("bin");
    fs::create_directories(dir);
    const fs::path cfg = dir / "scenario.json";
    {
        std::ofstream out(cfg);
        out << R"({"mode": "disc", "seed": 3, "trials": 2000})";
    }
    const std::string base = std::string(cli);
    SUBCASE("happy path exits zero and writes results") {
        const fs::path out = dir / "run1";
        const int rc = std::system(
            (base + " stochastic --config " + cfg.string() + " --out " + out.string() +
             " > " + (dir / "stdout.json").string())
                .c_str());
        CHECK(rc == 0);
        CHECK(fs::exists(out / "results.csv"));
        CHECK(slurp(dir / "stdout.json").find("\"status\":\"ok\"") != std::string::npos);
    }
    SUBCASE("bad config exits nonzero with error json") {
        const fs::path bad = dir / "bad.json";
        {
            std::ofstream out(bad);
            out << R"({"mode": "disc", "bogus_key": 1})";
        }
        const int rc = std::system((base + " stochastic --config " + bad.string() + " > " +
                                    (dir / "err.json").string())
                                       .c_str());
        CHECK(rc != 0);
        const std::string err = slurp(dir / "err.json");
        CHECK(err.find("\"status\":\"error\"") != std::string::npos);
        CHECK(err.find("bogus_key") != std::string::npos);
    }
    SUBCASE("subcommand/mode mismatch is rejected") {
        const int rc = std::system(
            (base + " trajectory --config " + cfg.string() + " > /dev/null").c_str());
        CHECK(rc != 0);
    }
    fs::remove_all(dir);
}
