#include "uavnoma/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace uavnoma {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& msg) {
    throw std::runtime_error("config error: " + msg);
}

/// Tracks consumed keys so anything left over is reported as unknown.
struct Obj {
    const json& j;
    std::string path;
    mutable std::set<std::string> used;

    Obj(const json& node, std::string p) : j(node), path(std::move(p)) {
        if (!j.is_object()) fail(path + " must be an object");
    }

    const json* get(const char* key) const {
        used.insert(key);
        const auto it = j.find(key);
        return it == j.end() ? nullptr : &*it;
    }

    template <typename T>
    bool opt(const char* key, T& out) const {
        const json* v = get(key);
        if (v == nullptr) return false;
        try {
            out = v->get<T>();
        } catch (const json::exception&) {
            fail(path + "." + key + " has the wrong type");
        }
        return true;
    }

    void finish() const {
        for (const auto& [key, _] : j.items())
            if (used.count(key) == 0) fail("unknown key '" + key + "' in " + path);
    }
};

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

/// Accepts either the linear key or its dB alternate, never both.
void linear_or_db(const Obj& o, const char* lin_key, const char* db_key, double& out,
                  double (*convert)(double)) {
    double lin = 0.0, db = 0.0;
    const bool has_lin = o.opt(lin_key, lin);
    const bool has_db = o.opt(db_key, db);
    if (has_lin && has_db)
        fail(o.path + ": '" + lin_key + "' and '" + db_key + "' are mutually exclusive");
    if (has_lin) out = lin;
    if (has_db) out = convert(db);
}

ChannelParams parse_channel(const json& node, const std::string& path) {
    ChannelParams p;
    Obj o(node, path);
    linear_or_db(o, "beta0", "beta0_db", p.beta0, db_to_linear);
    o.opt("alpha_los", p.alpha_los);
    o.opt("alpha_nlos", p.alpha_nlos);
    linear_or_db(o, "kappa_nlos", "kappa_nlos_db", p.kappa_nlos, db_to_linear);
    o.opt("los_a", p.los_a);
    o.opt("los_b", p.los_b);
    o.opt("m", p.m);
    o.opt("omega", p.omega);
    linear_or_db(o, "noise_power", "noise_power_dbm", p.noise_power, dbm_to_watts);
    std::string mode;
    if (o.opt("mode", mode)) {
        if (mode == "los_only") p.mode = LosMode::los_only;
        else if (mode == "probabilistic_los") p.mode = LosMode::probabilistic_los;
        else fail(path + ".mode: expected 'los_only' or 'probabilistic_los'");
    }
    o.opt("fading", p.fading_enabled);
    o.finish();
    return p;
}

PairingStrategy parse_pairing(const std::string& s, const std::string& path) {
    if (s == "random") return PairingStrategy::random;
    if (s == "near_near") return PairingStrategy::near_near;
    if (s == "near_far") return PairingStrategy::near_far;
    fail(path + ": expected 'random', 'near_near' or 'near_far'");
}

AssociationPolicy parse_association(const std::string& s, const std::string& path) {
    if (s == "k_nearest") return AssociationPolicy::k_nearest;
    if (s == "mean_power") return AssociationPolicy::mean_power;
    if (s == "max_sinr") return AssociationPolicy::max_sinr;
    fail(path + ": expected 'k_nearest', 'mean_power' or 'max_sinr'");
}

SicModel parse_sic(const std::string& s, const std::string& path) {
    if (s == "idealized") return SicModel::idealized;
    if (s == "strict") return SicModel::strict;
    fail(path + ": expected 'idealized' or 'strict'");
}

void parse_disc(const json& node, Scenario& s) {
    Obj o(node, "disc");
    o.opt("radius", s.disc.R_d);
    o.opt("split_radius", s.disc.r_split);
    o.opt("altitude", s.disc.h);
    o.opt("pairs", s.disc.M);
    o.opt("total_power", s.disc.total_power);
    std::string str;
    if (o.opt("pairing", str)) s.disc_mc.strategy = parse_pairing(str, "disc.pairing");
    o.opt("maxmin_power", s.disc_mc.maxmin_pa);
    o.opt("fixed_edge_coeff", s.disc_mc.fixed_a_edge);
    o.opt("thresholds", s.disc_mc.thresholds);
    if (o.opt("sic", str)) s.disc_mc.sic = parse_sic(str, "disc.sic");
    o.opt("all_strategies", s.disc_mc.all_strategies);
    o.finish();
}

void parse_ppp(const json& node, Scenario& s) {
    Obj o(node, "ppp");
    std::array<double, 2> window{s.ppp.window_w, s.ppp.window_h};
    if (o.opt("window", window)) {
        s.ppp.window_w = window[0];
        s.ppp.window_h = window[1];
    }
    o.opt("user_density", s.ppp.lambda_u);
    o.opt("uav_density", s.ppp.lambda_v);
    o.opt("altitude", s.ppp.h);
    o.opt("group_size", s.ppp.K);
    o.opt("total_power", s.ppp.total_power);
    std::string str;
    if (o.opt("association", str)) s.ppp_mc.policy = parse_association(str, "ppp.association");
    o.opt("threshold", s.ppp_mc.threshold);
    if (o.opt("sic", str)) s.ppp_mc.sic = parse_sic(str, "ppp.sic");
    o.finish();
}

void parse_flight(const json& node, Scenario& s) {
    Obj o(node, "trajectory");
    o.opt("start", s.flight.start);
    o.opt("end", s.flight.end);
    o.opt("altitude", s.flight.altitude);
    o.opt("duration", s.flight.T);
    o.opt("slot", s.flight.delta);
    o.opt("v_max", s.flight.v_max);
    o.opt("p_max", s.flight.P_max);
    if (const json* users = o.get("users")) {
        if (!users->is_array()) fail("trajectory.users must be an array");
        s.flight.users.clear();
        std::size_t idx = 0;
        for (const auto& u : *users) {
            GroundUser gu;
            if (u.is_array()) {
                gu.position = u.get<Vec2>();
            } else {
                Obj uo(u, "trajectory.users[" + std::to_string(idx) + "]");
                uo.opt("position", gu.position);
                uo.opt("threshold", gu.rate_threshold);
                uo.finish();
            }
            s.flight.users.push_back(gu);
            ++idx;
        }
    }
    std::string scheme;
    if (o.opt("scheme", scheme)) {
        if (scheme == "noma") s.flight_oma = false;
        else if (scheme == "oma") s.flight_oma = true;
        else fail("trajectory.scheme: expected 'noma' or 'oma'");
    }
    o.finish();
}

void parse_rl(const json& node, Scenario& s) {
    Obj o(node, "rl");
    if (const json* g = o.get("grid")) {
        Obj go(*g, "rl.grid");
        go.opt("min", s.rl.grid.min_corner);
        go.opt("max", s.rl.grid.max_corner);
        go.opt("cell", s.rl.grid.cell_size);
        go.opt("n_uav", s.rl.grid.n_uav);
        go.opt("initial_altitude", s.rl.grid.initial_altitude);
        go.finish();
    }
    if (const json* h = o.get("hyper")) {
        Obj ho(*h, "rl.hyper");
        ho.opt("alpha_q", s.rl.hyper.alpha_q);
        ho.opt("gamma", s.rl.hyper.gamma);
        ho.opt("epsilon_start", s.rl.hyper.epsilon_start);
        ho.opt("epsilon_end", s.rl.hyper.epsilon_end);
        ho.opt("epsilon_decay", s.rl.hyper.epsilon_decay);
        ho.opt("episodes", s.rl.hyper.episodes);
        ho.opt("steps", s.rl.hyper.steps_per_episode);
        ho.opt("alpha_visit_decay", s.rl.hyper.alpha_visit_decay);
        ho.finish();
    }
    if (const json* w = o.get("walk")) {
        Obj wo(*w, "rl.walk");
        wo.opt("step_length", s.rl.walk.step_length);
        wo.opt("move_probability", s.rl.walk.move_probability);
        wo.finish();
    }
    std::string obj;
    if (o.opt("objective", obj)) {
        if (obj == "min_rate") s.rl.objective = RewardObjective::min_rate;
        else if (obj == "sum_rate") s.rl.objective = RewardObjective::sum_rate;
        else fail("rl.objective: expected 'min_rate' or 'sum_rate'");
    }
    o.opt("users", s.rl.users);
    o.opt("total_power", s.rl.total_power);
    o.opt("eval_horizon", s.rl.eval_horizon);
    o.finish();
}

json channel_json(const ChannelParams& p) {
    return {{"beta0", p.beta0},
            {"alpha_los", p.alpha_los},
            {"alpha_nlos", p.alpha_nlos},
            {"kappa_nlos", p.kappa_nlos},
            {"los_a", p.los_a},
            {"los_b", p.los_b},
            {"m", p.m},
            {"omega", p.omega},
            {"noise_power", p.noise_power},
            {"mode", p.mode == LosMode::los_only ? "los_only" : "probabilistic_los"},
            {"fading", p.fading_enabled}};
}

std::string pairing_name(PairingStrategy s) {
    switch (s) {
        case PairingStrategy::random: return "random";
        case PairingStrategy::near_near: return "near_near";
        case PairingStrategy::near_far: return "near_far";
    }
    return "?";
}

std::string association_name(AssociationPolicy p) {
    switch (p) {
        case AssociationPolicy::k_nearest: return "k_nearest";
        case AssociationPolicy::mean_power: return "mean_power";
        case AssociationPolicy::max_sinr: return "max_sinr";
    }
    return "?";
}

} // namespace

std::string to_string(RunMode mode) {
    switch (mode) {
        case RunMode::disc: return "disc";
        case RunMode::ppp: return "ppp";
        case RunMode::trajectory: return "trajectory";
        case RunMode::placement: return "placement";
        case RunMode::movement: return "movement";
    }
    return "?";
}

void Scenario::validate() const {
    switch (mode) {
        case RunMode::disc:
            if (trials < 1) fail("trials >= 1 required");
            disc.validate();
            break;
        case RunMode::ppp:
            if (trials < 1) fail("trials >= 1 required");
            ppp.validate();
            break;
        case RunMode::trajectory:
            flight.validate();
            break;
        case RunMode::placement:
        case RunMode::movement:
            rl.grid.validate();
            rl.hyper.validate();
            if (rl.users.empty()) fail("rl.users must not be empty");
            if (rl.users.size() < rl.grid.n_uav)
                fail("rl: at least one user per UAV required");
            if (!(rl.total_power > 0.0)) fail("rl.total_power must be positive");
            if (rl.walk.step_length < 0.0) fail("rl.walk.step_length must be nonnegative");
            if (!(rl.walk.move_probability >= 0.0 && rl.walk.move_probability <= 1.0))
                fail("rl.walk.move_probability in [0,1] required");
            break;
    }
    if (workers < 1) fail("workers >= 1 required");
}

Scenario parse_scenario_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(std::string("not valid JSON: ") + e.what());
    }
    Scenario s;
    Obj o(j, "scenario");
    std::string mode;
    if (!o.opt("mode", mode)) fail("missing required key 'mode'");
    if (mode == "disc") s.mode = RunMode::disc;
    else if (mode == "ppp") s.mode = RunMode::ppp;
    else if (mode == "trajectory") s.mode = RunMode::trajectory;
    else if (mode == "placement") s.mode = RunMode::placement;
    else if (mode == "movement") s.mode = RunMode::movement;
    else fail("mode: expected one of disc, ppp, trajectory, placement, movement");

    o.opt("seed", s.seed);
    o.opt("trials", s.trials);
    o.opt("workers", s.workers);
    o.opt("output_dir", s.output_dir);

    ChannelParams shared;
    bool has_shared = false;
    if (const json* c = o.get("channel")) {
        shared = parse_channel(*c, "channel");
        has_shared = true;
    }
    if (has_shared) {
        s.disc.channel = shared;
        s.ppp.channel = shared;
        s.flight.channel = shared;
        s.rl.channel = shared;
    }

    const json* block = nullptr;
    switch (s.mode) {
        case RunMode::disc: block = o.get("disc"); break;
        case RunMode::ppp: block = o.get("ppp"); break;
        case RunMode::trajectory: block = o.get("trajectory"); break;
        case RunMode::placement:
        case RunMode::movement: block = o.get("rl"); break;
    }
    if (block != nullptr) {
        switch (s.mode) {
            case RunMode::disc: parse_disc(*block, s); break;
            case RunMode::ppp: parse_ppp(*block, s); break;
            case RunMode::trajectory: parse_flight(*block, s); break;
            case RunMode::placement:
            case RunMode::movement: parse_rl(*block, s); break;
        }
    }
    o.finish();
    s.validate();
    return s;
}

Scenario parse_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario_text(buf.str());
}

std::string scenario_hash(const Scenario& s) {
    json canon;
    canon["mode"] = to_string(s.mode);
    switch (s.mode) {
        case RunMode::disc:
            canon["trials"] = s.trials;
            canon["disc"] = {{"radius", s.disc.R_d},
                             {"split_radius", s.disc.r_split},
                             {"altitude", s.disc.h},
                             {"pairs", s.disc.M},
                             {"total_power", s.disc.total_power},
                             {"pairing", pairing_name(s.disc_mc.strategy)},
                             {"maxmin_power", s.disc_mc.maxmin_pa},
                             {"fixed_edge_coeff", s.disc_mc.fixed_a_edge},
                             {"thresholds", s.disc_mc.thresholds},
                             {"sic", s.disc_mc.sic == SicModel::strict ? "strict" : "idealized"},
                             {"all_strategies", s.disc_mc.all_strategies},
                             {"channel", channel_json(s.disc.channel)}};
            break;
        case RunMode::ppp:
            canon["trials"] = s.trials;
            canon["ppp"] = {{"window", std::array<double, 2>{s.ppp.window_w, s.ppp.window_h}},
                            {"user_density", s.ppp.lambda_u},
                            {"uav_density", s.ppp.lambda_v},
                            {"altitude", s.ppp.h},
                            {"group_size", s.ppp.K},
                            {"total_power", s.ppp.total_power},
                            {"association", association_name(s.ppp_mc.policy)},
                            {"threshold", s.ppp_mc.threshold},
                            {"sic", s.ppp_mc.sic == SicModel::strict ? "strict" : "idealized"},
                            {"channel", channel_json(s.ppp.channel)}};
            break;
        case RunMode::trajectory: {
            json users = json::array();
            for (const auto& u : s.flight.users)
                users.push_back({{"position", u.position}, {"threshold", u.rate_threshold}});
            canon["trajectory"] = {{"start", s.flight.start},
                                   {"end", s.flight.end},
                                   {"altitude", s.flight.altitude},
                                   {"duration", s.flight.T},
                                   {"slot", s.flight.delta},
                                   {"v_max", s.flight.v_max},
                                   {"p_max", s.flight.P_max},
                                   {"users", users},
                                   {"scheme", s.flight_oma ? "oma" : "noma"},
                                   {"channel", channel_json(s.flight.channel)}};
            break;
        }
        case RunMode::placement:
        case RunMode::movement:
            canon["rl"] = {
                {"grid",
                 {{"min", s.rl.grid.min_corner},
                  {"max", s.rl.grid.max_corner},
                  {"cell", s.rl.grid.cell_size},
                  {"n_uav", s.rl.grid.n_uav},
                  {"initial_altitude", s.rl.grid.initial_altitude}}},
                {"hyper",
                 {{"alpha_q", s.rl.hyper.alpha_q},
                  {"gamma", s.rl.hyper.gamma},
                  {"epsilon_start", s.rl.hyper.epsilon_start},
                  {"epsilon_end", s.rl.hyper.epsilon_end},
                  {"epsilon_decay", s.rl.hyper.epsilon_decay},
                  {"episodes", s.rl.hyper.episodes},
                  {"steps", s.rl.hyper.steps_per_episode},
                  {"alpha_visit_decay", s.rl.hyper.alpha_visit_decay}}},
                {"walk",
                 {{"step_length", s.rl.walk.step_length},
                  {"move_probability", s.rl.walk.move_probability}}},
                {"objective",
                 s.rl.objective == RewardObjective::min_rate ? "min_rate" : "sum_rate"},
                {"users", s.rl.users},
                {"total_power", s.rl.total_power},
                {"eval_horizon", s.rl.eval_horizon},
                {"channel", channel_json(s.rl.channel)}};
            break;
    }
    const std::string dump = canon.dump(); // keys sorted by the object type
    std::uint64_t h = 1469598103934665603ull;
    for (const unsigned char c : dump) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace uavnoma
