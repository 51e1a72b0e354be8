#include "tipi/harness/session_config.hpp"

#include "tipi/core/errors.hpp"

#include <toml.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace tipi::harness {

using nlohmann::json;

const char* to_string(Condition c) { return c == Condition::kAda ? "ada" : "rea"; }

Condition condition_from_string(const std::string& s) {
    std::string lower(s);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (lower == "ada") return Condition::kAda;
    if (lower == "rea" || lower == "balanced-rea") return Condition::kRea;
    throw ConfigError("unknown condition '" + s + "' (expected ada or rea)");
}

void SessionConfig::validate() const {
    if (duration_steps < 1) throw ConfigError("duration_steps must be >= 1");
    plant.validate();
    try {
        tipi_config().validate();
        if (!(learning.ema_decay >= 0.0 && learning.ema_decay <= 1.0)) throw InvalidInput("ema_decay must lie in [0, 1]");
        if (!(learning.ridge > 0.0)) throw InvalidInput("ridge must be positive");
    } catch (const InvalidInput& e) {
        throw ConfigError(e.what());
    }
    if (!std::isfinite(balance.k_p) || !std::isfinite(balance.k_h)) throw ConfigError("balance gains must be finite");
    if (!(nudges.period_s > 0.0)) throw ConfigError("nudge period must be positive");
    if (!(nudges.impulse >= 0.0) || nudges.impulse > plant.max_impulse) {
        throw ConfigError("default nudge impulse must lie in [0, max_impulse]");
    }
    if (report.occupancy_grid < 2) throw ConfigError("occupancy_grid must be >= 2");
    if (report.tipi_window < static_cast<std::size_t>(channel::kCount) + 1) {
        throw ConfigError("tipi_window must be at least n + 1");
    }
}

controller::TipiConfig SessionConfig::tipi_config() const {
    controller::TipiConfig c;
    c.ema_decay = learning.ema_decay;
    c.ridge = learning.ridge;
    c.learning = {learning.eps_controller, learning.eps_model, learning.grad_clip};
    c.seed = seed;
    c.initial_self_coupling = learning.initial_self_coupling;
    c.initial_model_scale = learning.initial_model_scale;
    return c;
}

namespace {

/// Reads known keys out of a JSON object and rejects anything left over.
class Reader {
public:
    Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw ConfigError(where_ + " must be a table/object");
    }

    template <typename T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        const auto& v = j_.at(key);
        try {
            if constexpr (std::is_same_v<T, double>) {
                if (!v.is_number()) throw ConfigError("");
                out = v.get<double>();
            } else if constexpr (std::is_integral_v<T>) {
                if (!v.is_number_integer()) throw ConfigError("");
                if constexpr (std::is_unsigned_v<T>) {
                    if (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0) {
                        throw ConfigError("");
                    }
                }
                out = v.get<T>();
            } else {
                out = v.get<T>();
            }
        } catch (const std::exception&) {
            throw ConfigError(where_ + "." + key + " has the wrong type");
        }
    }

    const json* sub(const char* key) {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

    void finish() const {
        for (const auto& [k, v] : j_.items()) {
            if (!seen_.contains(k)) throw ConfigError("unknown key '" + where_ + "." + k + "'");
        }
    }

private:
    const json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

}  // namespace

SessionConfig config_from_json(const json& j) {
    SessionConfig cfg;
    Reader top(j, "config");

    std::string condition = to_string(cfg.condition);
    top.get("condition", condition);
    cfg.condition = condition_from_string(condition);
    top.get("duration_steps", cfg.duration_steps);
    top.get("seed", cfg.seed);
    top.get("schedule", cfg.schedule);

    if (const auto* p = top.sub("frozen_params")) {
        if (!p->is_string()) throw ConfigError("config.frozen_params must be a string");
        cfg.frozen_params = p->get<std::string>();
    }
    if (const auto* p = top.sub("output")) {
        if (!p->is_string()) throw ConfigError("config.output must be a string");
        cfg.output = p->get<std::string>();
    }

    if (const auto* p = top.sub("plant")) {
        Reader r(*p, "plant");
        r.get("dt", cfg.plant.dt);
        r.get("substeps", cfg.plant.substeps);
        r.get("max_impulse", cfg.plant.max_impulse);
        if (const auto* t = r.sub("table")) {
            Reader rt(*t, "plant.table");
            rt.get("radius", cfg.plant.table.radius);
            rt.get("wall_restitution", cfg.plant.table.wall_restitution);
            rt.get("surface_friction", cfg.plant.table.surface_friction);
            rt.finish();
        }
        if (const auto* b = r.sub("body")) {
            Reader rb(*b, "plant.body");
            rb.get("sphere_radius", cfg.plant.body.sphere_radius);
            rb.get("mass", cfg.plant.body.mass);
            rb.get("track_width", cfg.plant.body.track_width);
            rb.get("max_wheel_speed", cfg.plant.body.max_wheel_speed);
            rb.get("actuation_tau", cfg.plant.body.actuation_tau);
            rb.finish();
        }
        if (const auto* nz = r.sub("noise")) {
            Reader rn(*nz, "plant.noise");
            rn.get("accel", cfg.plant.noise.accel);
            rn.get("gyro", cfg.plant.noise.gyro);
            rn.get("wheel", cfg.plant.noise.wheel);
            rn.finish();
        }
        r.finish();
    }
    if (const auto* p = top.sub("learning")) {
        Reader r(*p, "learning");
        r.get("eps_controller", cfg.learning.eps_controller);
        r.get("eps_model", cfg.learning.eps_model);
        r.get("grad_clip", cfg.learning.grad_clip);
        r.get("ema_decay", cfg.learning.ema_decay);
        r.get("ridge", cfg.learning.ridge);
        r.get("initial_self_coupling", cfg.learning.initial_self_coupling);
        r.get("initial_model_scale", cfg.learning.initial_model_scale);
        r.finish();
    }
    if (const auto* p = top.sub("baseline")) {
        Reader r(*p, "baseline");
        r.get("k_p", cfg.balance.k_p);
        r.get("k_h", cfg.balance.k_h);
        r.finish();
    }
    if (const auto* p = top.sub("nudges")) {
        Reader r(*p, "nudges");
        r.get("period_s", cfg.nudges.period_s);
        r.get("impulse", cfg.nudges.impulse);
        r.finish();
    }
    if (const auto* p = top.sub("report")) {
        Reader r(*p, "report");
        r.get("tipi_window", cfg.report.tipi_window);
        r.get("occupancy_grid", cfg.report.occupancy_grid);
        r.finish();
    }
    top.finish();
    return cfg;
}

namespace {

json toml_node_to_json(const toml::node& node) {
    if (const auto* t = node.as_table()) {
        json obj = json::object();
        for (const auto& [k, v] : *t) obj[std::string(k.str())] = toml_node_to_json(v);
        return obj;
    }
    if (const auto* a = node.as_array()) {
        json arr = json::array();
        for (const auto& v : *a) arr.push_back(toml_node_to_json(v));
        return arr;
    }
    if (const auto* v = node.as_integer()) return v->get();
    if (const auto* v = node.as_floating_point()) return v->get();
    if (const auto* v = node.as_boolean()) return v->get();
    if (const auto* v = node.as_string()) return v->get();
    throw ConfigError("unsupported TOML value (dates and times are not part of the config schema)");
}

}  // namespace

json toml_to_json(const std::string& toml_text) {
    try {
        const toml::table tbl = toml::parse(toml_text);
        return toml_node_to_json(tbl);
    } catch (const toml::parse_error& e) {
        std::ostringstream msg;
        msg << "malformed TOML: " << e.description() << " at " << e.source().begin;
        throw ConfigError(msg.str());
    }
}

SessionConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    const auto ext = path.extension().string();
    json j;
    if (ext == ".toml") {
        j = toml_to_json(buf.str());
    } else {
        try {
            j = json::parse(buf.str());
        } catch (const json::parse_error& e) {
            throw ConfigError("malformed JSON config " + path.string() + ": " + e.what());
        }
    }
    return config_from_json(j);
}

json config_echo(const SessionConfig& cfg) {
    const auto& p = cfg.plant;
    const auto& l = cfg.learning;
    return json{
        {"condition", to_string(cfg.condition)},
        {"seed", cfg.seed},
        {"plant",
         {{"dt", p.dt},
          {"substeps", p.substeps},
          {"max_impulse", p.max_impulse},
          {"table",
           {{"radius", p.table.radius},
            {"wall_restitution", p.table.wall_restitution},
            {"surface_friction", p.table.surface_friction}}},
          {"body",
           {{"sphere_radius", p.body.sphere_radius},
            {"mass", p.body.mass},
            {"track_width", p.body.track_width},
            {"max_wheel_speed", p.body.max_wheel_speed},
            {"actuation_tau", p.body.actuation_tau}}},
          {"noise", {{"accel", p.noise.accel}, {"gyro", p.noise.gyro}, {"wheel", p.noise.wheel}}}}},
        {"learning",
         {{"eps_controller", l.eps_controller},
          {"eps_model", l.eps_model},
          {"grad_clip", l.grad_clip},
          {"ema_decay", l.ema_decay},
          {"ridge", l.ridge},
          {"initial_self_coupling", l.initial_self_coupling},
          {"initial_model_scale", l.initial_model_scale}}},
        {"baseline", {{"k_p", cfg.balance.k_p}, {"k_h", cfg.balance.k_h}}},
        {"nudges", {{"period_s", cfg.nudges.period_s}, {"impulse", cfg.nudges.impulse}}},
        {"report", {{"tipi_window", cfg.report.tipi_window}, {"occupancy_grid", cfg.report.occupancy_grid}}},
    };
}

}  // namespace tipi::harness
