#include "tipi/sim/perturbation.hpp"

#include "tipi/core/errors.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numbers>
#include <string>

namespace tipi::sim {

using nlohmann::json;

namespace {

json vec_json(const Vec2& v) { return json::array({v.x(), v.y()}); }

Vec2 vec_from(const json& j, const char* name) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        throw ConfigError(std::string(name) + " must be a [x, y] pair");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

const char* to_string(PerturbationKind kind) {
    switch (kind) {
        case PerturbationKind::kNudge: return "nudge";
        case PerturbationKind::kBlockOn: return "block_on";
        case PerturbationKind::kBlockOff: return "block_off";
    }
    return "?";
}

PerturbationKind perturbation_kind_from_string(const std::string& s) {
    if (s == "nudge") return PerturbationKind::kNudge;
    if (s == "block_on") return PerturbationKind::kBlockOn;
    if (s == "block_off") return PerturbationKind::kBlockOff;
    throw ConfigError("unknown perturbation kind '" + s + "'");
}

json to_json(const PerturbationEvent& e) {
    json j{{"t", e.t}, {"kind", to_string(e.kind)}};
    if (e.point) j["point"] = vec_json(*e.point);
    switch (e.kind) {
        case PerturbationKind::kNudge: j["impulse"] = vec_json(e.impulse); break;
        case PerturbationKind::kBlockOn:
            j["segment"] = json::array({vec_json(e.segment.a), vec_json(e.segment.b)});
            j["id"] = e.id;
            break;
        case PerturbationKind::kBlockOff: j["id"] = e.id; break;
    }
    return j;
}

PerturbationEvent event_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("perturbation event must be an object");
    if (!j.contains("t") || !j["t"].is_number_integer()) throw ConfigError("perturbation event needs an integer 't'");
    if (!j.contains("kind") || !j["kind"].is_string()) throw ConfigError("perturbation event needs a 'kind'");
    PerturbationEvent e;
    e.t = j["t"].get<std::int64_t>();
    e.kind = perturbation_kind_from_string(j["kind"].get<std::string>());
    if (j.contains("point") && !j["point"].is_null()) e.point = vec_from(j["point"], "point");
    if (j.contains("id")) {
        if (!j["id"].is_number_integer()) throw ConfigError("block id must be an integer");
        e.id = j["id"].get<int>();
    }
    switch (e.kind) {
        case PerturbationKind::kNudge:
            if (!j.contains("impulse")) throw ConfigError("nudge event needs an 'impulse'");
            e.impulse = vec_from(j["impulse"], "impulse");
            break;
        case PerturbationKind::kBlockOn: {
            if (!j.contains("segment") || !j["segment"].is_array() || j["segment"].size() != 2) {
                throw ConfigError("block_on event needs a 'segment' of two points");
            }
            e.segment = {vec_from(j["segment"][0], "segment"), vec_from(j["segment"][1], "segment")};
            break;
        }
        case PerturbationKind::kBlockOff: break;
    }
    return e;
}

void validate_event(const PerturbationEvent& e, const PlantConfig& plant) {
    if (e.t < 0) throw ConfigError("perturbation step index must be >= 0");
    if (e.kind == PerturbationKind::kNudge) {
        if (!e.impulse.allFinite()) throw ConfigError("nudge impulse must be finite");
        if (e.impulse.norm() > plant.max_impulse) {
            throw ConfigError("nudge impulse " + std::to_string(e.impulse.norm()) + " N s exceeds the maximum " +
                              std::to_string(plant.max_impulse));
        }
        if (e.point && !e.point->allFinite()) throw ConfigError("nudge point must be finite");
    }
    if (e.kind == PerturbationKind::kBlockOn) {
        const double r = plant.table.radius;
        if (!e.segment.a.allFinite() || !e.segment.b.allFinite() || e.segment.a.norm() > r ||
            e.segment.b.norm() > r) {
            throw ConfigError("block segment must lie within the table");
        }
    }
}

PerturbationSchedule::PerturbationSchedule(std::vector<PerturbationEvent> events, const PlantConfig& plant)
    : events_(std::move(events)) {
    std::map<int, std::int64_t> open;  // id -> block_on step
    std::vector<int> open_order;
    int next_id = 0;
    for (const auto& e : events_) {
        if (e.id >= next_id) next_id = e.id + 1;
    }
    std::int64_t last_t = 0;
    for (auto& e : events_) {
        validate_event(e, plant);
        if (e.t < last_t) throw ConfigError("perturbation schedule must be sorted by t");
        last_t = e.t;
        if (e.kind == PerturbationKind::kBlockOn) {
            if (e.id < 0) e.id = next_id++;
            if (open.contains(e.id)) throw ConfigError("block " + std::to_string(e.id) + " switched on twice");
            open[e.id] = e.t;
            open_order.push_back(e.id);
        } else if (e.kind == PerturbationKind::kBlockOff) {
            if (e.id < 0) {
                if (open_order.empty()) throw ConfigError("block_off at t=" + std::to_string(e.t) + " with no open block");
                e.id = open_order.back();
            }
            if (!open.contains(e.id)) {
                throw ConfigError("block_off for block " + std::to_string(e.id) + " before its block_on");
            }
            open.erase(e.id);
            open_order.erase(std::remove(open_order.begin(), open_order.end(), e.id), open_order.end());
        }
    }
}

std::vector<PerturbationEvent> PerturbationSchedule::events_at(std::int64_t t) const {
    std::vector<PerturbationEvent> out;
    auto it = std::lower_bound(events_.begin(), events_.end(), t,
                               [](const PerturbationEvent& e, std::int64_t v) { return e.t < v; });
    for (; it != events_.end() && it->t == t; ++it) out.push_back(*it);
    return out;
}

ActivePerturbations PerturbationSchedule::active_at(std::int64_t t) const {
    ActivePerturbations active;
    std::map<int, Segment> blocks;
    for (const auto& e : events_) {
        if (e.t > t) break;
        switch (e.kind) {
            case PerturbationKind::kNudge:
                if (e.t == t) active.nudges.push_back({e.impulse, e.point});
                break;
            case PerturbationKind::kBlockOn: blocks[e.id] = e.segment; break;
            case PerturbationKind::kBlockOff: blocks.erase(e.id); break;
        }
    }
    for (const auto& [id, seg] : blocks) active.blocks.push_back({id, seg});
    return active;
}

PerturbationSchedule schedule_from_json(const json& j, const PlantConfig& plant) {
    if (!j.is_array()) throw ConfigError("perturbation schedule must be a JSON array");
    std::vector<PerturbationEvent> events;
    events.reserve(j.size());
    for (const auto& item : j) events.push_back(event_from_json(item));
    return PerturbationSchedule(std::move(events), plant);
}

PerturbationSchedule load_schedule(const std::filesystem::path& path, const PlantConfig& plant) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open perturbation schedule " + path.string());
    try {
        return schedule_from_json(json::parse(in), plant);
    } catch (const json::parse_error& e) {
        throw ConfigError("malformed perturbation schedule " + path.string() + ": " + e.what());
    }
}

json schedule_to_json(const PerturbationSchedule& schedule) {
    json out = json::array();
    for (const auto& e : schedule.events()) out.push_back(to_json(e));
    return out;
}

PerturbationSchedule default_nudge_schedule(std::uint64_t seed, std::int64_t duration_steps,
                                            std::int64_t period_steps, double magnitude, const PlantConfig& plant) {
    if (period_steps < 1) throw ConfigError("nudge period must be >= 1 step");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
    std::vector<PerturbationEvent> events;
    for (std::int64_t t = period_steps; t < duration_steps; t += period_steps) {
        const double a = angle(rng);
        PerturbationEvent e;
        e.t = t;
        e.kind = PerturbationKind::kNudge;
        e.impulse = magnitude * Vec2(std::cos(a), std::sin(a));
        events.push_back(e);
    }
    return PerturbationSchedule(std::move(events), plant);
}

}  // namespace tipi::sim
