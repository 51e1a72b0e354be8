#pragma once

#include "tipi/sim/sphere_sim.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <vector>

namespace tipi::sim {

enum class PerturbationKind { kNudge, kBlockOn, kBlockOff };

const char* to_string(PerturbationKind kind);
PerturbationKind perturbation_kind_from_string(const std::string& s);

/// A step-stamped nudge or obstacle change.
///
/// JSON record: {t, kind: "nudge"|"block_on"|"block_off", point?: [x, y], impulse?: [jx, jy],
/// segment?: [[x1, y1], [x2, y2]], id?}. Nudges without a point act through the center. Blocks are
/// identified by id; a block_on without one gets the next free id, a block_off without one closes
/// the most recently opened block.
struct PerturbationEvent {
    std::int64_t t = 0;
    PerturbationKind kind = PerturbationKind::kNudge;
    std::optional<Vec2> point;
    Vec2 impulse = Vec2::Zero();
    Segment segment;
    int id = -1;
};

nlohmann::json to_json(const PerturbationEvent& e);
PerturbationEvent event_from_json(const nlohmann::json& j);

/// Validated, time-sorted list of events with resolved block ids.
class PerturbationSchedule {
public:
    PerturbationSchedule() = default;
    /// ConfigError when events are unsorted, a block_off precedes its block_on or names an unknown
    /// block, or an impulse/segment violates the plant limits.
    PerturbationSchedule(std::vector<PerturbationEvent> events, const PlantConfig& plant);

    const std::vector<PerturbationEvent>& events() const { return events_; }
    bool empty() const { return events_.empty(); }

    /// Events stamped exactly t, in file order.
    std::vector<PerturbationEvent> events_at(std::int64_t t) const;

    /// Nudges firing exactly at t and blocks active on [block_on, block_off).
    ActivePerturbations active_at(std::int64_t t) const;

private:
    std::vector<PerturbationEvent> events_;
};

inline ActivePerturbations apply_perturbation_schedule(const PerturbationSchedule& schedule, std::int64_t t) {
    return schedule.active_at(t);
}

/// Validate a single event against the plant limits (impulse magnitude, segment inside table).
void validate_event(const PerturbationEvent& e, const PlantConfig& plant);

PerturbationSchedule schedule_from_json(const nlohmann::json& j, const PlantConfig& plant);
PerturbationSchedule load_schedule(const std::filesystem::path& path, const PlantConfig& plant);
nlohmann::json schedule_to_json(const PerturbationSchedule& schedule);

/// Wand stand-in: one center nudge every period_steps ticks (first at period_steps), direction
/// uniform from the seeded stream, fixed magnitude.
PerturbationSchedule default_nudge_schedule(std::uint64_t seed, std::int64_t duration_steps,
                                            std::int64_t period_steps, double magnitude, const PlantConfig& plant);

}  // namespace tipi::sim
