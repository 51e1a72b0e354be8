#pragma once

#include "tipi/baseline/baseline_controller.hpp"
#include "tipi/controller/tipi_controller.hpp"
#include "tipi/sim/sphere_sim.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace tipi::harness {

enum class Condition { kAda, kRea };

/// "ada" / "rea".
const char* to_string(Condition c);
/// Accepts "ada", "ADA", "rea", "balanced-REA" (case-insensitive). ConfigError otherwise.
Condition condition_from_string(const std::string& s);

struct LearningSettings {
    double eps_controller = 0.1;
    double eps_model = 0.05;
    double grad_clip = 1.0;
    double ema_decay = 0.9;
    double ridge = 1e-4;
    double initial_self_coupling = 0.8;
    double initial_model_scale = 0.1;
};

struct NudgeSettings {
    double period_s = 10.0;
    double impulse = 0.05;  // N s
};

struct ReportSettings {
    std::size_t tipi_window = 2000;
    int occupancy_grid = 20;
};

struct SessionConfig {
    Condition condition = Condition::kAda;
    std::int64_t duration_steps = 6000;  // 5 min at 20 Hz
    std::uint64_t seed = 0;
    sim::PlantConfig plant;
    LearningSettings learning;
    baseline::BalanceGains balance;
    NudgeSettings nudges;
    ReportSettings report;
    /// Frozen network for the balanced-REA condition.
    std::optional<std::filesystem::path> frozen_params;
    /// "default" (seeded wand stand-in), "none", or a path to a JSON event array.
    std::string schedule = "default";
    std::optional<std::filesystem::path> output;

    /// ConfigError on any invalid field.
    void validate() const;
    controller::TipiConfig tipi_config() const;
};

/// Parse the shared JSON/TOML schema. Unknown keys are rejected.
SessionConfig config_from_json(const nlohmann::json& j);
/// Load a .json or .toml config file.
SessionConfig load_config(const std::filesystem::path& path);
/// Convert a TOML document to the equivalent JSON value.
nlohmann::json toml_to_json(const std::string& toml_text);

/// Echo of every field that influences the dynamics (no paths, no duration, no schedule source;
/// applied events are logged individually). Parses back with config_from_json.
nlohmann::json config_echo(const SessionConfig& cfg);

}  // namespace tipi::harness
