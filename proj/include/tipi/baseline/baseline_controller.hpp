#pragma once

#include "tipi/controller/snapshot.hpp"
#include "tipi/controller/tipi_controller.hpp"
#include "tipi/sim/sphere_sim.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>

namespace tipi::baseline {

struct Provenance {
    std::uint64_t seed = 0;
    std::int64_t steps = 0;
    std::string digest;  // sha256 of the canonical parameter text, hex
};

/// SHA-256 (hex) of controller::canonical_params_text(params).
std::string params_digest(const controller::NetworkParams& params);

/// Immutable pre-adapted network. There is no mutating accessor.
class FrozenParams {
public:
    /// Freeze a snapshot; the digest is computed here.
    FrozenParams(controller::ParamSnapshot snapshot, std::uint64_t seed, std::int64_t steps);

    const controller::NetworkParams& params() const { return snapshot_.params; }
    const controller::TipiConfig& config() const { return snapshot_.config; }
    const controller::ParamSnapshot& snapshot() const { return snapshot_; }
    const Provenance& provenance() const { return provenance_; }
    const std::string& digest() const { return provenance_.digest; }

    /// Recompute the digest from the held parameters.
    bool verify() const { return params_digest(snapshot_.params) == provenance_.digest; }

private:
    controller::ParamSnapshot snapshot_;
    Provenance provenance_;
};

/// Snapshot schema plus {provenance: {seed, steps, digest}}.
nlohmann::json frozen_to_json(const FrozenParams& fp);
/// ConfigError on malformed files or a digest that does not match the content.
FrozenParams frozen_from_json(const nlohmann::json& j);
FrozenParams load_frozen(const std::filesystem::path& path);
void save_frozen(const FrozenParams& fp, const std::filesystem::path& path);

/// Run the adaptive controller on an empty table in direct-servo mode for `steps` ticks and
/// freeze the result. Deterministic in (plant, cfg, seed, steps).
FrozenParams pre_adapt(const sim::PlantConfig& plant, controller::TipiConfig cfg, std::uint64_t seed,
                       std::int64_t steps);

/// Input of the balancing controller: normalized speed and an absolute heading.
struct BalanceCommand {
    double speed = 0.0;    // [0, 1]
    double heading = 0.0;  // rad, (-pi, pi]
};

struct BalanceGains {
    double k_p = 2.0;  // normalized wheel differential per rad of heading error
    double k_h = 0.2;  // rad of heading change per tick at full network output
};

/// speed = (y1 + 1) / 2, heading = wrap(held_heading + k_h * y2).
BalanceCommand reactive_act(const SensorVector& s, const FrozenParams& fp, double held_heading, double k_h);

/// Heading-hold: common mode from speed, differential k_p * wrap(heading_cmd - heading), clamped.
MotorVector balance_to_wheels(const BalanceCommand& cmd, const sim::RobotState& state, const BalanceGains& gains);

struct ReactiveStep {
    MotorVector network_output;
    BalanceCommand command;
    controller::StepDiagnostics diag;
};

/// Frozen network driving the balancing controller. Keeps the integrated heading and a diagnostic
/// loop window (forecasts with the frozen parameters); never learns.
class ReactiveController {
public:
    ReactiveController(FrozenParams frozen, BalanceGains gains);

    ReactiveStep step(const SensorVector& s);

    /// Wheel command for the plant state, evaluated by the balancing loop at every substep.
    MotorVector wheels(const sim::RobotState& state) const { return balance_to_wheels(command_, state, gains_); }

    const FrozenParams& frozen() const { return frozen_; }
    const BalanceCommand& command() const { return command_; }
    const BalanceGains& gains() const { return gains_; }

private:
    const FrozenParams frozen_;
    BalanceGains gains_;
    BalanceCommand command_;
    controller::LoopWindow window_;
    controller::CovarianceEstimator estimator_;
};

}  // namespace tipi::baseline
