/**
 * @file sphere_sim.hpp
 * @brief Planar physics of a differential-drive sphere on a walled circular table.
 *
 * The plant is a two-wheel vehicle inside a sphere. Wheel speeds follow the commanded speed
 * through a first-order lag; the sphere's body velocity is dragged toward the drive velocity by
 * Coulomb-limited traction, so external impulses make it slide and spin until traction wins.
 * The enclosing wall and any blocking segments are resolved by projection plus a partial
 * reflection of the normal velocity, which keeps the sphere on the table unconditionally.
 */
#pragma once

#include "tipi/core/types.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

namespace tipi::sim {

using Vec2 = Eigen::Vector2d;

inline constexpr double kGravity = 9.81;

struct RobotBody {
    double sphere_radius = 0.037;  // m
    double mass = 0.2;             // kg
    double track_width = 0.05;     // m
    double max_wheel_speed = 1.0;  // m/s
    double actuation_tau = 0.15;   // s

    /// Yaw moment of inertia, treating the robot as a solid sphere.
    double yaw_inertia() const { return 0.4 * mass * sphere_radius * sphere_radius; }
    void validate() const;
};

struct TableGeometry {
    double radius = 0.455;  // m, 91 cm diameter table
    double wall_restitution = 0.4;
    double surface_friction = 0.5;   // Coulomb traction coefficient

    void validate(const RobotBody& body) const;
};

struct SensorNoise {
    double accel = 0.05;  // m/s^2
    double gyro = 0.02;   // rad/s
    double wheel = 0.01;  // normalized

    void validate() const;
};

struct PlantConfig {
    TableGeometry table;
    RobotBody body;
    SensorNoise noise;
    double dt = 0.05;         // control period, s
    int substeps = 10;        // physics integration steps per control period
    double max_impulse = 0.2; // N s, per nudge

    void validate() const;
    double substep_dt() const { return dt / substeps; }
};

struct RobotState {
    Vec2 pos = Vec2::Zero();       // m, table-centered
    double heading = 0.0;          // rad, wrapped to (-pi, pi]
    Vec2 lin_vel = Vec2::Zero();   // m/s
    double ang_vel = 0.0;          // rad/s
    Vec2 wheel_actual = Vec2::Zero();  // (left, right) m/s

    double kinetic_energy(const RobotBody& body) const;
    bool all_finite() const;
    bool operator==(const RobotState& o) const {
        return pos == o.pos && heading == o.heading && lin_vel == o.lin_vel && ang_vel == o.ang_vel &&
               wheel_actual == o.wheel_actual;
    }
};

struct Segment {
    Vec2 a = Vec2::Zero();
    Vec2 b = Vec2::Zero();
};

struct Nudge {
    Vec2 impulse = Vec2::Zero();  // N s
    std::optional<Vec2> point;    // contact point; none means through the center
};

struct Block {
    int id = 0;
    Segment segment;
};

/// Perturbations acting during one control tick.
struct ActivePerturbations {
    std::vector<Nudge> nudges;
    std::vector<Block> blocks;

    bool empty() const { return nudges.empty() && blocks.empty(); }
};

/// Wrap an angle to (-pi, pi].
double wrap_angle(double a);

/// Instantaneous velocity change of an impulse, including the yaw kick of an off-center contact.
void apply_impulse(RobotState& state, const Nudge& nudge, const RobotBody& body);

/// One integration step of length dt: wheel lag, traction, impulses, position update, then wall,
/// then blocks (in the order given). InvalidInput on a non-finite or out-of-range command.
RobotState step_physics(const RobotState& state, const MotorVector& cmd, double dt,
                        const ActivePerturbations& active, const PlantConfig& plant);

/// Wheel command source evaluated at every physics substep. Open-loop servo control returns a
/// constant; the balancing controller closes the loop on the substep state.
using WheelDriver = std::function<MotorVector(const RobotState&)>;

/// One control period: `substeps` integration steps, nudges applied in the first one only.
RobotState advance(const RobotState& state, const WheelDriver& driver, const ActivePerturbations& active,
                   const PlantConfig& plant);

/// Synthesized sensor vector: body-frame acceleration from the velocity change over dt, yaw rate,
/// normalized wheel speeds, plus Gaussian noise drawn from rng (five draws per call, always).
SensorVector read_sensors(const RobotState& prev, const RobotState& cur, double dt, const SensorNoise& noise,
                          const RobotBody& body, std::mt19937_64& rng);

/// Plant instance owning the state, the previous tick's state and the sensor noise stream.
class SpherePlant {
public:
    SpherePlant(const PlantConfig& cfg, std::uint64_t noise_seed);

    const RobotState& state() const { return state_; }
    const PlantConfig& config() const { return cfg_; }

    SensorVector sense();
    void step(const WheelDriver& driver, const ActivePerturbations& active);
    void step(const MotorVector& cmd, const ActivePerturbations& active);

private:
    PlantConfig cfg_;
    RobotState state_;
    RobotState prev_;
    std::mt19937_64 rng_;
};

}  // namespace tipi::sim
