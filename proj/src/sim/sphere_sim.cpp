#include "tipi/sim/sphere_sim.hpp"

#include "tipi/core/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace tipi::sim {

namespace {

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

Vec2 limit_norm(const Vec2& v, double limit) {
    const double n = v.norm();
    return n > limit ? Vec2(v * (limit / n)) : v;
}

void resolve_wall(RobotState& s, const PlantConfig& plant) {
    const double limit = plant.table.radius - plant.body.sphere_radius;
    const double r = s.pos.norm();
    if (r <= limit) return;
    const Vec2 normal = s.pos / r;
    s.pos = normal * limit;
    const double vn = s.lin_vel.dot(normal);
    if (vn > 0.0) s.lin_vel -= (1.0 + plant.table.wall_restitution) * vn * normal;
}

void resolve_block(RobotState& s, const Segment& seg, const PlantConfig& plant) {
    const double radius = plant.body.sphere_radius;
    const Vec2 ab = seg.b - seg.a;
    const double len2 = ab.squaredNorm();
    const double u = len2 > 0.0 ? std::clamp((s.pos - seg.a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    const Vec2 closest = seg.a + u * ab;
    const Vec2 d = s.pos - closest;
    const double dist = d.norm();
    if (dist >= radius) return;

    Vec2 normal;
    if (dist > 1e-12) {
        normal = d / dist;
    } else if (len2 > 0.0) {
        normal = Vec2(-ab.y(), ab.x()) / std::sqrt(len2);
    } else {
        normal = Vec2(1.0, 0.0);
    }
    s.pos = closest + normal * radius;
    const double vn = s.lin_vel.dot(normal);
    if (vn < 0.0) s.lin_vel -= (1.0 + plant.table.wall_restitution) * vn * normal;
}

void project_inside(RobotState& s, const PlantConfig& plant) {
    const double limit = plant.table.radius - plant.body.sphere_radius;
    const double r = s.pos.norm();
    if (r > limit) s.pos *= limit / r;
}

void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(name) + " must be positive and finite");
}

}  // namespace

void RobotBody::validate() const {
    require_positive(sphere_radius, "sphere_radius");
    require_positive(mass, "mass");
    require_positive(track_width, "track_width");
    require_positive(max_wheel_speed, "max_wheel_speed");
    require_positive(actuation_tau, "actuation_tau");
    if (track_width >= 2.0 * sphere_radius) throw ConfigError("track_width must be smaller than the sphere diameter");
}

void TableGeometry::validate(const RobotBody& body) const {
    require_positive(radius, "table radius");
    if (radius <= body.sphere_radius) throw ConfigError("table radius must exceed the sphere radius");
    if (!(wall_restitution >= 0.0 && wall_restitution <= 1.0)) throw ConfigError("wall_restitution must lie in [0, 1]");
    if (!(surface_friction >= 0.0) || !std::isfinite(surface_friction)) {
        throw ConfigError("surface_friction must be >= 0");
    }
}

void SensorNoise::validate() const {
    if (!(accel >= 0.0 && gyro >= 0.0 && wheel >= 0.0) || !std::isfinite(accel + gyro + wheel)) {
        throw ConfigError("sensor noise levels must be finite and >= 0");
    }
}

void PlantConfig::validate() const {
    body.validate();
    table.validate(body);
    noise.validate();
    require_positive(dt, "dt");
    if (substeps < 1) throw ConfigError("substeps must be >= 1");
    require_positive(max_impulse, "max_impulse");
}

double RobotState::kinetic_energy(const RobotBody& body) const {
    return 0.5 * body.mass * lin_vel.squaredNorm() + 0.5 * body.yaw_inertia() * ang_vel * ang_vel;
}

bool RobotState::all_finite() const {
    return pos.allFinite() && std::isfinite(heading) && lin_vel.allFinite() && std::isfinite(ang_vel) &&
           wheel_actual.allFinite();
}

double wrap_angle(double a) {
    constexpr double kPi = std::numbers::pi;
    if (a > -kPi && a <= kPi) return a;
    double w = std::remainder(a, 2.0 * kPi);
    if (w <= -kPi) w += 2.0 * kPi;
    return w;
}

void apply_impulse(RobotState& state, const Nudge& nudge, const RobotBody& body) {
    state.lin_vel += nudge.impulse / body.mass;
    if (nudge.point) {
        const Vec2 lever = limit_norm(*nudge.point - state.pos, body.sphere_radius);
        state.ang_vel += cross(lever, nudge.impulse) / body.yaw_inertia();
    }
}

RobotState step_physics(const RobotState& state, const MotorVector& cmd, double dt,
                        const ActivePerturbations& active, const PlantConfig& plant) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidInput("step_physics: dt must be positive");
    if (cmd.size() != motor::kCount) throw InvalidInput("step_physics: expected a two-wheel command");

    const auto& body = plant.body;
    const double traction = plant.table.surface_friction * kGravity * dt;
    RobotState s = state;

    const double lag = 1.0 - std::exp(-dt / body.actuation_tau);
    const Vec2 target(cmd.left() * body.max_wheel_speed, cmd.right() * body.max_wheel_speed);
    s.wheel_actual += lag * (target - s.wheel_actual);

    const double drive_rate = (s.wheel_actual.y() - s.wheel_actual.x()) / body.track_width;
    const double spin_limit = traction / (0.5 * body.track_width);
    s.ang_vel += std::clamp(drive_rate - s.ang_vel, -spin_limit, spin_limit);
    s.heading = wrap_angle(s.heading + s.ang_vel * dt);

    const double drive_speed = 0.5 * (s.wheel_actual.x() + s.wheel_actual.y());
    const Vec2 drive_vel = drive_speed * Vec2(std::cos(s.heading), std::sin(s.heading));
    s.lin_vel += limit_norm(drive_vel - s.lin_vel, traction);

    for (const auto& nudge : active.nudges) apply_impulse(s, nudge, body);

    s.pos += s.lin_vel * dt;

    resolve_wall(s, plant);
    for (const auto& block : active.blocks) resolve_block(s, block.segment, plant);
    project_inside(s, plant);
    return s;
}

RobotState advance(const RobotState& state, const WheelDriver& driver, const ActivePerturbations& active,
                   const PlantConfig& plant) {
    const double h = plant.substep_dt();
    RobotState s = state;
    ActivePerturbations first = active;
    ActivePerturbations rest{{}, active.blocks};
    for (int k = 0; k < plant.substeps; ++k) {
        s = step_physics(s, driver(s), h, k == 0 ? first : rest, plant);
    }
    return s;
}

SensorVector read_sensors(const RobotState& prev, const RobotState& cur, double dt, const SensorNoise& noise,
                          const RobotBody& body, std::mt19937_64& rng) {
    if (!(dt > 0.0)) throw InvalidInput("read_sensors: dt must be positive");
    const Vec2 accel = (cur.lin_vel - prev.lin_vel) / dt;
    const Vec2 forward(std::cos(cur.heading), std::sin(cur.heading));
    const Vec2 left(-forward.y(), forward.x());

    Vector s(channel::kCount);
    s[channel::kAccelForward] = accel.dot(forward);
    s[channel::kAccelLateral] = accel.dot(left);
    s[channel::kGyroYaw] = cur.ang_vel;
    s[channel::kWheelLeft] = cur.wheel_actual.x() / body.max_wheel_speed;
    s[channel::kWheelRight] = cur.wheel_actual.y() / body.max_wheel_speed;

    std::normal_distribution<double> unit(0.0, 1.0);
    const double sigma[channel::kCount] = {noise.accel, noise.accel, noise.gyro, noise.wheel, noise.wheel};
    for (Eigen::Index i = 0; i < channel::kCount; ++i) s[i] += sigma[i] * unit(rng);
    return SensorVector(std::move(s));
}

SpherePlant::SpherePlant(const PlantConfig& cfg, std::uint64_t noise_seed) : cfg_(cfg), rng_(noise_seed) {
    cfg_.validate();
}

SensorVector SpherePlant::sense() {
    return read_sensors(prev_, state_, cfg_.dt, cfg_.noise, cfg_.body, rng_);
}

void SpherePlant::step(const WheelDriver& driver, const ActivePerturbations& active) {
    prev_ = state_;
    state_ = advance(state_, driver, active, cfg_);
}

void SpherePlant::step(const MotorVector& cmd, const ActivePerturbations& active) {
    step([&cmd](const RobotState&) { return cmd; }, active);
}

}  // namespace tipi::sim
