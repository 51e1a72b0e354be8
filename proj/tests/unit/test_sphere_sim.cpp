#include "tipi/core/errors.hpp"
#include "tipi/sim/perturbation.hpp"
#include "tipi/sim/sphere_sim.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numbers>

using namespace tipi;
using namespace tipi::sim;

namespace {

PlantConfig quiet_plant() {
    PlantConfig p;
    p.noise = {0.0, 0.0, 0.0};
    return p;
}

RobotState run(const PlantConfig& plant, RobotState s, const MotorVector& cmd, int ticks) {
    for (int i = 0; i < ticks; ++i) s = advance(s, [&](const RobotState&) { return cmd; }, {}, plant);
    return s;
}

}  // namespace

TEST(StepPhysics, SymmetricDriveGoesStraight) {
    const auto plant = quiet_plant();
    const auto s = run(plant, RobotState{}, MotorVector{0.3, 0.3}, 12);
    EXPECT_EQ(s.ang_vel, 0.0);
    EXPECT_EQ(s.heading, 0.0);
    EXPECT_GT(s.pos.x(), 0.1);
    EXPECT_EQ(s.pos.y(), 0.0);
    // Traction is not the limit here, so the body follows the first-order wheel lag exactly.
    const double t = 12 * plant.dt;
    EXPECT_NEAR(s.lin_vel.x(), 0.3 * (1.0 - std::exp(-t / plant.body.actuation_tau)), 1e-12);
}

TEST(StepPhysics, AntisymmetricDriveSpinsInPlace) {
    const auto plant = quiet_plant();
    const auto s = run(plant, RobotState{}, MotorVector{0.4, -0.4}, 40);
    EXPECT_LT(s.lin_vel.norm(), 1e-9);
    EXPECT_LT(s.pos.norm(), 1e-9);
    EXPECT_LT(s.ang_vel, -1.0);
}

TEST(StepPhysics, NudgeImpulseLaw) {
    const auto plant = quiet_plant();
    ActivePerturbations active;
    active.nudges.push_back({Vec2(0.03, -0.02), std::nullopt});
    const auto s = step_physics(RobotState{}, MotorVector{0.0, 0.0}, plant.substep_dt(), active, plant);
    const Vec2 expected = Vec2(0.03, -0.02) / plant.body.mass;
    EXPECT_LT((s.lin_vel - expected).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(s.ang_vel, 0.0);
}

TEST(StepPhysics, OffCenterNudgeAddsYaw) {
    const auto plant = quiet_plant();
    ActivePerturbations active;
    active.nudges.push_back({Vec2(0.0, 0.01), Vec2(plant.body.sphere_radius, 0.0)});
    const auto s = step_physics(RobotState{}, MotorVector{0.0, 0.0}, plant.substep_dt(), active, plant);
    const double expected = plant.body.sphere_radius * 0.01 / plant.body.yaw_inertia();
    EXPECT_NEAR(s.ang_vel, expected, 1e-12);
}

TEST(StepPhysics, RejectsBadCommands) {
    const auto plant = quiet_plant();
    EXPECT_THROW(MotorVector({std::nan(""), 0.0}), InvalidInput);
    EXPECT_THROW(MotorVector({1.5, 0.0}), InvalidInput);
    EXPECT_THROW(step_physics(RobotState{}, MotorVector{0.0, 0.0}, 0.0, {}, plant), InvalidInput);
}

TEST(StepPhysics, ZeroStateIsAFixedPoint) {
    const auto plant = quiet_plant();
    const auto s = run(plant, RobotState{}, MotorVector{0.0, 0.0}, 1000);
    EXPECT_TRUE(s == RobotState{});
}

TEST(StepPhysics, EnergyNonIncreasingWithoutDrive) {
    const auto plant = quiet_plant();
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        RobotState s;
        s.pos = Vec2(0.3 * u(rng), 0.3 * u(rng));
        s.heading = 3.0 * u(rng);
        if (trial % 2 == 0) {
            // Sliding and spinning with the wheels at rest.
            s.lin_vel = Vec2(u(rng), u(rng));
            s.ang_vel = 20.0 * u(rng);
        } else {
            // Steady drive: body velocity consistent with the wheel speeds.
            s.wheel_actual = Vec2(0.5 * u(rng), 0.5 * u(rng));
            s.wheel_actual.y() = s.wheel_actual.x();
            s.lin_vel = s.wheel_actual.x() * Vec2(std::cos(s.heading), std::sin(s.heading));
        }
        double energy = s.kinetic_energy(plant.body);
        for (int k = 0; k < 2000; ++k) {
            s = step_physics(s, MotorVector{0.0, 0.0}, plant.substep_dt(), {}, plant);
            const double e = s.kinetic_energy(plant.body);
            ASSERT_LE(e, energy * (1.0 + 1e-12) + 1e-300) << "trial " << trial << " substep " << k;
            energy = e;
        }
    }
}

TEST(StepPhysics, ContainmentUnderRandomCommandsAndPerturbations) {
    auto plant = quiet_plant();
    plant.noise = SensorNoise{};
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double limit = plant.table.radius - plant.body.sphere_radius;
    RobotState s;
    ActivePerturbations blocks;
    blocks.blocks.push_back({0, {Vec2(-0.2, 0.1), Vec2(0.2, 0.1)}});
    blocks.blocks.push_back({1, {Vec2(0.1, -0.3), Vec2(0.1, 0.0)}});
    for (int t = 0; t < 20000; ++t) {
        ActivePerturbations active = (t / 500) % 2 == 0 ? blocks : ActivePerturbations{};
        if (t % 37 == 0) {
            Vec2 j(u(rng), u(rng));
            j *= plant.max_impulse / std::max(j.norm(), 1.0);
            active.nudges.push_back({j, Vec2(s.pos + 0.05 * Vec2(u(rng), u(rng)))});
        }
        const MotorVector cmd{u(rng), u(rng)};
        s = advance(s, [&](const RobotState&) { return cmd; }, active, plant);
        ASSERT_LE(s.pos.norm(), limit + 1e-12) << "tick " << t;
        ASSERT_TRUE(s.all_finite());
    }
}

TEST(StepPhysics, BlockStopsTheRobot) {
    const auto plant = quiet_plant();
    ActivePerturbations active;
    active.blocks.push_back({0, {Vec2(0.15, -0.2), Vec2(0.15, 0.2)}});
    RobotState s;
    for (int t = 0; t < 200; ++t) s = advance(s, [](const RobotState&) { return MotorVector{0.5, 0.5}; }, active, plant);
    EXPECT_LE(s.pos.x(), 0.15 - plant.body.sphere_radius + 1e-9);
}

TEST(StepPhysics, Deterministic) {
    auto plant = PlantConfig{};
    auto go = [&] {
        SpherePlant sp(plant, 99);
        std::vector<double> trace;
        std::mt19937_64 rng(1);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (int t = 0; t < 2000; ++t) {
            const auto s = sp.sense();
            trace.insert(trace.end(), s.values().data(), s.values().data() + s.size());
            sp.step(MotorVector{u(rng), u(rng)}, {});
            trace.push_back(sp.state().pos.x());
            trace.push_back(sp.state().pos.y());
        }
        return trace;
    };
    EXPECT_EQ(go(), go());
}

TEST(ReadSensors, StationaryNoiselessIsZero) {
    std::mt19937_64 rng(1);
    const auto s = read_sensors(RobotState{}, RobotState{}, 0.05, {0, 0, 0}, RobotBody{}, rng);
    EXPECT_EQ(s.values().cwiseAbs().maxCoeff(), 0.0);
}

TEST(ReadSensors, SteadyTurnMatchesFiniteDifferenceOracle) {
    const auto plant = quiet_plant();
    auto s = run(plant, RobotState{}, MotorVector{0.3, 0.4}, 200);
    const auto prev = s;
    s = run(plant, s, MotorVector{0.3, 0.4}, 1);
    std::mt19937_64 rng(1);
    const auto reading = read_sensors(prev, s, plant.dt, {0, 0, 0}, plant.body, rng);

    const double omega = (0.4 - 0.3) * plant.body.max_wheel_speed / plant.body.track_width;
    EXPECT_NEAR(reading[channel::kGyroYaw], omega, 1e-9);
    EXPECT_EQ(reading[channel::kGyroYaw], s.ang_vel);

    // Ground truth: difference the velocity and rotate into the current heading frame by hand.
    const double ax = (s.lin_vel.x() - prev.lin_vel.x()) / plant.dt;
    const double ay = (s.lin_vel.y() - prev.lin_vel.y()) / plant.dt;
    const double c = std::cos(s.heading), sn = std::sin(s.heading);
    EXPECT_NEAR(reading[channel::kAccelForward], c * ax + sn * ay, 1e-12);
    EXPECT_NEAR(reading[channel::kAccelLateral], -sn * ax + c * ay, 1e-12);

    // ... and the centripetal closed form of a steady turn sampled at dt.
    const double v = 0.35 * plant.body.max_wheel_speed;
    const double wdt = omega * plant.dt;
    EXPECT_NEAR(reading[channel::kAccelForward], v * (1.0 - std::cos(wdt)) / plant.dt, 1e-6);
    EXPECT_NEAR(reading[channel::kAccelLateral], v * std::sin(wdt) / plant.dt, 1e-6);
    EXPECT_NEAR(reading[channel::kWheelLeft], 0.3, 1e-9);
    EXPECT_NEAR(reading[channel::kWheelRight], 0.4, 1e-9);
}

TEST(ReadSensors, NoiselessReadingsAreRepeatable) {
    const auto plant = quiet_plant();
    const auto a = run(plant, RobotState{}, MotorVector{0.2, 0.9}, 10);
    const auto b = run(plant, a, MotorVector{0.2, 0.9}, 1);
    std::mt19937_64 r1(5), r2(6);
    EXPECT_TRUE(read_sensors(a, b, plant.dt, {0, 0, 0}, plant.body, r1) ==
                read_sensors(a, b, plant.dt, {0, 0, 0}, plant.body, r2));
}

TEST(ReadSensors, NoiseHasTheConfiguredSpread) {
    std::mt19937_64 rng(8);
    const SensorNoise noise{0.05, 0.02, 0.01};
    std::vector<double> sq(5, 0.0);
    const int draws = 20000;
    for (int i = 0; i < draws; ++i) {
        const auto s = read_sensors(RobotState{}, RobotState{}, 0.05, noise, RobotBody{}, rng);
        for (int k = 0; k < 5; ++k) sq[k] += s[k] * s[k];
    }
    const double sigma[5] = {0.05, 0.05, 0.02, 0.01, 0.01};
    for (int k = 0; k < 5; ++k) EXPECT_NEAR(std::sqrt(sq[k] / draws), sigma[k], 0.05 * sigma[k]);
}

TEST(WrapAngle, HalfOpenInterval) {
    EXPECT_DOUBLE_EQ(wrap_angle(std::numbers::pi), std::numbers::pi);
    EXPECT_DOUBLE_EQ(wrap_angle(-std::numbers::pi), std::numbers::pi);
    EXPECT_NEAR(wrap_angle(3.0 * std::numbers::pi / 2.0), -std::numbers::pi / 2.0, 1e-15);
    EXPECT_NEAR(wrap_angle(7.0), 7.0 - 2.0 * std::numbers::pi, 1e-15);
}

TEST(Schedule, EmptyScheduleIsEmpty) {
    const PerturbationSchedule sched({}, PlantConfig{});
    EXPECT_TRUE(sched.active_at(0).empty());
    EXPECT_TRUE(apply_perturbation_schedule(sched, 1234).empty());
}

TEST(Schedule, NudgesFireExactlyOnTheirStep) {
    PerturbationEvent e;
    e.t = 100;
    e.impulse = Vec2(0.01, 0.0);
    const PerturbationSchedule sched({e}, PlantConfig{});
    EXPECT_TRUE(sched.active_at(99).empty());
    EXPECT_EQ(sched.active_at(100).nudges.size(), 1u);
    EXPECT_TRUE(sched.active_at(101).empty());
}

TEST(Schedule, BlocksAreActiveOnHalfOpenInterval) {
    PerturbationEvent on, off;
    on.t = 10;
    on.kind = PerturbationKind::kBlockOn;
    on.segment = {Vec2(0.0, 0.0), Vec2(0.1, 0.1)};
    off.t = 20;
    off.kind = PerturbationKind::kBlockOff;
    const PerturbationSchedule sched({on, off}, PlantConfig{});
    EXPECT_TRUE(sched.active_at(9).blocks.empty());
    EXPECT_EQ(sched.active_at(10).blocks.size(), 1u);
    EXPECT_EQ(sched.active_at(15).blocks.size(), 1u);
    EXPECT_TRUE(sched.active_at(20).blocks.empty());
}

TEST(Schedule, MalformedSchedulesAreConfigErrors) {
    PerturbationEvent on, off;
    on.kind = PerturbationKind::kBlockOn;
    on.t = 20;
    on.segment = {Vec2(0.0, 0.0), Vec2(0.1, 0.0)};
    off.kind = PerturbationKind::kBlockOff;
    off.t = 10;
    EXPECT_THROW(PerturbationSchedule({off, on}, PlantConfig{}), ConfigError);  // off before on

    PerturbationEvent late, early;
    late.t = 5;
    early.t = 3;
    EXPECT_THROW(PerturbationSchedule({late, early}, PlantConfig{}), ConfigError);  // unsorted

    PerturbationEvent strong;
    strong.impulse = Vec2(1.0, 0.0);
    EXPECT_THROW(PerturbationSchedule({strong}, PlantConfig{}), ConfigError);

    PerturbationEvent outside;
    outside.kind = PerturbationKind::kBlockOn;
    outside.segment = {Vec2(0.0, 0.0), Vec2(0.6, 0.0)};
    EXPECT_THROW(PerturbationSchedule({outside}, PlantConfig{}), ConfigError);
}

TEST(Schedule, JsonRoundTrip) {
    const auto text = R"([
        {"t": 5, "kind": "nudge", "impulse": [0.01, 0.02]},
        {"t": 6, "kind": "nudge", "point": [0.1, 0.0], "impulse": [0.0, -0.03]},
        {"t": 10, "kind": "block_on", "segment": [[-0.1, 0.2], [0.1, 0.2]]},
        {"t": 30, "kind": "block_off"}
    ])";
    const auto sched = schedule_from_json(nlohmann::json::parse(text), PlantConfig{});
    ASSERT_EQ(sched.events().size(), 4u);
    EXPECT_TRUE(sched.events()[1].point.has_value());
    EXPECT_EQ(sched.events()[2].id, sched.events()[3].id);
    const auto again = schedule_from_json(schedule_to_json(sched), PlantConfig{});
    EXPECT_EQ(schedule_to_json(again), schedule_to_json(sched));
    EXPECT_THROW(schedule_from_json(nlohmann::json::parse(R"([{"t": 1, "kind": "wiggle"}])"), PlantConfig{}),
                 ConfigError);
}

TEST(Schedule, DefaultScheduleIsSeededAndPeriodic) {
    const PlantConfig plant;
    const auto a = default_nudge_schedule(3, 10000, 200, 0.05, plant);
    const auto b = default_nudge_schedule(3, 10000, 200, 0.05, plant);
    const auto c = default_nudge_schedule(4, 10000, 200, 0.05, plant);
    EXPECT_EQ(schedule_to_json(a), schedule_to_json(b));
    EXPECT_NE(schedule_to_json(a), schedule_to_json(c));
    ASSERT_EQ(a.events().size(), 49u);
    for (std::size_t i = 0; i < a.events().size(); ++i) {
        EXPECT_EQ(a.events()[i].t, static_cast<std::int64_t>(200 * (i + 1)));
        EXPECT_NEAR(a.events()[i].impulse.norm(), 0.05, 1e-15);
    }
}
