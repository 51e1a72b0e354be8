#include "tipi/core/errors.hpp"
#include "tipi/harness/report.hpp"
#include "tipi/harness/session.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <sys/wait.h>

using namespace tipi;
using namespace tipi::harness;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = TIPI_SOURCE_DIR;
const fs::path kFrozen = kSource / "data" / "frozen_rea.json";

fs::path scratch_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("tipi_test_" + name + "_" + std::to_string(std::random_device{}()));
    fs::create_directories(dir);
    return dir;
}

SessionConfig small_config(Condition c, std::uint64_t seed, std::int64_t steps = 400) {
    SessionConfig cfg;
    cfg.condition = c;
    cfg.seed = seed;
    cfg.duration_steps = steps;
    cfg.frozen_params = kFrozen;
    cfg.nudges.period_s = 5.0;
    cfg.report.tipi_window = 100;
    return cfg;
}

std::string run_to_string(const SessionConfig& cfg) {
    std::ostringstream out;
    run_session(cfg, &out);
    return out.str();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(TIPI_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, TomlAndJsonDescribeTheSameSession) {
    const std::string toml = R"(
seed = 5
duration_steps = 1200
condition = "balanced-REA"
[plant]
dt = 0.05
[plant.table]
radius = 1.2
[learning]
eps_controller = 0.2
[report]
tipi_window = 500
)";
    const nlohmann::json json = {{"seed", 5},
                                 {"duration_steps", 1200},
                                 {"condition", "balanced-REA"},
                                 {"plant", {{"dt", 0.05}, {"table", {{"radius", 1.2}}}}},
                                 {"learning", {{"eps_controller", 0.2}}},
                                 {"report", {{"tipi_window", 500}}}};
    const auto a = config_from_json(toml_to_json(toml));
    const auto b = config_from_json(json);
    EXPECT_EQ(config_echo(a), config_echo(b));
    EXPECT_EQ(a.duration_steps, 1200);
    EXPECT_EQ(a.condition, Condition::kRea);
    EXPECT_EQ(a.plant.table.radius, 1.2);
}

TEST(Config, ShippedConfigsLoad) {
    for (const auto& entry : fs::directory_iterator(kSource / "configs")) {
        SCOPED_TRACE(entry.path().string());
        EXPECT_NO_THROW(load_config(entry.path()).validate());
    }
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
    EXPECT_THROW(config_from_json({{"seeed", 1}}), ConfigError);
    EXPECT_THROW(config_from_json({{"plant", {{"dtt", 0.1}}}}), ConfigError);
    EXPECT_THROW(config_from_json({{"seed", "one"}}), ConfigError);
    EXPECT_THROW(config_from_json({{"condition", "chaos"}}), ConfigError);
    EXPECT_THROW(toml_to_json("seed = ["), ConfigError);

    SessionConfig cfg;
    cfg.duration_steps = 0;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = SessionConfig{};
    cfg.learning.ema_decay = 1.5;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = SessionConfig{};
    cfg.plant.dt = -0.05;
    EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Config, EchoParsesBack) {
    auto cfg = small_config(Condition::kRea, 9);
    cfg.plant.body.mass = 0.45;
    const auto back = config_from_json(config_echo(cfg));
    EXPECT_EQ(config_echo(back), config_echo(cfg));
}

TEST(Condition, Names) {
    EXPECT_EQ(condition_from_string("ADA"), Condition::kAda);
    EXPECT_EQ(condition_from_string("balanced-REA"), Condition::kRea);
    EXPECT_EQ(condition_from_string("rea"), Condition::kRea);
    EXPECT_THROW(condition_from_string("reactive"), ConfigError);
}

TEST(RunSession, SameSeedGivesByteIdenticalLogs) {
    for (auto c : {Condition::kAda, Condition::kRea}) {
        const auto a = run_to_string(small_config(c, 3));
        EXPECT_EQ(a, run_to_string(small_config(c, 3)));
        EXPECT_NE(a, run_to_string(small_config(c, 4)));
    }
}

TEST(RunSession, ReaDigestIsConstantAndAdaLearns) {
    const auto frozen = baseline::load_frozen(kFrozen);
    const auto rea = run_session(small_config(Condition::kRea, 2), frozen, {}, nullptr);
    EXPECT_EQ(rea.initial_digest, frozen.digest());
    EXPECT_EQ(rea.final_digest, frozen.digest());

    const auto ada = run_session(small_config(Condition::kAda, 2), std::nullopt, {}, nullptr);
    EXPECT_NE(ada.initial_digest, ada.final_digest);
    EXPECT_EQ(ada.log.size(), 400u);
}

TEST(RunSession, ReaWithoutFrozenParamsIsRefused) {
    auto cfg = small_config(Condition::kRea, 1);
    EXPECT_THROW(run_session(cfg, std::nullopt, {}, nullptr), ConfigError);
    cfg.frozen_params.reset();
    EXPECT_THROW(run_session(cfg, nullptr), ConfigError);
    cfg.frozen_params = kSource / "data" / "does_not_exist.json";
    EXPECT_THROW(run_session(cfg, nullptr), ConfigError);
}

TEST(RunSession, ConditionSwitchHandsOverToTheFrozenNetwork) {
    const auto frozen = baseline::load_frozen(kFrozen);
    auto cfg = small_config(Condition::kAda, 6);
    cfg.schedule = "none";
    std::vector<SessionEvent> timeline{{200, ConditionChange{Condition::kRea}}};
    const auto out = run_session(cfg, frozen, timeline, nullptr);
    EXPECT_EQ(out.log[199].condition, "ada");
    EXPECT_EQ(out.log[200].condition, "rea");
    EXPECT_EQ(out.final_digest, frozen.digest());
}

TEST(Session, RejectsInvalidEventsWithoutSideEffects) {
    Session s(small_config(Condition::kAda, 1), std::nullopt);
    sim::PerturbationEvent big;
    big.impulse = sim::Vec2(1.0, 0.0);
    EXPECT_THROW(s.apply({0, big}), ConfigError);
    sim::PerturbationEvent off;
    off.kind = sim::PerturbationKind::kBlockOff;
    off.id = 3;
    EXPECT_THROW(s.apply({0, off}), ConfigError);
    EXPECT_THROW(s.apply({0, ConditionChange{Condition::kRea}}), ConfigError);
    EXPECT_TRUE(s.blocks().empty());
    EXPECT_EQ(s.condition(), Condition::kAda);
    EXPECT_EQ(s.t(), 0);
}

TEST(Session, BlockIdsAreAssignedAndReleased) {
    Session s(small_config(Condition::kAda, 1), std::nullopt);
    sim::PerturbationEvent on;
    on.kind = sim::PerturbationKind::kBlockOn;
    on.segment = {sim::Vec2(0.2, -0.3), sim::Vec2(0.2, 0.3)};
    const auto first = s.apply({0, on});
    const auto second = s.apply({0, on});
    const int id1 = std::get<sim::PerturbationEvent>(first.what).id;
    const int id2 = std::get<sim::PerturbationEvent>(second.what).id;
    EXPECT_NE(id1, id2);
    EXPECT_EQ(s.blocks().size(), 2u);
    sim::PerturbationEvent off;
    off.kind = sim::PerturbationKind::kBlockOff;
    s.apply({0, off});
    ASSERT_EQ(s.blocks().size(), 1u);
    EXPECT_EQ(s.blocks().begin()->first, id1);
}

TEST(Log, RoundTripsAndReplaysByteIdentically) {
    auto cfg = small_config(Condition::kAda, 12, 600);
    sim::PerturbationEvent on;
    on.kind = sim::PerturbationKind::kBlockOn;
    on.segment = {sim::Vec2(0.2, -0.3), sim::Vec2(0.2, 0.3)};
    sim::PerturbationEvent off;
    off.kind = sim::PerturbationKind::kBlockOff;
    auto timeline = scripted_timeline(cfg);
    timeline.push_back({50, on});
    timeline.push_back({150, ConditionChange{Condition::kRea}});
    timeline.push_back({300, off});
    timeline.push_back({450, ConditionChange{Condition::kAda}});
    std::stable_sort(timeline.begin(), timeline.end(), [](const auto& a, const auto& b) { return a.t < b.t; });

    const auto frozen = baseline::load_frozen(kFrozen);
    std::ostringstream original;
    const auto outcome = run_session(cfg, frozen, timeline, &original);

    std::istringstream in(original.str());
    const auto parsed = read_log(in);
    ASSERT_EQ(parsed.records.size(), outcome.log.size());
    EXPECT_EQ(parsed.records.back().pos, outcome.log.back().pos);
    EXPECT_EQ(parsed.summary.at("steps"), 600);

    const auto plan = replay_plan(parsed);
    EXPECT_EQ(plan.config.duration_steps, 600);
    std::ostringstream replay;
    run_session(plan.config, frozen, plan.timeline, &replay);
    EXPECT_EQ(replay.str(), original.str());
}

TEST(Log, ReaderRejectsMalformedInput) {
    std::istringstream no_header(R"({"type":"step","t":0})");
    EXPECT_THROW(read_log(no_header), ConfigError);
    std::istringstream garbage("not json\n");
    EXPECT_THROW(read_log(garbage), ConfigError);
}

TEST(Log, FileNames) {
    auto cfg = small_config(Condition::kRea, 17);
    EXPECT_EQ(log_file_name(cfg), "rea_seed17.jsonl");
}

TEST(Compare, IdenticalGroupsHaveEqualMedians) {
    const auto cfg = small_config(Condition::kAda, 1);
    std::vector<LogSummary> rows;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        auto c = small_config(Condition::kAda, seed);
        const auto out = run_session(c, std::nullopt, scripted_timeline(c), nullptr);
        auto a = summarize(out.log, c);
        auto b = a;
        b.condition = "twin";
        rows.push_back(a);
        rows.push_back(b);
    }
    const auto report = compare(rows);
    ASSERT_EQ(report.groups.size(), 2u);
    EXPECT_EQ(report.group("ada")->median_tipi, report.group("twin")->median_tipi);
    EXPECT_EQ(report.group("ada")->median_entropy, report.group("twin")->median_entropy);
    EXPECT_EQ(report.group("ada")->count, 3u);
    EXPECT_FALSE(report.small_sample);
    (void)cfg;
}

TEST(Compare, SmallSamplesAreFlagged) {
    auto c = small_config(Condition::kAda, 1);
    const auto out = run_session(c, std::nullopt, scripted_timeline(c), nullptr);
    const auto report = compare({summarize(out.log, c)});
    EXPECT_TRUE(report.small_sample);
    EXPECT_EQ(report.rows.size(), 1u);
}

TEST(Compare, MixedPlantConfigsAreRefused) {
    auto c1 = small_config(Condition::kAda, 1, 200);
    auto c2 = c1;
    c2.plant.table.radius = 1.0;
    const auto a = summarize(run_session(c1, std::nullopt, {}, nullptr).log, c1);
    const auto b = summarize(run_session(c2, std::nullopt, {}, nullptr).log, c2);
    EXPECT_THROW(compare({a, b}), ConfigError);
    EXPECT_THROW(compare({}), ConfigError);
}

TEST(Compare, ShortLogsWarnAndCsvHasHeader) {
    auto c = small_config(Condition::kAda, 1, 50);
    const auto report = compare({summarize(run_session(c, std::nullopt, {}, nullptr).log, c)});
    EXPECT_FALSE(report.warnings.empty());
    std::ostringstream csv;
    write_csv(report, csv);
    EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "condition,seed,steps,mean_tipi,occupancy_entropy,rms_xi");
}

TEST(Compare, DirectoryOfLogs) {
    const auto dir = scratch_dir("compare");
    for (auto c : {Condition::kAda, Condition::kRea}) {
        for (std::uint64_t seed = 1; seed <= 2; ++seed) {
            const auto cfg = small_config(c, seed, 300);
            std::ofstream out(dir / log_file_name(cfg));
            run_session(cfg, &out);
        }
    }
    const auto report = compare_directory(dir);
    EXPECT_EQ(report.rows.size(), 4u);
    EXPECT_EQ(report.groups.size(), 2u);
    EXPECT_TRUE(report.small_sample);
    EXPECT_EQ(report.rows.front().condition, "ada");
    fs::remove_all(dir);
}

TEST(Cli, ExitCodes) {
    const auto dir = scratch_dir("cli");
    EXPECT_EQ(run_cli("--help"), 0);
    EXPECT_EQ(run_cli("frobnicate"), 2);
    EXPECT_EQ(run_cli("run --config " + (dir / "missing.toml").string()), 2);

    {
        std::ofstream bad(dir / "bad.json");
        bad << R"({"duration_steps": 0})";
    }
    EXPECT_EQ(run_cli("run --config " + (dir / "bad.json").string()), 2);

    {
        std::ofstream good(dir / "good.json");
        good << R"({"duration_steps": 120, "frozen_params": ")" << kFrozen.string() << R"("})";
    }
    const auto out = (dir / "logs").string();
    EXPECT_EQ(run_cli("run --config " + (dir / "good.json").string() + " --seed 4 --out " + out), 0);
    EXPECT_EQ(run_cli("run --config " + (dir / "good.json").string() + " --seed 4 --condition balanced-REA --out " + out), 0);
    EXPECT_TRUE(fs::exists(dir / "logs" / "ada_seed4.jsonl"));
    EXPECT_TRUE(fs::exists(dir / "logs" / "rea_seed4.jsonl"));
    EXPECT_EQ(run_cli("run --config " + (dir / "good.json").string() + " --replay " + (dir / "logs" / "ada_seed4.jsonl").string() + " --out " + out), 0);
    std::ifstream a(dir / "logs" / "ada_seed4.jsonl"), b(dir / "logs" / "replay_ada_seed4.jsonl");
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    EXPECT_EQ(sa.str(), sb.str());

    EXPECT_EQ(run_cli("compare --in " + out + " --out " + (dir / "report.csv").string()), 0);
    EXPECT_TRUE(fs::exists(dir / "report.csv"));
    EXPECT_EQ(run_cli("pre-adapt --steps 0 --out " + (dir / "f.json").string()), 2);
    EXPECT_EQ(run_cli("pre-adapt --steps 200 --seed 3 --out " + (dir / "f.json").string()), 0);
    EXPECT_NO_THROW(baseline::load_frozen(dir / "f.json"));
    fs::remove_all(dir);
}
