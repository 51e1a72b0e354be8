#pragma once

#include "tipi/baseline/baseline_controller.hpp"
#include "tipi/controller/tipi_controller.hpp"
#include "tipi/harness/session_config.hpp"
#include "tipi/metrics/metrics.hpp"
#include "tipi/sim/perturbation.hpp"
#include "tipi/sim/sphere_sim.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <variant>
#include <vector>

namespace tipi::harness {

/// The plant or controller state became non-finite; the session cannot continue.
class SessionAborted : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ConditionChange {
    Condition condition = Condition::kAda;
};

/// Anything applied to a running session at a tick boundary.
struct SessionEvent {
    std::int64_t t = 0;
    std::variant<sim::PerturbationEvent, ConditionChange> what;
};

nlohmann::json event_to_json(const SessionEvent& e);
SessionEvent session_event_from_json(const nlohmann::json& j);

/// Timeline of the configured scripted schedule ("default", "none" or a file).
std::vector<SessionEvent> scripted_timeline(const SessionConfig& cfg);

/// One simulated robot under one condition. The only mutator of its state is advance();
/// events are applied between ticks.
class Session {
public:
    Session(SessionConfig cfg, std::optional<baseline::FrozenParams> frozen);

    std::int64_t t() const { return t_; }
    Condition condition() const { return condition_; }
    const SessionConfig& config() const { return cfg_; }
    const sim::RobotState& state() const { return plant_.state(); }
    const std::map<int, sim::Segment>& blocks() const { return blocks_; }
    const std::optional<baseline::FrozenParams>& frozen() const { return frozen_; }
    std::optional<metrics::StepRecord> last_record() const { return last_; }

    /// Apply an event at the current tick boundary. The event's t is overwritten with the current
    /// step. Nudges act during the next advance(). Block ids are assigned here when missing.
    /// ConfigError for invalid events (over-limit impulse, unknown block, rea without frozen
    /// parameters); the session is unchanged in that case.
    SessionEvent apply(SessionEvent e);

    /// Advance one control tick and return its record. SessionAborted on non-finite state.
    metrics::StepRecord advance();

    /// Digest of the parameters currently driving the robot.
    std::string params_digest() const;

private:
    void install_controller(Condition c);

    SessionConfig cfg_;
    std::optional<baseline::FrozenParams> frozen_;
    Condition condition_;
    sim::SpherePlant plant_;
    std::optional<controller::TipiController> ada_;
    std::optional<baseline::ReactiveController> rea_;
    std::vector<sim::Nudge> pending_nudges_;
    std::map<int, sim::Segment> blocks_;
    int next_block_id_ = 0;
    std::int64_t t_ = 0;
    std::optional<metrics::StepRecord> last_;
};

nlohmann::json record_to_json(const metrics::StepRecord& r);
metrics::StepRecord record_from_json(const nlohmann::json& j);

/// JSON Lines session log: header, interleaved event and step records, summary.
class SessionLogWriter {
public:
    explicit SessionLogWriter(std::ostream& out) : out_(out) {}

    void header(const Session& s);
    void event(const SessionEvent& e);
    void step(const metrics::StepRecord& r);
    void abort(std::int64_t t, const std::string& reason);
    void summary(const Session& s, bool aborted, std::int64_t nonfinite_ticks);

private:
    void line(const nlohmann::json& j);
    std::ostream& out_;
};

struct SessionOutcome {
    metrics::TrajectoryLog log;
    std::string initial_digest;
    std::string final_digest;
    std::int64_t nonfinite_ticks = 0;
};

/// Load the frozen parameters named by the config (required for rea). ConfigError if missing.
std::optional<baseline::FrozenParams> load_frozen_for(const SessionConfig& cfg);

/// Run a full session. Events of `timeline` are applied at their stamped step before that tick.
/// When `log_out` is given the JSON Lines log is written there. SessionAborted after writing an
/// abort record if the simulation blows up.
SessionOutcome run_session(const SessionConfig& cfg, const std::optional<baseline::FrozenParams>& frozen,
                           const std::vector<SessionEvent>& timeline, std::ostream* log_out);

/// Convenience overload: loads frozen parameters and the scripted timeline from the config.
SessionOutcome run_session(const SessionConfig& cfg, std::ostream* log_out);

/// Default log file name: <condition>_seed<seed>.jsonl
std::string log_file_name(const SessionConfig& cfg);

struct ParsedLog {
    nlohmann::json header;
    std::vector<SessionEvent> events;
    metrics::TrajectoryLog records;
    nlohmann::json summary;  // null if the log was truncated
};

ParsedLog read_log(std::istream& in);
ParsedLog read_log(const std::filesystem::path& path);

/// Config, frozen parameters digest check, event timeline and duration needed to rerun a logged
/// session (batch or interactive) through run_session.
struct ReplayPlan {
    SessionConfig config;
    std::vector<SessionEvent> timeline;
};
ReplayPlan replay_plan(const ParsedLog& log);

}  // namespace tipi::harness
