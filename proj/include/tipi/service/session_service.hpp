#pragma once

#include "tipi/harness/session.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace tipi::service {

/// Point-in-time view broadcast to clients every tick.
struct WireState {
    std::int64_t t = 0;
    Eigen::Vector2d pos = Eigen::Vector2d::Zero();
    double heading = 0.0;
    Eigen::Vector2d lin_vel = Eigen::Vector2d::Zero();
    std::string condition;
    double tipi = 0.0;
    double xi_norm = 0.0;
    std::vector<std::pair<int, sim::Segment>> blocks;

    bool operator==(const WireState& other) const;
};

/// {type:"state", t, x, y, heading, vx, vy, condition, tipi, xi_norm, blocks:[{id, x1, y1, x2, y2}]}
nlohmann::json wire_to_json(const WireState& w);

struct Pause {};
struct Resume {};
struct Reset {
    std::optional<std::uint64_t> seed;
};
using ClientCommand = std::variant<harness::SessionEvent, Pause, Resume, Reset>;

/// Parse and validate one client message against the session limits. ConfigError with a message
/// suitable for the client on malformed input, unknown types, over-limit impulses, segments outside
/// the table, or rea requested without frozen parameters.
ClientCommand parse_command(const nlohmann::json& j, const harness::SessionConfig& cfg, bool has_frozen);

struct Snapshot {
    WireState state;
    nlohmann::json config;  // config echo
    bool paused = false;
    bool aborted = false;
};

struct TickResult {
    WireState state;
    bool advanced = false;
    /// Commands that were accepted on arrival but failed when applied (e.g. unknown block id).
    std::vector<std::pair<std::uint64_t, std::string>> errors;
};

/// The single authority over a live session. Clients only submit commands; tick() is the one place
/// where the simulation state changes. Commands are applied atomically at the next tick boundary,
/// before the step, and logged exactly as run_session logs its timeline, so the log replays through
/// run_session bit-exactly.
class LiveSession {
public:
    /// Returns the stream for the log of session generation `generation` (0, then +1 per reset).
    using LogOpener = std::function<std::unique_ptr<std::ostream>(const harness::SessionConfig&, int generation)>;

    LiveSession(harness::SessionConfig cfg, std::optional<baseline::FrozenParams> frozen, LogOpener opener = {});
    ~LiveSession();
    LiveSession(const LiveSession&) = delete;
    LiveSession& operator=(const LiveSession&) = delete;

    /// Queue a client message. Returns an error message (and queues nothing) if it is invalid.
    std::optional<std::string> submit(const nlohmann::json& message, std::uint64_t client = 0);
    std::optional<std::string> submit_text(std::string_view text, std::uint64_t client = 0);

    /// Apply queued commands, then advance one step unless paused or aborted.
    TickResult tick();

    /// Consistent view as of the last tick boundary.
    Snapshot snapshot() const;

    /// Write the summary record of the current log. Called on reset and destruction.
    void finish();

    /// Default log location: <output or .>/live_<condition>_seed<seed>[_r<generation>].jsonl
    static LogOpener file_logs();

private:
    void start(harness::SessionConfig cfg);
    void publish();

    const harness::SessionConfig base_cfg_;
    harness::SessionConfig cfg_;
    std::optional<baseline::FrozenParams> frozen_;
    LogOpener opener_;

    mutable std::mutex queue_mu_;
    std::vector<std::pair<std::uint64_t, ClientCommand>> queue_;

    // Owned by the tick loop.
    std::unique_ptr<harness::Session> session_;
    std::unique_ptr<std::ostream> log_stream_;
    std::unique_ptr<harness::SessionLogWriter> log_;
    std::vector<harness::SessionEvent> scripted_;
    std::size_t next_scripted_ = 0;
    std::int64_t nonfinite_ticks_ = 0;
    bool paused_ = false;
    bool aborted_ = false;
    bool finished_ = false;
    int generation_ = 0;

    mutable std::mutex snap_mu_;
    Snapshot snap_;
};

struct ServiceOptions {
    std::string address = "127.0.0.1";
    unsigned short port = 8080;  // 0 picks a free port
    std::chrono::milliseconds tick_period{50};
    std::optional<std::int64_t> max_ticks;  // stop after this many ticks (tests)
    bool handle_signals = false;            // stop cleanly on SIGINT/SIGTERM
};

/// WebSocket /ws plus GET /health and GET /config, on one single-threaded event loop that also
/// drives the 20 Hz tick. The constructor binds the port; a port in use throws std::system_error.
class Server {
public:
    Server(LiveSession& session, ServiceOptions opts);
    ~Server();

    unsigned short port() const;
    /// Blocks until stop() or max_ticks.
    void run();
    /// Thread-safe.
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Run a live session for `cfg` until the process is stopped.
void serve(const harness::SessionConfig& cfg, const ServiceOptions& opts);

}  // namespace tipi::service
