#include "tipi/harness/session.hpp"

#include "tipi/core/errors.hpp"
#include "tipi/core/seeding.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

namespace tipi::harness {

using nlohmann::json;

namespace {

json vec_json(const Vector& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

Vector vec_from(const json& j) {
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    return v;
}

}  // namespace

json event_to_json(const SessionEvent& e) {
    if (const auto* p = std::get_if<sim::PerturbationEvent>(&e.what)) {
        json j = sim::to_json(*p);
        j["t"] = e.t;
        return j;
    }
    return json{{"t", e.t}, {"kind", "set_condition"},
                {"condition", to_string(std::get<ConditionChange>(e.what).condition)}};
}

SessionEvent session_event_from_json(const json& j) {
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) throw ConfigError("event needs a 'kind'");
    if (!j.contains("t") || !j["t"].is_number_integer()) throw ConfigError("event needs an integer 't'");
    SessionEvent e;
    e.t = j["t"].get<std::int64_t>();
    if (j["kind"] == "set_condition") {
        if (!j.contains("condition") || !j["condition"].is_string()) throw ConfigError("set_condition needs a condition");
        e.what = ConditionChange{condition_from_string(j["condition"].get<std::string>())};
    } else {
        e.what = sim::event_from_json(j);
    }
    return e;
}

std::vector<SessionEvent> scripted_timeline(const SessionConfig& cfg) {
    sim::PerturbationSchedule schedule;
    if (cfg.schedule == "default") {
        const auto period = static_cast<std::int64_t>(std::llround(cfg.nudges.period_s / cfg.plant.dt));
        schedule = sim::default_nudge_schedule(derive_seed(cfg.seed, Stream::kSchedule), cfg.duration_steps,
                                               std::max<std::int64_t>(period, 1), cfg.nudges.impulse, cfg.plant);
    } else if (cfg.schedule != "none" && !cfg.schedule.empty()) {
        schedule = sim::load_schedule(cfg.schedule, cfg.plant);
    }
    std::vector<SessionEvent> out;
    for (const auto& e : schedule.events()) out.push_back({e.t, e});
    return out;
}

Session::Session(SessionConfig cfg, std::optional<baseline::FrozenParams> frozen)
    : cfg_(std::move(cfg)),
      frozen_(std::move(frozen)),
      condition_(cfg_.condition),
      plant_((cfg_.validate(), cfg_.plant), derive_seed(cfg_.seed, Stream::kSensorNoise)) {
    if (frozen_ && (frozen_->config().sensors != channel::kCount || frozen_->config().motors != motor::kCount)) {
        throw ConfigError("frozen parameters must be a 5-sensor, 2-motor network");
    }
    install_controller(condition_);
}

void Session::install_controller(Condition c) {
    if (c == Condition::kRea) {
        if (!frozen_) throw ConfigError("the rea condition needs frozen parameters");
        rea_.emplace(*frozen_, cfg_.balance);
        ada_.reset();
    } else {
        ada_.emplace(cfg_.tipi_config());
        rea_.reset();
    }
    condition_ = c;
}

SessionEvent Session::apply(SessionEvent e) {
    e.t = t_;
    if (const auto* change = std::get_if<ConditionChange>(&e.what)) {
        install_controller(change->condition);
        return e;
    }
    auto& p = std::get<sim::PerturbationEvent>(e.what);
    p.t = t_;
    sim::validate_event(p, cfg_.plant);
    switch (p.kind) {
        case sim::PerturbationKind::kNudge: pending_nudges_.push_back({p.impulse, p.point}); break;
        case sim::PerturbationKind::kBlockOn:
            if (p.id < 0) p.id = next_block_id_;
            if (blocks_.contains(p.id)) throw ConfigError("block " + std::to_string(p.id) + " is already on");
            blocks_[p.id] = p.segment;
            next_block_id_ = std::max(next_block_id_, p.id + 1);
            break;
        case sim::PerturbationKind::kBlockOff:
            if (p.id < 0 && !blocks_.empty()) p.id = blocks_.rbegin()->first;
            if (!blocks_.contains(p.id)) throw ConfigError("no active block with id " + std::to_string(p.id));
            blocks_.erase(p.id);
            break;
    }
    return e;
}

metrics::StepRecord Session::advance() {
    const SensorVector s = plant_.sense();
    sim::ActivePerturbations active;
    active.nudges = std::move(pending_nudges_);
    pending_nudges_.clear();
    for (const auto& [id, seg] : blocks_) active.blocks.push_back({id, seg});

    metrics::StepRecord rec;
    rec.t = t_;
    rec.condition = to_string(condition_);
    rec.sensor = s.values();

    controller::StepDiagnostics diag;
    if (ada_) {
        auto result = ada_->step(s);
        plant_.step(result.motor, active);
        rec.motor = result.motor.values();
        diag = std::move(result.diag);
    } else {
        auto result = rea_->step(s);
        const auto& rea = *rea_;
        plant_.step([&rea](const sim::RobotState& st) { return rea.wheels(st); }, active);
        rec.motor = result.network_output.values();
        diag = std::move(result.diag);
    }

    const auto& st = plant_.state();
    if (!st.all_finite()) throw SessionAborted("plant state became non-finite at t=" + std::to_string(t_));
    rec.pos = st.pos;
    rec.heading = st.heading;
    rec.lin_vel = st.lin_vel;
    rec.tipi = diag.tipi;
    rec.xi_norm = diag.xi_norm;
    rec.dtheta_norm = diag.dtheta_norm;
    rec.learned = diag.learned;
    rec.nonfinite = diag.nonfinite;
    rec.ds = std::move(diag.ds_t);
    rec.xi = std::move(diag.xi_tm1);
    if (!std::isfinite(rec.tipi)) throw SessionAborted("TiPI estimate became non-finite at t=" + std::to_string(t_));

    ++t_;
    last_ = rec;
    return rec;
}

std::string Session::params_digest() const {
    if (rea_) return rea_->frozen().digest();
    return baseline::params_digest(ada_->params());
}

json record_to_json(const metrics::StepRecord& r) {
    json j{{"type", "step"},
           {"t", r.t},
           {"condition", r.condition},
           {"x", r.pos.x()},
           {"y", r.pos.y()},
           {"heading", r.heading},
           {"vx", r.lin_vel.x()},
           {"vy", r.lin_vel.y()},
           {"motor", vec_json(r.motor)},
           {"sensor", vec_json(r.sensor)},
           {"tipi", r.tipi},
           {"xi_norm", r.xi_norm},
           {"dtheta_norm", r.dtheta_norm},
           {"learned", r.learned},
           {"nonfinite", r.nonfinite}};
    if (r.ds.size() > 0) j["ds"] = vec_json(r.ds);
    if (r.xi.size() > 0) j["xi"] = vec_json(r.xi);
    return j;
}

metrics::StepRecord record_from_json(const json& j) {
    try {
        metrics::StepRecord r;
        r.t = j.at("t").get<std::int64_t>();
        r.condition = j.at("condition").get<std::string>();
        r.pos = {j.at("x").get<double>(), j.at("y").get<double>()};
        r.heading = j.at("heading").get<double>();
        r.lin_vel = {j.at("vx").get<double>(), j.at("vy").get<double>()};
        r.motor = vec_from(j.at("motor"));
        r.sensor = vec_from(j.at("sensor"));
        r.tipi = j.at("tipi").get<double>();
        r.xi_norm = j.at("xi_norm").get<double>();
        r.dtheta_norm = j.at("dtheta_norm").get<double>();
        r.learned = j.at("learned").get<bool>();
        r.nonfinite = j.at("nonfinite").get<bool>();
        if (j.contains("ds")) r.ds = vec_from(j["ds"]);
        if (j.contains("xi")) r.xi = vec_from(j["xi"]);
        return r;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed step record: ") + e.what());
    }
}

void SessionLogWriter::line(const json& j) { out_ << j.dump() << '\n'; }

void SessionLogWriter::header(const Session& s) {
    json h{{"type", "header"}, {"version", 1}, {"config", config_echo(s.config())}};
    h["frozen_digest"] = s.frozen() ? json(s.frozen()->digest()) : json(nullptr);
    h["initial_digest"] = s.params_digest();
    line(h);
}

void SessionLogWriter::event(const SessionEvent& e) {
    line(json{{"type", "event"}, {"t", e.t}, {"event", event_to_json(e)}});
}

void SessionLogWriter::step(const metrics::StepRecord& r) { line(record_to_json(r)); }

void SessionLogWriter::abort(std::int64_t t, const std::string& reason) {
    line(json{{"type", "abort"}, {"t", t}, {"reason", reason}});
}

void SessionLogWriter::summary(const Session& s, bool aborted, std::int64_t nonfinite_ticks) {
    line(json{{"type", "summary"},
              {"steps", s.t()},
              {"condition", to_string(s.condition())},
              {"final_digest", s.params_digest()},
              {"aborted", aborted},
              {"nonfinite_ticks", nonfinite_ticks}});
    out_.flush();
}

std::optional<baseline::FrozenParams> load_frozen_for(const SessionConfig& cfg) {
    if (cfg.frozen_params) return baseline::load_frozen(*cfg.frozen_params);
    if (cfg.condition == Condition::kRea) throw ConfigError("the rea condition needs 'frozen_params'");
    return std::nullopt;
}

SessionOutcome run_session(const SessionConfig& cfg, const std::optional<baseline::FrozenParams>& frozen,
                           const std::vector<SessionEvent>& timeline, std::ostream* log_out) {
    Session session(cfg, frozen);
    std::optional<SessionLogWriter> writer;
    if (log_out) writer.emplace(*log_out);
    if (writer) writer->header(session);

    SessionOutcome outcome;
    outcome.initial_digest = session.params_digest();
    outcome.log.reserve(static_cast<std::size_t>(cfg.duration_steps));

    std::size_t next = 0;
    for (std::int64_t t = 0; t < cfg.duration_steps; ++t) {
        while (next < timeline.size() && timeline[next].t < t) ++next;  // stale stamps are dropped
        while (next < timeline.size() && timeline[next].t == t) {
            const auto applied = session.apply(timeline[next++]);
            if (writer) writer->event(applied);
        }
        try {
            auto rec = session.advance();
            if (rec.nonfinite) ++outcome.nonfinite_ticks;
            if (writer) writer->step(rec);
            outcome.log.push_back(std::move(rec));
        } catch (const SessionAborted& e) {
            if (writer) {
                writer->abort(t, e.what());
                writer->summary(session, true, outcome.nonfinite_ticks);
            }
            throw;
        }
    }
    outcome.final_digest = session.params_digest();
    if (writer) writer->summary(session, false, outcome.nonfinite_ticks);
    return outcome;
}

SessionOutcome run_session(const SessionConfig& cfg, std::ostream* log_out) {
    cfg.validate();
    const auto frozen = load_frozen_for(cfg);
    return run_session(cfg, frozen, scripted_timeline(cfg), log_out);
}

std::string log_file_name(const SessionConfig& cfg) {
    return std::string(to_string(cfg.condition)) + "_seed" + std::to_string(cfg.seed) + ".jsonl";
}

ParsedLog read_log(std::istream& in) {
    ParsedLog out;
    std::string text;
    std::size_t lineno = 0;
    while (std::getline(in, text)) {
        ++lineno;
        if (text.empty()) continue;
        json j;
        try {
            j = json::parse(text);
        } catch (const json::parse_error& e) {
            throw ConfigError("log line " + std::to_string(lineno) + " is not JSON: " + e.what());
        }
        const auto type = j.value("type", std::string{});
        if (type == "header") {
            out.header = std::move(j);
        } else if (type == "event") {
            out.events.push_back(session_event_from_json(j.at("event")));
        } else if (type == "step") {
            out.records.push_back(record_from_json(j));
        } else if (type == "summary") {
            out.summary = std::move(j);
        } else if (type != "abort") {
            throw ConfigError("log line " + std::to_string(lineno) + " has unknown type '" + type + "'");
        }
    }
    if (out.header.is_null()) throw ConfigError("log has no header record");
    for (std::size_t i = 1; i < out.records.size(); ++i) {
        if (out.records[i].t <= out.records[i - 1].t) throw ConfigError("log step indices are not increasing");
    }
    return out;
}

ParsedLog read_log(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open log " + path.string());
    return read_log(in);
}

ReplayPlan replay_plan(const ParsedLog& log) {
    ReplayPlan plan;
    plan.config = config_from_json(log.header.at("config"));
    plan.config.schedule = "none";
    if (!log.summary.is_null()) {
        plan.config.duration_steps = log.summary.at("steps").get<std::int64_t>();
    } else {
        plan.config.duration_steps = static_cast<std::int64_t>(log.records.size());
    }
    plan.timeline = log.events;
    return plan;
}

}  // namespace tipi::harness
