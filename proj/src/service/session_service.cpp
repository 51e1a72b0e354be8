#include "tipi/service/session_service.hpp"

#include "tipi/core/errors.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <system_error>

namespace tipi::service {

using nlohmann::json;

bool WireState::operator==(const WireState& o) const {
    if (blocks.size() != o.blocks.size()) return false;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (blocks[i].first != o.blocks[i].first || blocks[i].second.a != o.blocks[i].second.a ||
            blocks[i].second.b != o.blocks[i].second.b) {
            return false;
        }
    }
    return t == o.t && pos == o.pos && heading == o.heading && lin_vel == o.lin_vel && condition == o.condition &&
           tipi == o.tipi && xi_norm == o.xi_norm;
}

json wire_to_json(const WireState& w) {
    json blocks = json::array();
    for (const auto& [id, seg] : w.blocks) {
        blocks.push_back({{"id", id}, {"x1", seg.a.x()}, {"y1", seg.a.y()}, {"x2", seg.b.x()}, {"y2", seg.b.y()}});
    }
    return json{{"type", "state"},       {"t", w.t},         {"x", w.pos.x()},       {"y", w.pos.y()},
                {"heading", w.heading},  {"vx", w.lin_vel.x()}, {"vy", w.lin_vel.y()}, {"condition", w.condition},
                {"tipi", w.tipi},        {"xi_norm", w.xi_norm}, {"blocks", std::move(blocks)}};
}

namespace {

double number(const json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_number()) throw ConfigError(std::string("'") + key + "' must be a number");
    const double v = j[key].get<double>();
    if (!std::isfinite(v)) throw ConfigError(std::string("'") + key + "' must be finite");
    return v;
}

void only_keys(const json& j, std::initializer_list<const char*> keys) {
    for (const auto& [k, v] : j.items()) {
        bool known = k == "type";
        for (const auto* allowed : keys) known = known || k == allowed;
        if (!known) throw ConfigError("unexpected field '" + k + "'");
    }
}

}  // namespace

ClientCommand parse_command(const json& j, const harness::SessionConfig& cfg, bool has_frozen) {
    if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) {
        throw ConfigError("command must be an object with a string 'type'");
    }
    const auto type = j["type"].get<std::string>();
    if (type == "pause") {
        only_keys(j, {});
        return Pause{};
    }
    if (type == "resume") {
        only_keys(j, {});
        return Resume{};
    }
    if (type == "reset") {
        only_keys(j, {"seed"});
        Reset r;
        if (j.contains("seed")) {
            const auto& seed = j["seed"];
            if (!seed.is_number_integer() || (!seed.is_number_unsigned() && seed.get<std::int64_t>() < 0)) {
                throw ConfigError("'seed' must be a non-negative integer");
            }
            r.seed = seed.get<std::uint64_t>();
        }
        return r;
    }
    if (type == "set_condition") {
        only_keys(j, {"condition"});
        if (!j.contains("condition") || !j["condition"].is_string()) throw ConfigError("'condition' must be a string");
        const auto c = harness::condition_from_string(j["condition"].get<std::string>());
        if (c == harness::Condition::kRea && !has_frozen) {
            throw ConfigError("the rea condition is unavailable: no frozen parameters loaded");
        }
        return harness::SessionEvent{0, harness::ConditionChange{c}};
    }

    sim::PerturbationEvent e;
    if (type == "nudge") {
        only_keys(j, {"x", "y", "jx", "jy"});
        e.kind = sim::PerturbationKind::kNudge;
        if (j.contains("x") || j.contains("y")) e.point = sim::Vec2(number(j, "x"), number(j, "y"));
        e.impulse = sim::Vec2(number(j, "jx"), number(j, "jy"));
    } else if (type == "block_on") {
        only_keys(j, {"x1", "y1", "x2", "y2"});
        e.kind = sim::PerturbationKind::kBlockOn;
        e.segment = {sim::Vec2(number(j, "x1"), number(j, "y1")), sim::Vec2(number(j, "x2"), number(j, "y2"))};
    } else if (type == "block_off") {
        only_keys(j, {"id"});
        e.kind = sim::PerturbationKind::kBlockOff;
        if (!j.contains("id") || !j["id"].is_number_integer() || j["id"].get<std::int64_t>() < 0) {
            throw ConfigError("'id' must be a non-negative integer");
        }
        e.id = j["id"].get<int>();
    } else {
        throw ConfigError("unknown command type '" + type + "'");
    }
    sim::validate_event(e, cfg.plant);
    return harness::SessionEvent{0, e};
}

// --- LiveSession -----------------------------------------------------------------------------

LiveSession::LogOpener LiveSession::file_logs() {
    return [](const harness::SessionConfig& cfg, int generation) -> std::unique_ptr<std::ostream> {
        const std::filesystem::path dir = cfg.output.value_or(".");
        std::filesystem::create_directories(dir);
        auto name = "live_" + harness::log_file_name(cfg);
        if (generation > 0) name.insert(name.size() - 6, "_r" + std::to_string(generation));
        auto out = std::make_unique<std::ofstream>(dir / name, std::ios::binary);
        if (!*out) throw ConfigError("cannot write " + (dir / name).string());
        return out;
    };
}

LiveSession::LiveSession(harness::SessionConfig cfg, std::optional<baseline::FrozenParams> frozen, LogOpener opener)
    : base_cfg_(std::move(cfg)), frozen_(std::move(frozen)), opener_(std::move(opener)) {
    base_cfg_.validate();
    if (base_cfg_.condition == harness::Condition::kRea && !frozen_) {
        throw ConfigError("the rea condition needs frozen parameters");
    }
    start(base_cfg_);
}

LiveSession::~LiveSession() {
    try {
        finish();
    } catch (...) {
    }
}

void LiveSession::start(harness::SessionConfig cfg) {
    cfg_ = std::move(cfg);
    session_ = std::make_unique<harness::Session>(cfg_, frozen_);
    log_.reset();
    log_stream_.reset();
    if (opener_) {
        log_stream_ = opener_(cfg_, generation_);
        if (log_stream_) {
            log_ = std::make_unique<harness::SessionLogWriter>(*log_stream_);
            log_->header(*session_);
        }
    }
    scripted_ = harness::scripted_timeline(cfg_);
    next_scripted_ = 0;
    nonfinite_ticks_ = 0;
    aborted_ = false;
    finished_ = false;
    publish();
}

void LiveSession::finish() {
    if (finished_) return;
    finished_ = true;
    if (log_ && !aborted_) log_->summary(*session_, false, nonfinite_ticks_);
    if (log_stream_) log_stream_->flush();
}

std::optional<std::string> LiveSession::submit(const json& message, std::uint64_t client) {
    try {
        auto cmd = parse_command(message, base_cfg_, frozen_.has_value());
        std::lock_guard lock(queue_mu_);
        queue_.emplace_back(client, std::move(cmd));
        return std::nullopt;
    } catch (const ConfigError& e) {
        return std::string(e.what());
    } catch (const InvalidInput& e) {
        return std::string(e.what());
    }
}

std::optional<std::string> LiveSession::submit_text(std::string_view text, std::uint64_t client) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        return std::string("malformed JSON: ") + e.what();
    }
    return submit(j, client);
}

TickResult LiveSession::tick() {
    TickResult result;
    std::vector<std::pair<std::uint64_t, ClientCommand>> commands;
    {
        std::lock_guard lock(queue_mu_);
        commands.swap(queue_);
    }

    for (auto& [client, cmd] : commands) {
        if (std::holds_alternative<Pause>(cmd)) {
            paused_ = true;
        } else if (std::holds_alternative<Resume>(cmd)) {
            paused_ = false;
        } else if (const auto* r = std::get_if<Reset>(&cmd)) {
            finish();
            auto next = base_cfg_;
            next.seed = r->seed.value_or(cfg_.seed);
            ++generation_;
            paused_ = false;
            start(std::move(next));
        } else if (!aborted_) {
            try {
                const auto applied = session_->apply(std::get<harness::SessionEvent>(cmd));
                if (log_) log_->event(applied);
            } catch (const ConfigError& e) {
                result.errors.emplace_back(client, e.what());
            } catch (const InvalidInput& e) {
                result.errors.emplace_back(client, e.what());
            }
        }
    }

    if (!paused_ && !aborted_) {
        const auto t = session_->t();
        while (next_scripted_ < scripted_.size() && scripted_[next_scripted_].t < t) ++next_scripted_;
        while (next_scripted_ < scripted_.size() && scripted_[next_scripted_].t == t) {
            const auto applied = session_->apply(scripted_[next_scripted_++]);
            if (log_) log_->event(applied);
        }
        try {
            const auto rec = session_->advance();
            if (rec.nonfinite) ++nonfinite_ticks_;
            if (log_) log_->step(rec);
            result.advanced = true;
        } catch (const harness::SessionAborted& e) {
            aborted_ = true;
            if (log_) {
                log_->abort(t, e.what());
                log_->summary(*session_, true, nonfinite_ticks_);
            }
            finished_ = true;
        }
    }
    publish();
    std::lock_guard lock(snap_mu_);
    result.state = snap_.state;
    return result;
}

void LiveSession::publish() {
    Snapshot s;
    const auto& st = session_->state();
    s.state.t = session_->t();
    s.state.pos = st.pos;
    s.state.heading = st.heading;
    s.state.lin_vel = st.lin_vel;
    s.state.condition = harness::to_string(session_->condition());
    if (const auto last = session_->last_record()) {
        s.state.tipi = last->tipi;
        s.state.xi_norm = last->xi_norm;
    }
    for (const auto& [id, seg] : session_->blocks()) s.state.blocks.emplace_back(id, seg);
    s.config = harness::config_echo(cfg_);
    s.paused = paused_;
    s.aborted = aborted_;
    std::lock_guard lock(snap_mu_);
    snap_ = std::move(s);
}

Snapshot LiveSession::snapshot() const {
    std::lock_guard lock(snap_mu_);
    return snap_;
}

// --- Server ----------------------------------------------------------------------------------

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

class WsClient;

struct Hub {
    LiveSession& live;
    std::set<std::shared_ptr<WsClient>> clients;
    std::uint64_t next_client = 1;
};

class WsClient : public std::enable_shared_from_this<WsClient> {
public:
    WsClient(tcp::socket socket, Hub& hub) : ws_(std::move(socket)), hub_(hub), id_(hub.next_client++) {}

    void start(http::request<http::string_body> req) {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
            if (ec) return;
            self->hub_.clients.insert(self);
            self->read();
        });
    }

    std::uint64_t id() const { return id_; }

    void send(std::shared_ptr<const std::string> msg) {
        if (queue_.size() > kMaxQueued) return;  // slow client: drop frames rather than stall the loop
        queue_.push_back(std::move(msg));
        if (queue_.size() == 1) write();
    }

    void close() {
        beast::error_code ec;
        beast::get_lowest_layer(ws_).socket().close(ec);
    }

private:
    static constexpr std::size_t kMaxQueued = 256;

    void read() {
        ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) {
                self->hub_.clients.erase(self);
                return;
            }
            const auto text = beast::buffers_to_string(self->buffer_.data());
            self->buffer_.consume(self->buffer_.size());
            if (const auto err = self->hub_.live.submit_text(text, self->id_)) {
                self->send(std::make_shared<const std::string>(json{{"type", "error"}, {"message", *err}}.dump()));
            }
            self->read();
        });
    }

    void write() {
        ws_.text(true);
        ws_.async_write(net::buffer(*queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) {
                self->hub_.clients.erase(self);
                return;
            }
            self->queue_.pop_front();
            if (!self->queue_.empty()) self->write();
        });
    }

    websocket::stream<beast::tcp_stream> ws_;
    Hub& hub_;
    std::uint64_t id_;
    beast::flat_buffer buffer_;
    std::deque<std::shared_ptr<const std::string>> queue_;
};

class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
public:
    HttpConnection(tcp::socket socket, Hub& hub) : stream_(std::move(socket)), hub_(hub) {}

    void start() {
        stream_.expires_after(std::chrono::seconds(30));
        http::async_read(stream_, buffer_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (!ec) self->handle();
        });
    }

private:
    void handle() {
        if (websocket::is_upgrade(req_)) {
            if (req_.target() == "/ws") {
                stream_.expires_never();
                std::make_shared<WsClient>(stream_.release_socket(), hub_)->start(std::move(req_));
                return;
            }
            respond(http::status::not_found, "text/plain", "not found");
            return;
        }
        if (req_.method() != http::verb::get) {
            respond(http::status::method_not_allowed, "text/plain", "method not allowed");
        } else if (req_.target() == "/health") {
            respond(http::status::ok, "text/plain", "ok");
        } else if (req_.target() == "/config") {
            respond(http::status::ok, "application/json", hub_.live.snapshot().config.dump());
        } else {
            respond(http::status::not_found, "text/plain", "not found");
        }
    }

    void respond(http::status status, const char* type, std::string body) {
        auto res = std::make_shared<http::response<http::string_body>>(status, req_.version());
        res->set(http::field::content_type, type);
        res->keep_alive(false);
        res->body() = std::move(body);
        res->prepare_payload();
        http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code, std::size_t) {
            beast::error_code ec;
            self->stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
        });
    }

    beast::tcp_stream stream_;
    Hub& hub_;
    beast::flat_buffer buffer_;
    http::request<http::string_body> req_;
};

}  // namespace

struct Server::Impl {
    Impl(LiveSession& live, ServiceOptions o)
        : opts(std::move(o)), hub{live, {}, 1}, acceptor(ioc), timer(ioc) {
        const tcp::endpoint endpoint(net::ip::make_address(opts.address), opts.port);
        try {
            acceptor.open(endpoint.protocol());
            acceptor.bind(endpoint);
            acceptor.listen(net::socket_base::max_listen_connections);
        } catch (const boost::system::system_error& e) {
            throw std::system_error(std::error_code(e.code().value(), std::system_category()),
                                    "cannot listen on " + opts.address + ":" + std::to_string(opts.port));
        }
    }

    void accept() {
        acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
            if (ec) return;
            std::make_shared<HttpConnection>(std::move(socket), hub)->start();
            accept();
        });
    }

    void schedule() {
        deadline += opts.tick_period;
        timer.expires_at(deadline);
        timer.async_wait([this](beast::error_code ec) {
            if (ec) return;
            on_tick();
        });
    }

    void on_tick() {
        auto result = hub.live.tick();
        auto msg = std::make_shared<const std::string>(wire_to_json(result.state).dump());
        const auto clients = hub.clients;
        for (const auto& c : clients) c->send(msg);
        for (const auto& [client, error] : result.errors) {
            for (const auto& c : clients) {
                if (c->id() == client) {
                    c->send(std::make_shared<const std::string>(json{{"type", "error"}, {"message", error}}.dump()));
                }
            }
        }
        ++ticks;
        if (opts.max_ticks && ticks >= *opts.max_ticks) {
            shutdown();
            return;
        }
        schedule();
    }

    void shutdown() {
        beast::error_code ec;
        acceptor.close(ec);
        timer.cancel();
        signals.cancel(ec);
        for (const auto& c : hub.clients) c->close();
        hub.clients.clear();
        ioc.stop();
    }

    ServiceOptions opts;
    net::io_context ioc{1};
    Hub hub;
    tcp::acceptor acceptor;
    net::steady_timer timer;
    net::signal_set signals{ioc};
    std::chrono::steady_clock::time_point deadline;
    std::int64_t ticks = 0;
};

Server::Server(LiveSession& session, ServiceOptions opts) : impl_(std::make_unique<Impl>(session, std::move(opts))) {}

Server::~Server() = default;

unsigned short Server::port() const { return impl_->acceptor.local_endpoint().port(); }

void Server::run() {
    if (impl_->opts.handle_signals) {
        impl_->signals.add(SIGINT);
        impl_->signals.add(SIGTERM);
        impl_->signals.async_wait([impl = impl_.get()](beast::error_code ec, int) {
            if (!ec) impl->shutdown();
        });
    }
    impl_->accept();
    impl_->deadline = std::chrono::steady_clock::now();
    impl_->schedule();
    impl_->ioc.run();
}

void Server::stop() {
    net::post(impl_->ioc, [impl = impl_.get()] { impl->shutdown(); });
}

void serve(const harness::SessionConfig& cfg, const ServiceOptions& opts) {
    cfg.validate();
    auto frozen = cfg.frozen_params ? std::optional(baseline::load_frozen(*cfg.frozen_params)) : std::nullopt;
    {
        // Fail on a busy port before a log file is created.
        LiveSession probe(cfg, frozen);
        Server check(probe, opts);
    }
    LiveSession live(cfg, std::move(frozen), LiveSession::file_logs());
    auto o = opts;
    o.handle_signals = true;
    Server server(live, o);
    std::cerr << "serving on http://" << opts.address << ':' << server.port() << " (ws at /ws)\n";
    server.run();
    live.finish();
}

}  // namespace tipi::service
