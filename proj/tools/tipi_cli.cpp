#include "tipi/baseline/baseline_controller.hpp"
#include "tipi/core/errors.hpp"
#include "tipi/harness/report.hpp"
#include "tipi/harness/session.hpp"
#include "tipi/service/session_service.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace tipi;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

struct RunArgs {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> condition;
    std::optional<std::string> out;
    std::optional<std::string> replay;
    std::optional<std::string> frozen;
};

harness::SessionConfig apply_overrides(harness::SessionConfig cfg, const RunArgs& a) {
    if (a.seed) cfg.seed = *a.seed;
    if (a.condition) cfg.condition = harness::condition_from_string(*a.condition);
    if (a.frozen) cfg.frozen_params = *a.frozen;
    if (a.out) cfg.output = *a.out;
    return cfg;
}

int cmd_run(const RunArgs& a) {
    harness::SessionConfig cfg;
    std::vector<harness::SessionEvent> timeline;
    std::optional<std::string> expected_frozen;
    if (a.replay) {
        const auto parsed = harness::read_log(fs::path(*a.replay));
        auto plan = harness::replay_plan(parsed);
        cfg = plan.config;
        timeline = std::move(plan.timeline);
        if (!a.config.empty()) {
            const auto base = harness::load_config(a.config);
            cfg.frozen_params = base.frozen_params;
            cfg.output = base.output;
        }
        if (a.frozen) cfg.frozen_params = *a.frozen;
        if (a.out) cfg.output = *a.out;
        if (parsed.header.contains("frozen_digest") && parsed.header["frozen_digest"].is_string()) {
            expected_frozen = parsed.header["frozen_digest"].get<std::string>();
        }
    } else {
        if (a.config.empty()) throw ConfigError("run needs --config (or --replay)");
        cfg = apply_overrides(harness::load_config(a.config), a);
    }
    cfg.validate();

    std::optional<baseline::FrozenParams> frozen;
    if (cfg.frozen_params) frozen = baseline::load_frozen(*cfg.frozen_params);
    if (expected_frozen && (!frozen || frozen->digest() != *expected_frozen)) {
        throw ConfigError("replay needs the frozen parameters with digest " + *expected_frozen);
    }
    if (cfg.condition == harness::Condition::kRea && !frozen) {
        throw ConfigError("the rea condition needs 'frozen_params'");
    }
    if (!a.replay) timeline = harness::scripted_timeline(cfg);

    const fs::path dir = cfg.output.value_or(".");
    fs::create_directories(dir);
    const fs::path log_path = dir / (a.replay ? "replay_" + harness::log_file_name(cfg) : harness::log_file_name(cfg));
    std::ofstream out(log_path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + log_path.string());

    const auto outcome = harness::run_session(cfg, frozen, timeline, &out);
    const auto summary = harness::summarize(outcome.log, cfg);
    std::cout << "condition=" << summary.condition << " seed=" << summary.seed << " steps=" << summary.steps
              << " mean_tipi=" << summary.mean_tipi << " occupancy_entropy=" << summary.occupancy_entropy
              << " rms_xi=" << summary.rms_xi << " nonfinite_ticks=" << outcome.nonfinite_ticks
              << " digest=" << outcome.initial_digest.substr(0, 12) << "->" << outcome.final_digest.substr(0, 12)
              << " log=" << log_path.string() << '\n';
    return 0;
}

int cmd_pre_adapt(std::uint64_t seed, std::int64_t steps, const std::string& out, const std::string& config) {
    harness::SessionConfig cfg;
    if (!config.empty()) cfg = harness::load_config(config);
    cfg.seed = seed;
    cfg.validate();
    const auto fp = baseline::pre_adapt(cfg.plant, cfg.tipi_config(), seed, steps);
    if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
    baseline::save_frozen(fp, out);
    std::cout << "frozen parameters written to " << out << " (seed " << seed << ", " << steps
              << " steps, sha256 " << fp.digest() << ")\n";
    return 0;
}

int cmd_compare(const std::string& in, const std::string& out) {
    const auto report = harness::compare_directory(in);
    if (!out.empty()) {
        std::ofstream csv(out, std::ios::binary);
        if (!csv) throw ConfigError("cannot write " + out);
        harness::write_csv(report, csv);
    } else {
        harness::write_csv(report, std::cout);
    }
    harness::write_table(report, std::cout);
    return 0;
}

int cmd_serve(const std::string& config, const std::string& address, unsigned short port, const RunArgs& a) {
    harness::SessionConfig cfg;
    if (!config.empty()) cfg = harness::load_config(config);
    cfg = apply_overrides(cfg, a);
    cfg.validate();
    service::ServiceOptions opts;
    opts.address = address;
    opts.port = port;
    service::serve(cfg, opts);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"TiPI sphere-robot simulator: batch sessions, comparison reports and live mode"};
    app.require_subcommand(1);

    RunArgs run_args;
    auto* run = app.add_subcommand("run", "Run one session and write its JSON Lines log");
    run->add_option("--config", run_args.config, "TOML or JSON session config");
    run->add_option("--seed", run_args.seed, "Override the config seed");
    run->add_option("--condition", run_args.condition, "ada | rea")->check(CLI::IsMember({"ada", "rea", "balanced-REA"}, CLI::ignore_case));
    run->add_option("--out", run_args.out, "Output directory for the log");
    run->add_option("--replay", run_args.replay, "Rerun the configuration and event timeline of a session log");
    run->add_option("--frozen", run_args.frozen, "Frozen parameter file (overrides the config)");

    std::uint64_t pa_seed = 42;
    std::int64_t pa_steps = 50000;
    std::string pa_out, pa_config;
    auto* pre = app.add_subcommand("pre-adapt", "Adapt a network on the empty table and freeze it");
    pre->add_option("--seed", pa_seed, "Seed")->capture_default_str();
    pre->add_option("--steps", pa_steps, "Adaptation steps")->capture_default_str();
    pre->add_option("--out", pa_out, "Output file")->required();
    pre->add_option("--config", pa_config, "Config supplying plant and learning settings");

    std::string cmp_in, cmp_out;
    auto* cmp = app.add_subcommand("compare", "Summarize a directory of logs per condition");
    cmp->add_option("--in", cmp_in, "Directory of *.jsonl logs")->required();
    cmp->add_option("--out", cmp_out, "CSV output (stdout when omitted)");

    std::string sv_config, sv_address = "127.0.0.1";
    unsigned short sv_port = 8080;
    RunArgs sv_args;
    auto* srv = app.add_subcommand("serve", "Live session over WebSocket at 20 Hz");
    srv->add_option("--config", sv_config, "Session config");
    srv->add_option("--address", sv_address, "Bind address")->capture_default_str();
    srv->add_option("--port", sv_port, "Port")->capture_default_str();
    srv->add_option("--seed", sv_args.seed, "Override the config seed");
    srv->add_option("--condition", sv_args.condition, "ada | rea");
    srv->add_option("--out", sv_args.out, "Log directory");
    srv->add_option("--frozen", sv_args.frozen, "Frozen parameter file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*run) return cmd_run(run_args);
        if (*pre) return cmd_pre_adapt(pa_seed, pa_steps, pa_out, pa_config);
        if (*cmp) return cmd_compare(cmp_in, cmp_out);
        if (*srv) return cmd_serve(sv_config, sv_address, sv_port, sv_args);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const InvalidInput& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const harness::SessionAborted& e) {
        std::cerr << "numeric abort: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const NumericDomainError& e) {
        std::cerr << "numeric abort: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::system_error& e) {
        std::cerr << "startup error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
