#include "tipi/harness/report.hpp"

#include "tipi/core/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>
#include <tuple>

namespace tipi::harness {

namespace {

std::string num(double x) {
    if (std::isnan(x)) return "nan";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

}  // namespace

LogSummary summarize(const metrics::TrajectoryLog& log, const SessionConfig& cfg) {
    LogSummary s;
    s.condition = to_string(cfg.condition);
    s.seed = cfg.seed;
    s.steps = static_cast<std::int64_t>(log.size());
    s.plant = config_echo(cfg).at("plant");

    const auto series = metrics::running_tipi(log, cfg.report.tipi_window, cfg.learning.ridge);
    s.mean_tipi = metrics::mean(series);
    s.occupancy_entropy = metrics::occupancy_entropy(log, cfg.report.occupancy_grid, cfg.plant.table.radius);

    double sq = 0.0;
    std::size_t k = 0;
    for (const auto& r : log) {
        if (r.xi.size() == 0) continue;
        sq += r.xi_norm * r.xi_norm;
        ++k;
    }
    s.rms_xi = k > 0 ? std::sqrt(sq / static_cast<double>(k)) : std::nan("");
    return s;
}

LogSummary summarize(const ParsedLog& log) {
    return summarize(log.records, config_from_json(log.header.at("config")));
}

const ConditionStats* Report::group(const std::string& condition) const {
    for (const auto& g : groups) {
        if (g.condition == condition) return &g;
    }
    return nullptr;
}

Report compare(std::vector<LogSummary> logs) {
    if (logs.empty()) throw ConfigError("compare needs at least one log");
    for (const auto& l : logs) {
        if (l.plant != logs.front().plant) {
            throw ConfigError("refusing to compare logs from different plant configs (" + logs.front().source +
                              " vs " + l.source + "): " + logs.front().plant.dump() + " vs " + l.plant.dump());
        }
    }
    std::sort(logs.begin(), logs.end(), [](const LogSummary& a, const LogSummary& b) {
        return std::tie(a.condition, a.seed, a.source) < std::tie(b.condition, b.seed, b.source);
    });

    Report report;
    std::map<std::string, std::vector<const LogSummary*>> by_condition;
    for (const auto& l : logs) by_condition[l.condition].push_back(&l);
    for (const auto& [condition, members] : by_condition) {
        std::vector<double> tipi, entropy, xi;
        for (const auto* m : members) {
            tipi.push_back(m->mean_tipi);
            entropy.push_back(m->occupancy_entropy);
            xi.push_back(m->rms_xi);
        }
        ConditionStats g;
        g.condition = condition;
        g.count = members.size();
        g.median_tipi = metrics::median(tipi);
        g.iqr_tipi = metrics::iqr(tipi);
        g.median_entropy = metrics::median(entropy);
        g.iqr_entropy = metrics::iqr(entropy);
        g.median_rms_xi = metrics::median(xi);
        g.iqr_rms_xi = metrics::iqr(xi);
        if (g.count < Report::kSmallSample) {
            report.small_sample = true;
            report.warnings.push_back("small sample: condition '" + condition + "' has only " +
                                      std::to_string(g.count) + " log(s)");
        }
        report.groups.push_back(std::move(g));
    }
    for (const auto& l : logs) {
        if (std::isnan(l.mean_tipi)) {
            report.warnings.push_back("log " + (l.source.empty() ? l.condition + "/" + std::to_string(l.seed) : l.source) +
                                      " is shorter than the TiPI window");
        }
    }
    report.rows = std::move(logs);
    return report;
}

Report compare_directory(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw ConfigError("not a directory: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw ConfigError("no .jsonl logs in " + dir.string());
    std::vector<LogSummary> logs;
    for (const auto& f : files) {
        auto s = summarize(read_log(f));
        s.source = f.filename().string();
        logs.push_back(std::move(s));
    }
    return compare(std::move(logs));
}

void write_csv(const Report& report, std::ostream& out) {
    out << "condition,seed,steps,mean_tipi,occupancy_entropy,rms_xi\n";
    for (const auto& r : report.rows) {
        out << r.condition << ',' << r.seed << ',' << r.steps << ',' << num(r.mean_tipi) << ','
            << num(r.occupancy_entropy) << ',' << num(r.rms_xi) << '\n';
    }
}

void write_table(const Report& report, std::ostream& out) {
    out << std::left << std::setw(10) << "condition" << std::right << std::setw(6) << "n" << std::setw(22)
        << "running TiPI" << std::setw(22) << "occupancy entropy" << std::setw(22) << "rms xi" << '\n';
    out << std::setw(16) << "" << std::setw(22) << "median (IQR)" << std::setw(22) << "median (IQR)" << std::setw(22)
        << "median (IQR)" << '\n';
    auto cell = [](double med, double spread) {
        std::ostringstream s;
        s << std::fixed << std::setprecision(4) << med << " (" << spread << ")";
        return s.str();
    };
    for (const auto& g : report.groups) {
        out << std::left << std::setw(10) << g.condition << std::right << std::setw(6) << g.count << std::setw(22)
            << cell(g.median_tipi, g.iqr_tipi) << std::setw(22) << cell(g.median_entropy, g.iqr_entropy)
            << std::setw(22) << cell(g.median_rms_xi, g.iqr_rms_xi) << '\n';
    }
    out << "occupancy entropy is a proxy for behavioral variety (nats, table grid)\n";
    for (const auto& w : report.warnings) out << "warning: " << w << '\n';
}

}  // namespace tipi::harness
