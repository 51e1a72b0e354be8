#pragma once

#include "tipi/harness/session.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace tipi::harness {

/// Per-log numbers that enter a condition comparison.
struct LogSummary {
    std::string condition;
    std::uint64_t seed = 0;
    std::int64_t steps = 0;
    double mean_tipi = 0.0;          // mean of the windowed TiPI series (NaN if the log is shorter than the window)
    double occupancy_entropy = 0.0;  // nats, proxy for behavioral variety
    double rms_xi = 0.0;
    nlohmann::json plant;            // plant echo, used to refuse mixed comparisons
    std::string source;
};

/// Summarize a trajectory with the report settings of `cfg`.
LogSummary summarize(const metrics::TrajectoryLog& log, const SessionConfig& cfg);
/// Summarize a parsed log file with the report settings echoed in its header.
LogSummary summarize(const ParsedLog& log);

struct ConditionStats {
    std::string condition;
    std::size_t count = 0;
    double median_tipi = 0.0, iqr_tipi = 0.0;
    double median_entropy = 0.0, iqr_entropy = 0.0;
    double median_rms_xi = 0.0, iqr_rms_xi = 0.0;
};

struct Report {
    std::vector<LogSummary> rows;       // sorted by (condition, seed, source)
    std::vector<ConditionStats> groups;  // sorted by condition
    bool small_sample = false;           // some condition has fewer than kSmallSample logs
    std::vector<std::string> warnings;

    static constexpr std::size_t kSmallSample = 3;
    const ConditionStats* group(const std::string& condition) const;
};

/// ConfigError when `logs` is empty or the logs were produced under different plant configs.
Report compare(std::vector<LogSummary> logs);

/// Load every *.jsonl file in `dir` (non-recursive, sorted by name) and compare them.
Report compare_directory(const std::filesystem::path& dir);

/// condition,seed,steps,mean_tipi,occupancy_entropy,rms_xi
void write_csv(const Report& report, std::ostream& out);
/// Human-readable per-condition medians and IQRs.
void write_table(const Report& report, std::ostream& out);

}  // namespace tipi::harness
