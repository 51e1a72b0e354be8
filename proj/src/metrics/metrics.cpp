#include "tipi/metrics/metrics.hpp"

#include "tipi/controller/covariance.hpp"
#include "tipi/core/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>

namespace tipi::metrics {

DiscreteJoint::DiscreteJoint(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), counts_(rows * cols, 0) {
    if (rows == 0 || cols == 0) throw ConfigError("joint table needs at least one symbol per axis");
}

DiscreteJoint DiscreteJoint::from_counts(const std::vector<std::vector<std::uint64_t>>& counts) {
    if (counts.empty() || counts.front().empty()) throw ConfigError("empty joint table");
    DiscreteJoint j(counts.size(), counts.front().size());
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i].size() != j.cols_) throw ConfigError("ragged joint table");
        for (std::size_t k = 0; k < j.cols_; ++k) j.add(i, k, counts[i][k]);
    }
    if (j.total() == 0) throw ConfigError("joint table has zero total count");
    return j;
}

std::uint64_t DiscreteJoint::total() const {
    return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

DiscreteJoint DiscreteJoint::merged(const std::vector<std::size_t>& prev_map,
                                    const std::vector<std::size_t>& cur_map) const {
    if (prev_map.size() != rows_ || cur_map.size() != cols_) throw ConfigError("symbol map size mismatch");
    const auto rows = *std::max_element(prev_map.begin(), prev_map.end()) + 1;
    const auto cols = *std::max_element(cur_map.begin(), cur_map.end()) + 1;
    DiscreteJoint out(rows, cols);
    for (std::size_t i = 0; i < rows_; ++i) {
        for (std::size_t k = 0; k < cols_; ++k) out.add(prev_map[i], cur_map[k], count(i, k));
    }
    return out;
}

double discrete_mi(const DiscreteJoint& joint) {
    const std::uint64_t n = joint.total();
    if (n == 0) throw ConfigError("discrete_mi of an empty joint");
    std::vector<double> row(joint.rows(), 0.0);
    std::vector<double> col(joint.cols(), 0.0);
    for (std::size_t i = 0; i < joint.rows(); ++i) {
        for (std::size_t k = 0; k < joint.cols(); ++k) {
            const auto c = static_cast<double>(joint.count(i, k));
            row[i] += c;
            col[k] += c;
        }
    }
    const double total = static_cast<double>(n);
    double mi = 0.0;
    for (std::size_t i = 0; i < joint.rows(); ++i) {
        for (std::size_t k = 0; k < joint.cols(); ++k) {
            const auto c = static_cast<double>(joint.count(i, k));
            if (c == 0.0) continue;
            mi += (c / total) * std::log(c * total / (row[i] * col[k]));
        }
    }
    // Rounding can leave -1e-17 for independent tables.
    return std::max(mi, 0.0);
}

double gaussian_ar1_mi(double a) {
    if (!(std::abs(a) < 1.0)) throw NumericDomainError("AR(1) coefficient must satisfy |a| < 1");
    return -0.5 * std::log1p(-a * a);
}

namespace {

// Sliding sums of samples shifted by a fixed reference (the first sample), which keeps the
// sum-of-squares cancellation small when the mean is large relative to the spread.
struct WindowMoments {
    Vector sum;
    Matrix outer;
    std::optional<Vector> ref;

    explicit WindowMoments(Eigen::Index n) : sum(Vector::Zero(n)), outer(Matrix::Zero(n, n)) {}
    void add(const Vector& v, double sign) {
        if (!ref) ref = v;
        const Vector d = v - *ref;
        sum += sign * d;
        outer += sign * (d * d.transpose());
    }
    Matrix covariance(std::size_t count, double ridge) const {
        const double k = static_cast<double>(count);
        Matrix c = (outer - sum * sum.transpose() / k) / (k - 1.0);
        c = 0.5 * (c + c.transpose());
        c.diagonal().array() += ridge;
        return c;
    }
};

}  // namespace

std::vector<double> running_tipi(const TrajectoryLog& log, std::size_t window, double ridge) {
    std::vector<const StepRecord*> samples;
    for (const auto& r : log) {
        if (r.ds.size() > 0 && r.xi.size() > 0) samples.push_back(&r);
    }
    Eigen::Index n = 0;
    if (!samples.empty()) {
        n = samples.front()->ds.size();
    } else {
        for (const auto& r : log) n = std::max(n, r.sensor.size());
    }
    if (window < static_cast<std::size_t>(n) + 1 || window < 2) {
        throw ConfigError("running_tipi window " + std::to_string(window) + " is below n + 1 = " +
                          std::to_string(n + 1));
    }

    std::vector<double> series;
    if (samples.size() < window) return series;
    series.reserve(samples.size() - window + 1);

    WindowMoments ds(n);
    WindowMoments xi(n);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i]->ds.size() != n || samples[i]->xi.size() != n) throw ConfigError("inconsistent log dimensions");
        ds.add(samples[i]->ds, 1.0);
        xi.add(samples[i]->xi, 1.0);
        if (i >= window) {
            ds.add(samples[i - window]->ds, -1.0);
            xi.add(samples[i - window]->xi, -1.0);
        }
        if (i + 1 >= window) {
            series.push_back(controller::tipi_value(ds.covariance(window, ridge), xi.covariance(window, ridge)));
        }
    }
    return series;
}

double occupancy_entropy(const TrajectoryLog& log, int grid, double radius) {
    if (grid < 2) throw ConfigError("occupancy grid must be at least 2 x 2");
    if (!(radius > 0.0)) throw ConfigError("occupancy radius must be positive");
    if (log.empty()) return 0.0;
    std::vector<std::uint64_t> visits(static_cast<std::size_t>(grid) * grid, 0);
    const double cell = 2.0 * radius / grid;
    auto bin = [&](double x) {
        return std::clamp(static_cast<int>(std::floor((x + radius) / cell)), 0, grid - 1);
    };
    for (const auto& r : log) visits[static_cast<std::size_t>(bin(r.pos.y())) * grid + bin(r.pos.x())] += 1;
    const double total = static_cast<double>(log.size());
    double h = 0.0;
    for (auto v : visits) {
        if (v == 0) continue;
        const double p = static_cast<double>(v) / total;
        h -= p * std::log(p);
    }
    return std::max(h, 0.0);
}

double mean(std::span<const double> xs) {
    if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

namespace {

std::vector<double> finite_sorted(std::vector<double> xs) {
    xs.erase(std::remove_if(xs.begin(), xs.end(), [](double x) { return !std::isfinite(x); }), xs.end());
    std::sort(xs.begin(), xs.end());
    return xs;
}

double quantile_sorted(const std::vector<double>& xs, double q) {
    const double pos = q * static_cast<double>(xs.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = static_cast<std::size_t>(std::ceil(pos));
    return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

}  // namespace

double median(std::vector<double> xs) {
    xs = finite_sorted(std::move(xs));
    if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
    return quantile_sorted(xs, 0.5);
}

double iqr(std::vector<double> xs) {
    xs = finite_sorted(std::move(xs));
    if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
    return quantile_sorted(xs, 0.75) - quantile_sorted(xs, 0.25);
}

}  // namespace tipi::metrics
