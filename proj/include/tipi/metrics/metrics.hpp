#pragma once

#include "tipi/core/types.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace tipi::metrics {

/// Co-occurrence counts of (previous symbol, current symbol) pairs.
class DiscreteJoint {
public:
    DiscreteJoint(std::size_t rows, std::size_t cols);
    /// Row-major nested counts; all rows must have equal length. ConfigError if the total is zero.
    static DiscreteJoint from_counts(const std::vector<std::vector<std::uint64_t>>& counts);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::uint64_t count(std::size_t prev, std::size_t cur) const { return counts_[prev * cols_ + cur]; }
    void add(std::size_t prev, std::size_t cur, std::uint64_t n = 1) { counts_[prev * cols_ + cur] += n; }
    std::uint64_t total() const;

    /// Coarsen by mapping symbols through the given relabelings (one per axis).
    DiscreteJoint merged(const std::vector<std::size_t>& prev_map, const std::vector<std::size_t>& cur_map) const;

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<std::uint64_t> counts_;
};

/// Plug-in mutual information of the joint, in nats. Zero-count cells contribute nothing.
double discrete_mi(const DiscreteJoint& joint);

/// Mutual information between consecutive samples of a stationary Gaussian AR(1) process with
/// coefficient a: -1/2 ln(1 - a^2). NumericDomainError for |a| >= 1.
double gaussian_ar1_mi(double a);

/// One logged control tick.
struct StepRecord {
    std::int64_t t = 0;
    std::string condition;
    Eigen::Vector2d pos = Eigen::Vector2d::Zero();
    double heading = 0.0;
    Eigen::Vector2d lin_vel = Eigen::Vector2d::Zero();
    Vector motor;
    Vector sensor;
    double tipi = 0.0;
    double xi_norm = 0.0;
    double dtheta_norm = 0.0;
    bool learned = false;
    bool nonfinite = false;
    Vector ds;  // deviation ds_t; empty while warming up
    Vector xi;  // prediction error xi_{t-1}; empty while warming up
};

using TrajectoryLog = std::vector<StepRecord>;

/// Windowed TiPI of the logged deviation process: for each step whose trailing window holds
/// `window` deviation samples, 1/2 ln|Sigma + ridge I| - 1/2 ln|D + ridge I| with Sigma and D the
/// plain sample covariances of ds and xi inside the window. ConfigError if window < n + 1.
std::vector<double> running_tipi(const TrajectoryLog& log, std::size_t window, double ridge = 1e-4);

/// Shannon entropy (nats) of the visit histogram over a G x G grid on [-radius, radius]^2.
double occupancy_entropy(const TrajectoryLog& log, int grid, double radius);

double mean(std::span<const double> xs);
/// Median of the finite values; NaN if there are none.
double median(std::vector<double> xs);
/// Interquartile range (linear interpolation) of the finite values; NaN if there are none.
double iqr(std::vector<double> xs);

}  // namespace tipi::metrics
