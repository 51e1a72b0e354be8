#include "tipi/core/errors.hpp"
#include "tipi/metrics/metrics.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace tipi;
using namespace tipi::metrics;

namespace {

std::vector<std::vector<std::uint64_t>> random_counts(std::size_t r, std::size_t c, std::mt19937_64& rng) {
    std::uniform_int_distribution<std::uint64_t> d(0, 50);
    std::vector<std::vector<std::uint64_t>> out(r, std::vector<std::uint64_t>(c));
    for (auto& row : out) {
        for (auto& v : row) v = d(rng);
    }
    out[0][0] += 1;  // never an empty table
    return out;
}

/// Windowed TiPI computed window by window from scratch in long double.
double brute_window_tipi(const TrajectoryLog& log, std::size_t end, std::size_t window, double ridge) {
    const auto n = static_cast<std::size_t>(log.front().ds.size());
    auto cov = [&](auto get) {
        oracle::LVec mu(n, 0.0L);
        for (std::size_t i = end - window; i < end; ++i) {
            for (std::size_t a = 0; a < n; ++a) mu[a] += get(log[i])[a];
        }
        for (auto& m : mu) m /= static_cast<long double>(window);
        oracle::LMat c(n, oracle::LVec(n, 0.0L));
        for (std::size_t i = end - window; i < end; ++i) {
            for (std::size_t a = 0; a < n; ++a) {
                for (std::size_t b = 0; b < n; ++b) {
                    c[a][b] += (get(log[i])[a] - mu[a]) * (get(log[i])[b] - mu[b]);
                }
            }
        }
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = 0; b < n; ++b) c[a][b] /= static_cast<long double>(window - 1);
            c[a][a] += ridge;
        }
        return c;
    };
    const auto S = cov([](const StepRecord& r) { return r.ds; });
    const auto D = cov([](const StepRecord& r) { return r.xi; });
    return static_cast<double>(0.5L * std::log(oracle::determinant(S)) - 0.5L * std::log(oracle::determinant(D)));
}

}  // namespace

TEST(DiscreteMi, UniformJointIsZero) {
    EXPECT_NEAR(discrete_mi(DiscreteJoint::from_counts({{1, 1}, {1, 1}})), 0.0, 1e-15);
}

TEST(DiscreteMi, DiagonalJointIsLn2) {
    EXPECT_NEAR(discrete_mi(DiscreteJoint::from_counts({{1, 0}, {0, 1}})), std::numbers::ln2, 1e-15);
}

TEST(DiscreteMi, AgreesWithEnumerationOnRandomTables) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t r = 2 + trial % 3, c = 2 + (trial / 3) % 3;
        const auto counts = random_counts(r, c, rng);
        EXPECT_NEAR(discrete_mi(DiscreteJoint::from_counts(counts)), oracle::enumerate_mi(counts), 1e-12);
    }
}

TEST(DiscreteMi, NonNegativeAndCoarseningNeverIncreasesIt) {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 200; ++trial) {
        const auto j = DiscreteJoint::from_counts(random_counts(4, 4, rng));
        const double mi = discrete_mi(j);
        EXPECT_GE(mi, 0.0);
        const auto coarse = j.merged({0, 0, 1, 1}, {0, 1, 1, 1});
        EXPECT_EQ(coarse.total(), j.total());
        EXPECT_LE(discrete_mi(coarse), mi + 1e-12);
    }
}

TEST(DiscreteMi, RejectsEmptyAndRaggedTables) {
    EXPECT_THROW(DiscreteJoint::from_counts({{0, 0}, {0, 0}}), ConfigError);
    EXPECT_THROW(DiscreteJoint::from_counts({{1, 0}, {1}}), ConfigError);
}

TEST(GaussianAr1, ClosedFormValues) {
    EXPECT_NEAR(gaussian_ar1_mi(0.9), 0.830366, 1e-6);
    EXPECT_EQ(gaussian_ar1_mi(0.0), 0.0);
    EXPECT_EQ(gaussian_ar1_mi(0.5), gaussian_ar1_mi(-0.5));
    EXPECT_THROW(gaussian_ar1_mi(1.0), NumericDomainError);
    EXPECT_THROW(gaussian_ar1_mi(-1.5), NumericDomainError);
}

TEST(GaussianAr1, MatchesMonteCarloCorrelation) {
    // For Gaussians, I = -1/2 ln(1 - rho^2) with rho the sample lag-1 correlation.
    const auto log = oracle::ar1_log(0.9, 100000, 3);
    double sxy = 0, sxx = 0, syy = 0, sx = 0, sy = 0;
    const double n = static_cast<double>(log.size() - 1);
    for (std::size_t i = 1; i < log.size(); ++i) {
        const double x = log[i - 1].ds[0], y = log[i].ds[0];
        sx += x; sy += y; sxx += x * x; syy += y * y; sxy += x * y;
    }
    const double rho = (sxy - sx * sy / n) / std::sqrt((sxx - sx * sx / n) * (syy - sy * sy / n));
    const double mc = -0.5 * std::log(1.0 - rho * rho);
    EXPECT_NEAR(mc, gaussian_ar1_mi(0.9), 0.03 * gaussian_ar1_mi(0.9));
}

TEST(RunningTipi, ConstantLogIsZero) {
    TrajectoryLog log(300);
    for (auto& r : log) {
        r.ds = Vector::Constant(3, 0.7);
        r.xi = Vector::Constant(3, -0.1);
    }
    for (double v : running_tipi(log, 100)) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(RunningTipi, SeriesLengthAndWarmupRecordsSkipped) {
    auto log = oracle::ar1_log(0.5, 1000, 1);
    log[0].ds.resize(0);
    log[0].xi.resize(0);
    EXPECT_EQ(running_tipi(log, 100).size(), 999u - 100u + 1u);
    EXPECT_TRUE(running_tipi(log, 1000).empty());
}

TEST(RunningTipi, WindowBelowDimensionIsRejected) {
    TrajectoryLog log(50);
    for (auto& r : log) {
        r.ds = Vector::Ones(5);
        r.xi = Vector::Ones(5);
    }
    EXPECT_THROW(running_tipi(log, 5), ConfigError);
    EXPECT_NO_THROW(running_tipi(log, 6));
}

TEST(RunningTipi, AgreesWithWindowByWindowRecomputation) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g(0.0, 1.0);
    TrajectoryLog log(400);
    for (auto& r : log) {
        r.ds = Vector(2);
        r.xi = Vector(2);
        r.ds << g(rng), 0.5 * g(rng) + 3.0;
        r.xi << 0.2 * g(rng), 0.1 * g(rng);
    }
    const std::size_t window = 60;
    const auto series = running_tipi(log, window, 1e-4);
    ASSERT_EQ(series.size(), log.size() - window + 1);
    for (std::size_t k = 0; k < series.size(); k += 17) {
        EXPECT_NEAR(series[k], brute_window_tipi(log, k + window, window, 1e-4), 1e-9) << "window ending " << k;
    }
}

TEST(RunningTipi, RecoversAr1InformationWithShrinkingError) {
    const double truth = gaussian_ar1_mi(0.9);
    std::vector<double> errors;
    for (std::size_t window : {500u, 2000u, 5000u}) {
        std::vector<double> per_seed;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const auto series = running_tipi(oracle::ar1_log(0.9, window, 100 + seed), window, 0.0);
            ASSERT_EQ(series.size(), 1u);
            per_seed.push_back(std::abs(series.back() - truth));
        }
        errors.push_back(median(per_seed));
    }
    EXPECT_LT(errors[2], 0.1 * truth);
    EXPECT_GT(errors[0], errors[1]);
    EXPECT_GT(errors[1], errors[2]);
}

TEST(RunningTipi, Deterministic) {
    const auto log = oracle::ar1_log(0.7, 3000, 9);
    EXPECT_EQ(running_tipi(log, 500), running_tipi(log, 500));
}

TEST(OccupancyEntropy, ParkedRobotIsZero) {
    TrajectoryLog log(100);
    EXPECT_EQ(occupancy_entropy(log, 20, 1.5), 0.0);
}

TEST(OccupancyEntropy, UniformOverKCellsIsLnK) {
    TrajectoryLog log;
    const int k = 7;
    for (int rep = 0; rep < 10; ++rep) {
        for (int c = 0; c < k; ++c) {
            StepRecord r;
            r.pos = Eigen::Vector2d(-1.5 + 0.15 * (c + 0.5) * 2.0, 0.05);
            log.push_back(r);
        }
    }
    EXPECT_NEAR(occupancy_entropy(log, 20, 1.5), std::log(static_cast<double>(k)), 1e-12);
}

TEST(OccupancyEntropy, RejectsBadGrid) {
    EXPECT_THROW(occupancy_entropy({}, 1, 1.0), ConfigError);
    EXPECT_THROW(occupancy_entropy({}, 10, 0.0), ConfigError);
}

TEST(Statistics, MedianAndIqr) {
    EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
    EXPECT_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
    EXPECT_EQ(iqr({1.0, 2.0, 3.0, 4.0, 5.0}), 2.0);
    EXPECT_EQ(median({1.0, std::nan(""), 3.0}), 2.0);
    EXPECT_TRUE(std::isnan(median({})));
}
