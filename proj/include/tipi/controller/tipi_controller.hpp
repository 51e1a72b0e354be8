#pragma once

#include "tipi/controller/covariance.hpp"
#include "tipi/controller/gradient.hpp"
#include "tipi/controller/loop_window.hpp"
#include "tipi/controller/network.hpp"

#include <cstdint>
#include <optional>

namespace tipi::controller {

struct TipiConfig {
    Eigen::Index sensors = channel::kCount;
    Eigen::Index motors = motor::kCount;
    double ema_decay = 0.9;
    double ridge = 1e-4;
    LearningConfig learning;
    std::uint64_t seed = 0;
    /// Self-coupling written into C for each motor's own proprioceptive channel.
    double initial_self_coupling = 0.8;
    /// Half-width of the uniform distribution the predictor matrix A is drawn from.
    double initial_model_scale = 0.1;

    void validate() const;
};

/// Starting weights: C zero except C[k, n - m + k] = initial_self_coupling (each servo reads its
/// own wheel speed), h = 0, A ~ U(-scale, scale) from the seed, b = 0.
NetworkParams initial_params(const TipiConfig& cfg);

struct StepDiagnostics {
    double tipi = 0.0;         // nats, from the running Sigma/D estimates
    double xi_norm = 0.0;      // |xi_{t-1}|
    double dtheta_norm = 0.0;  // |(dC, dh)| actually applied
    bool learned = false;      // false during warm-up or when a tick was skipped
    bool nonfinite = false;    // a non-finite intermediate forced this tick's learning to be skipped
    Vector ds_t;               // empty until the window is filled
    Vector xi_tm1;
};

struct StepResult {
    MotorVector motor;
    StepDiagnostics diag;
};

/// Online TiPI-maximizing controller. One instance per robot; value semantics.
class TipiController {
public:
    explicit TipiController(const TipiConfig& cfg);
    TipiController(const TipiConfig& cfg, NetworkParams initial);

    /// One tick: update the window, the covariance estimates, the predictor and the controller,
    /// then act on s_t with the updated controller.
    StepResult step(const SensorVector& s_t);

    const NetworkParams& params() const { return theta_; }
    const NetworkParams& previous_params() const { return theta_prev_; }
    const LoopWindow& window() const { return window_; }
    const CovarianceEstimator& estimator() const { return estimator_; }
    const TipiConfig& config() const { return cfg_; }
    std::int64_t ticks() const { return ticks_; }

private:
    TipiConfig cfg_;
    NetworkParams theta_;       // theta_{t-1} at the start of a tick
    NetworkParams theta_prev_;  // theta_{t-2}
    LoopWindow window_;
    CovarianceEstimator estimator_;
    std::int64_t ticks_ = 0;
};

}  // namespace tipi::controller
