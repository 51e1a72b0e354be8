#include "tipi/controller/tipi_controller.hpp"

#include "tipi/core/errors.hpp"
#include "tipi/core/seeding.hpp"

#include <cmath>
#include <random>
#include <string>

namespace tipi::controller {

void TipiConfig::validate() const {
    if (sensors <= 0 || motors <= 0) throw InvalidInput("sensor and motor counts must be positive");
    if (motors > sensors) throw InvalidInput("motor count may not exceed sensor count");
    learning.validate();
    if (!(initial_model_scale >= 0.0)) throw InvalidInput("initial_model_scale must be >= 0");
    if (!std::isfinite(initial_self_coupling)) throw InvalidInput("initial_self_coupling must be finite");
}

NetworkParams initial_params(const TipiConfig& cfg) {
    cfg.validate();
    const auto n = cfg.sensors;
    const auto m = cfg.motors;
    NetworkParams theta{ControllerParams::zeros(n, m), ModelParams::zeros(n, m)};
    for (Eigen::Index k = 0; k < m; ++k) theta.controller.C(k, n - m + k) = cfg.initial_self_coupling;

    std::mt19937_64 rng(derive_seed(cfg.seed, Stream::kInitialWeights));
    std::uniform_real_distribution<double> dist(-cfg.initial_model_scale, cfg.initial_model_scale);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) theta.model.A(i, j) = dist(rng);
    }
    clamp_params(theta.controller);
    clamp_params(theta.model);
    return theta;
}

TipiController::TipiController(const TipiConfig& cfg) : TipiController(cfg, initial_params(cfg)) {}

TipiController::TipiController(const TipiConfig& cfg, NetworkParams initial)
    : cfg_(cfg),
      theta_(std::move(initial)),
      theta_prev_(theta_),
      estimator_(cfg.sensors, cfg.ema_decay, cfg.ridge) {
    cfg_.validate();
    validate_shapes(theta_);
    if (theta_.sensors() != cfg_.sensors || theta_.motors() != cfg_.motors) {
        throw InvalidInput("initial parameters do not match the configured dimensions");
    }
    if (!all_finite(theta_)) throw InvalidInput("initial parameters are not finite");
}

StepResult TipiController::step(const SensorVector& s_t) {
    if (s_t.size() != cfg_.sensors) {
        throw InvalidInput("expected " + std::to_string(cfg_.sensors) + " sensor channels, got " +
                           std::to_string(s_t.size()));
    }

    StepDiagnostics diag;
    NetworkParams next = theta_;

    if (!window_.warmed_up()) {
        window_.prime(s_t);
    } else {
        bool shifted = false;
        try {
            const LoopWindow w = update_window(window_, s_t, theta_, theta_prev_);
            window_ = w;
            shifted = true;
            diag.ds_t = w.ds_t;
            diag.xi_tm1 = w.xi_tm1;
            diag.xi_norm = w.xi_tm1.norm();

            const CovarianceEstimator est = covariance_update(estimator_, w);
            if (!est.sigma().allFinite() || !est.d_cov().allFinite()) throw NumericDomainError("covariance overflow");

            const MotorVector y_tm2 = controller_act(SensorVector(w.s_tm2), theta_prev_.controller);
            const ModelParams model = model_update(w, theta_.model, y_tm2, cfg_.learning);
            const ControllerStep grad = controller_gradient(w, est, theta_, cfg_.learning);
            if (!model.A.allFinite() || !model.b.allFinite() || !grad.dC.allFinite() || !grad.dh.allFinite()) {
                throw NumericDomainError("non-finite learning step");
            }

            estimator_ = est;
            next.model = model;
            apply_step(next.controller, grad);
            diag.dtheta_norm = grad.norm();
            diag.learned = true;
        } catch (const NumericDomainError&) {
            diag.nonfinite = true;
        } catch (const InvalidInput&) {
            diag.nonfinite = true;
        }
        if (diag.nonfinite) {
            // The reading still enters the history so the next tick conditions on it.
            if (!shifted) window_.prime(s_t);
            diag.ds_t.resize(0);
            diag.xi_tm1.resize(0);
            diag.xi_norm = 0.0;
        }
    }

    theta_prev_ = theta_;
    theta_ = std::move(next);
    ++ticks_;

    diag.tipi = tipi_value(estimator_);
    try {
        return {controller_act(s_t, theta_.controller), std::move(diag)};
    } catch (const InvalidInput&) {
        // Overflowing pre-activations (inf - inf) on extreme readings: hold still for this tick.
        diag.nonfinite = true;
        return {MotorVector::zeros(cfg_.motors), std::move(diag)};
    }
}

}  // namespace tipi::controller
