#pragma once

#include "tipi/controller/covariance.hpp"
#include "tipi/controller/loop_window.hpp"
#include "tipi/controller/network.hpp"

namespace tipi::controller {

struct LearningConfig {
    double eps_controller = 0.1;
    double eps_model = 0.05;
    double grad_clip = 1.0;

    /// Throws InvalidInput on non-finite or negative rates, or a non-positive clip.
    void validate() const;
};

struct ControllerStep {
    Matrix dC;  // m x n
    Vector dh;  // m

    double norm() const;
};

/// Unscaled ascent direction of the one-sample objective 1/2 ln|Sigma| with respect to (C, h):
///
///   grad = du^T (dL(s_{t-1})/dtheta) ds_{t-1},   du = Sigma^{-1} ds_t,
///
/// where L is the loop Jacobian evaluated at s_{t-1} with the current parameters. ds_{t-1} and the
/// noise are treated as parameter independent, so this is the exact derivative of
/// 1/2 ln|(L ds_{t-1} + xi_t)(L ds_{t-1} + xi_t)^T + ridge I| when Sigma carries no averaging.
ControllerStep tipi_gradient(const Vector& s_tm1, const Vector& ds_tm1, const Vector& ds_t, const Matrix& sigma,
                             const NetworkParams& theta);

/// The learning step actually applied: the gradient is first rescaled so that no entry exceeds
/// grad_clip in magnitude, then multiplied by eps (so no entry of the step exceeds
/// eps * grad_clip). NumericDomainError if Sigma is singular.
ControllerStep controller_gradient(const LoopWindow& w, const CovarianceEstimator& est, const NetworkParams& theta,
                                   const LearningConfig& cfg);

/// Predictor update by gradient descent on 1/2 |xi_{t-1}|^2:
/// dA = eps_M xi_{t-1} y_{t-2}^T, db = eps_M xi_{t-1}, followed by clamping.
ModelParams model_update(const LoopWindow& w, ModelParams mp, const MotorVector& y_prev, const LearningConfig& cfg);

/// Apply a controller step and clamp.
void apply_step(ControllerParams& cp, const ControllerStep& step);

}  // namespace tipi::controller
