#include "tipi/controller/gradient.hpp"

#include "tipi/core/errors.hpp"

#include <cmath>
#include <string>

namespace tipi::controller {

void LearningConfig::validate() const {
    if (!std::isfinite(eps_controller) || eps_controller < 0.0) {
        throw InvalidInput("eps_controller must be finite and >= 0, got " + std::to_string(eps_controller));
    }
    if (!std::isfinite(eps_model) || eps_model < 0.0) {
        throw InvalidInput("eps_model must be finite and >= 0, got " + std::to_string(eps_model));
    }
    if (!(grad_clip > 0.0)) throw InvalidInput("grad_clip must be positive, got " + std::to_string(grad_clip));
}

double ControllerStep::norm() const {
    return std::sqrt(dC.squaredNorm() + dh.squaredNorm());
}

ControllerStep tipi_gradient(const Vector& s_tm1, const Vector& ds_tm1, const Vector& ds_t, const Matrix& sigma,
                             const NetworkParams& theta) {
    validate_shapes(theta);
    const auto n = theta.sensors();
    if (s_tm1.size() != n || ds_tm1.size() != n || ds_t.size() != n || sigma.rows() != n || sigma.cols() != n) {
        throw InvalidInput("tipi_gradient: dimension mismatch");
    }

    Eigen::LLT<Matrix> llt(sigma);
    if (llt.info() != Eigen::Success) throw NumericDomainError("Sigma is not positive definite");
    const Vector du = llt.solve(ds_t);
    if (!du.allFinite()) throw NumericDomainError("Sigma^{-1} ds_t is not finite");

    const auto& C = theta.controller.C;
    const Vector g = (C * s_tm1 + theta.controller.h).array().tanh().matrix();
    const Vector g1 = (1.0 - g.array().square()).matrix();          // tanh'
    const Vector g2 = (-2.0 * g.array() * g1.array()).matrix();      // tanh''
    const Vector mu = theta.model.A.transpose() * du;                // back-projected du
    const Vector w = C * ds_tm1;                                     // deviation on the motor layer

    // du^T A diag(g1) C ds_{t-1} differentiated in C enters twice: through C itself and
    // through g1 via the pre-activation C s_{t-1} + h.
    const Vector through_c = mu.cwiseProduct(g1);
    const Vector through_slope = mu.cwiseProduct(w).cwiseProduct(g2);

    ControllerStep step;
    step.dC = through_c * ds_tm1.transpose() + through_slope * s_tm1.transpose();
    step.dh = through_slope;
    return step;
}

ControllerStep controller_gradient(const LoopWindow& w, const CovarianceEstimator& est, const NetworkParams& theta,
                                   const LearningConfig& cfg) {
    if (!w.has_deviations()) throw NotWarmedUp("controller_gradient before the window is filled");
    cfg.validate();
    ControllerStep step = tipi_gradient(w.s_tm1, w.ds_tm1, w.ds_t, est.sigma(), theta);
    const double peak = std::max(step.dC.cwiseAbs().maxCoeff(), step.dh.cwiseAbs().maxCoeff());
    const double scale = cfg.eps_controller * (peak > cfg.grad_clip ? cfg.grad_clip / peak : 1.0);
    step.dC *= scale;
    step.dh *= scale;
    return step;
}

ModelParams model_update(const LoopWindow& w, ModelParams mp, const MotorVector& y_prev, const LearningConfig& cfg) {
    if (!w.has_deviations()) throw NotWarmedUp("model_update before the window is filled");
    cfg.validate();
    if (y_prev.size() != mp.A.cols() || w.xi_tm1.size() != mp.A.rows()) {
        throw InvalidInput("model_update: dimension mismatch");
    }
    mp.A += cfg.eps_model * w.xi_tm1 * y_prev.values().transpose();
    mp.b += cfg.eps_model * w.xi_tm1;
    clamp_params(mp);
    return mp;
}

void apply_step(ControllerParams& cp, const ControllerStep& step) {
    cp.C += step.dC;
    cp.h += step.dh;
    clamp_params(cp);
}

}  // namespace tipi::controller
