#pragma once

#include "tipi/controller/loop_window.hpp"
#include "tipi/core/types.hpp"

namespace tipi::controller {

/// Exponentially averaged second moments of the deviation process (Sigma) and of the
/// one-step prediction error (D).
///
/// The averages are kept unregularized; sigma() and d_cov() add ridge * I on read so the ridge does
/// not accumulate through the average. With ema_decay = 0 the estimate is the single-sample outer
/// product plus the ridge.
class CovarianceEstimator {
public:
    CovarianceEstimator(Eigen::Index n, double ema_decay, double ridge);

    Eigen::Index dim() const { return sigma_raw_.rows(); }
    double ema_decay() const { return ema_decay_; }
    double ridge() const { return ridge_; }

    Matrix sigma() const;
    Matrix d_cov() const;

    /// Fold one deviation sample and one prediction-error sample into the averages.
    void add(const Vector& ds_t, const Vector& xi_tm1);

private:
    Matrix sigma_raw_;
    Matrix d_raw_;
    double ema_decay_;
    double ridge_;
};

/// Fold the window's ds_t into Sigma and xi_{t-1} into D.
CovarianceEstimator covariance_update(CovarianceEstimator est, const LoopWindow& w);

/// ln|M| for a symmetric positive definite M; NumericDomainError otherwise.
double log_det_spd(const Matrix& m);

/// Time-local predictive information of the Gaussian deviation process,
/// 1/2 ln|Sigma| - 1/2 ln|D|, in nats. May be negative for estimated covariances.
double tipi_value(const Matrix& sigma, const Matrix& d_cov);
double tipi_value(const CovarianceEstimator& est);

}  // namespace tipi::controller
