#include "tipi/controller/covariance.hpp"

#include "tipi/core/errors.hpp"

#include <cmath>
#include <string>

namespace tipi::controller {

CovarianceEstimator::CovarianceEstimator(Eigen::Index n, double ema_decay, double ridge)
    : sigma_raw_(Matrix::Zero(n, n)), d_raw_(Matrix::Zero(n, n)), ema_decay_(ema_decay), ridge_(ridge) {
    if (n <= 0) throw InvalidInput("covariance dimension must be positive");
    if (!(ema_decay >= 0.0 && ema_decay <= 1.0)) {
        throw InvalidInput("ema_decay must lie in [0, 1], got " + std::to_string(ema_decay));
    }
    if (!(ridge > 0.0) || !std::isfinite(ridge)) {
        throw InvalidInput("ridge must be positive and finite, got " + std::to_string(ridge));
    }
}

Matrix CovarianceEstimator::sigma() const {
    return sigma_raw_ + ridge_ * Matrix::Identity(dim(), dim());
}

Matrix CovarianceEstimator::d_cov() const {
    return d_raw_ + ridge_ * Matrix::Identity(dim(), dim());
}

void CovarianceEstimator::add(const Vector& ds_t, const Vector& xi_tm1) {
    if (ds_t.size() != dim() || xi_tm1.size() != dim()) {
        throw InvalidInput("covariance sample has wrong dimension");
    }
    const double w = 1.0 - ema_decay_;
    // Outer products are symmetric by construction; averaging the two halves keeps the
    // accumulated matrices bitwise symmetric.
    Matrix s = ema_decay_ * sigma_raw_ + w * (ds_t * ds_t.transpose());
    Matrix d = ema_decay_ * d_raw_ + w * (xi_tm1 * xi_tm1.transpose());
    sigma_raw_ = 0.5 * (s + s.transpose());
    d_raw_ = 0.5 * (d + d.transpose());
}

CovarianceEstimator covariance_update(CovarianceEstimator est, const LoopWindow& w) {
    if (!w.has_deviations()) throw NotWarmedUp("covariance_update before the window is filled");
    est.add(w.ds_t, w.xi_tm1);
    return est;
}

double log_det_spd(const Matrix& m) {
    if (m.rows() != m.cols() || m.rows() == 0) throw NumericDomainError("log-determinant of a non-square matrix");
    if (!m.allFinite()) throw NumericDomainError("log-determinant of a non-finite matrix");
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() != Eigen::Success) throw NumericDomainError("matrix is not positive definite");
    const Vector diag = llt.matrixLLT().diagonal();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < diag.size(); ++i) {
        if (!(diag[i] > 0.0)) throw NumericDomainError("matrix is not positive definite");
        acc += std::log(diag[i]);
    }
    return 2.0 * acc;
}

double tipi_value(const Matrix& sigma, const Matrix& d_cov) {
    return 0.5 * log_det_spd(sigma) - 0.5 * log_det_spd(d_cov);
}

double tipi_value(const CovarianceEstimator& est) { return tipi_value(est.sigma(), est.d_cov()); }

}  // namespace tipi::controller
