#pragma once

#include "tipi/core/types.hpp"

namespace tipi::controller {

inline constexpr double kParamBound = 5.0;

/// Behavior-generating network: y = tanh(C s + h).
struct ControllerParams {
    Matrix C;  // m x n
    Vector h;  // m

    Eigen::Index sensors() const { return C.cols(); }
    Eigen::Index motors() const { return C.rows(); }

    static ControllerParams zeros(Eigen::Index n, Eigen::Index m) {
        return {Matrix::Zero(m, n), Vector::Zero(m)};
    }
    bool operator==(const ControllerParams& o) const { return identical(C, o.C) && identical(h, o.h); }
};

/// Linear forward model on the motor layer: s' = A y + b.
struct ModelParams {
    Matrix A;  // n x m
    Vector b;  // n

    static ModelParams zeros(Eigen::Index n, Eigen::Index m) {
        return {Matrix::Zero(n, m), Vector::Zero(n)};
    }
    bool operator==(const ModelParams& o) const { return identical(A, o.A) && identical(b, o.b); }
};

/// The full parameter set theta of the sensorimotor loop.
struct NetworkParams {
    ControllerParams controller;
    ModelParams model;

    Eigen::Index sensors() const { return controller.sensors(); }
    Eigen::Index motors() const { return controller.motors(); }
    bool operator==(const NetworkParams& o) const { return controller == o.controller && model == o.model; }
};

/// Throws InvalidInput unless C, h, A, b have consistent shapes.
void validate_shapes(const NetworkParams& theta);

/// Clamp every entry to [-kParamBound, kParamBound].
void clamp_params(ControllerParams& cp);
void clamp_params(ModelParams& mp);

bool all_finite(const NetworkParams& theta);

/// Pre-activation z = C s + h.
Vector preactivation(const Vector& s, const ControllerParams& cp);

MotorVector controller_act(const SensorVector& s, const ControllerParams& cp);

/// Loop map psi(s) = A tanh(C s + h) + b, predicting the next sensor vector.
Vector loop_psi(const Vector& s, const NetworkParams& theta);
SensorVector loop_psi(const SensorVector& s, const NetworkParams& theta);

/// dpsi/ds = A diag(1 - tanh^2(C s + h)) C.
Matrix loop_jacobian(const Vector& s, const NetworkParams& theta);
inline Matrix loop_jacobian(const SensorVector& s, const NetworkParams& theta) {
    return loop_jacobian(s.values(), theta);
}

}  // namespace tipi::controller
