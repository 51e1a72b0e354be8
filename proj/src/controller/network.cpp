#include "tipi/controller/network.hpp"

#include "tipi/core/errors.hpp"

#include <cmath>
#include <string>

namespace tipi::controller {

namespace {

std::string shape(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_sensor_dim(const Vector& s, const ControllerParams& cp) {
    if (s.size() != cp.C.cols()) {
        throw InvalidInput("sensor vector of length " + std::to_string(s.size()) +
                           " does not match controller C " + shape(cp.C));
    }
    if (cp.h.size() != cp.C.rows()) {
        throw InvalidInput("controller bias length " + std::to_string(cp.h.size()) +
                           " does not match C " + shape(cp.C));
    }
}

}  // namespace

void validate_shapes(const NetworkParams& theta) {
    const auto& [C, h] = theta.controller;
    const auto& [A, b] = theta.model;
    const auto n = C.cols();
    const auto m = C.rows();
    if (h.size() != m || A.rows() != n || A.cols() != m || b.size() != n) {
        throw InvalidInput("inconsistent network shapes: C " + shape(C) + ", h " + std::to_string(h.size()) +
                           ", A " + shape(A) + ", b " + std::to_string(b.size()));
    }
}

void clamp_params(ControllerParams& cp) {
    cp.C = cp.C.cwiseMax(-kParamBound).cwiseMin(kParamBound);
    cp.h = cp.h.cwiseMax(-kParamBound).cwiseMin(kParamBound);
}

void clamp_params(ModelParams& mp) {
    mp.A = mp.A.cwiseMax(-kParamBound).cwiseMin(kParamBound);
    mp.b = mp.b.cwiseMax(-kParamBound).cwiseMin(kParamBound);
}

bool all_finite(const NetworkParams& theta) {
    return theta.controller.C.allFinite() && theta.controller.h.allFinite() && theta.model.A.allFinite() &&
           theta.model.b.allFinite();
}

Vector preactivation(const Vector& s, const ControllerParams& cp) {
    require_sensor_dim(s, cp);
    return cp.C * s + cp.h;
}

MotorVector controller_act(const SensorVector& s, const ControllerParams& cp) {
    return MotorVector(preactivation(s.values(), cp).array().tanh().matrix());
}

Vector loop_psi(const Vector& s, const NetworkParams& theta) {
    validate_shapes(theta);
    if (!s.allFinite()) throw InvalidInput("loop_psi: non-finite sensor input");
    const Vector y = preactivation(s, theta.controller).array().tanh().matrix();
    return theta.model.A * y + theta.model.b;
}

SensorVector loop_psi(const SensorVector& s, const NetworkParams& theta) {
    return SensorVector(loop_psi(s.values(), theta));
}

Matrix loop_jacobian(const Vector& s, const NetworkParams& theta) {
    validate_shapes(theta);
    if (!s.allFinite()) throw InvalidInput("loop_jacobian: non-finite sensor input");
    const Vector g = preactivation(s, theta.controller).array().tanh().matrix();
    const Vector slope = (1.0 - g.array().square()).matrix();
    return theta.model.A * slope.asDiagonal() * theta.controller.C;
}

}  // namespace tipi::controller
