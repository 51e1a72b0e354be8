#include "tipi/core/types.hpp"

#include "tipi/core/errors.hpp"

#include <string>

namespace tipi {

bool all_finite(const Vector& v) { return v.allFinite(); }
bool all_finite(const Matrix& m) { return m.allFinite(); }

namespace {
Vector from_list(std::initializer_list<double> values) {
    Vector v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double x : values) v[i++] = x;
    return v;
}
}  // namespace

SensorVector::SensorVector(Vector values) : values_(std::move(values)) {
    if (!values_.allFinite()) throw InvalidInput("sensor vector contains non-finite entries");
}

SensorVector::SensorVector(std::initializer_list<double> values) : SensorVector(from_list(values)) {}

MotorVector::MotorVector(Vector values) : values_(std::move(values)) {
    if (!values_.allFinite()) throw InvalidInput("motor vector contains non-finite entries");
    for (Eigen::Index i = 0; i < values_.size(); ++i) {
        if (values_[i] < -1.0 || values_[i] > 1.0) {
            throw InvalidInput("motor command " + std::to_string(values_[i]) + " outside [-1, 1]");
        }
    }
}

MotorVector::MotorVector(std::initializer_list<double> values) : MotorVector(from_list(values)) {}

}  // namespace tipi
