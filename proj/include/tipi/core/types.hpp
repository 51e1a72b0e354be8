#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <initializer_list>

namespace tipi {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Channel layout of the sphere plant's sensor vector.
namespace channel {
inline constexpr Eigen::Index kAccelForward = 0;   // m/s^2, body frame
inline constexpr Eigen::Index kAccelLateral = 1;   // m/s^2, body frame, +left
inline constexpr Eigen::Index kGyroYaw = 2;        // rad/s
inline constexpr Eigen::Index kWheelLeft = 3;      // normalized [-1, 1]
inline constexpr Eigen::Index kWheelRight = 4;     // normalized [-1, 1]
inline constexpr Eigen::Index kCount = 5;
}  // namespace channel

namespace motor {
inline constexpr Eigen::Index kLeft = 0;
inline constexpr Eigen::Index kRight = 1;
inline constexpr Eigen::Index kCount = 2;
}  // namespace motor

bool all_finite(const Vector& v);
bool all_finite(const Matrix& m);

/// Exact (bitwise-value) equality that tolerates shape mismatch.
template <typename A, typename B>
bool identical(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}

/// One sensor reading s_t. Every entry is finite.
class SensorVector {
public:
    SensorVector() = default;
    explicit SensorVector(Vector values);
    SensorVector(std::initializer_list<double> values);

    static SensorVector zeros(Eigen::Index n) { return SensorVector(Vector::Zero(n)); }

    const Vector& values() const { return values_; }
    Eigen::Index size() const { return values_.size(); }
    double operator[](Eigen::Index i) const { return values_[i]; }

    bool operator==(const SensorVector& other) const { return identical(values_, other.values_); }

private:
    Vector values_;
};

/// Normalized motor command, each entry in [-1, 1].
class MotorVector {
public:
    MotorVector() = default;
    explicit MotorVector(Vector values);
    MotorVector(std::initializer_list<double> values);

    static MotorVector zeros(Eigen::Index m = motor::kCount) { return MotorVector(Vector::Zero(m)); }

    const Vector& values() const { return values_; }
    Eigen::Index size() const { return values_.size(); }
    double operator[](Eigen::Index i) const { return values_[i]; }
    double left() const { return values_[motor::kLeft]; }
    double right() const { return values_[motor::kRight]; }

    bool operator==(const MotorVector& other) const { return identical(values_, other.values_); }

private:
    Vector values_;
};

}  // namespace tipi
