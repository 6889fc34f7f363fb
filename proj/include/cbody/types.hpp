#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace cbody {

/// Largest embedding dimension of a descriptor manifold.
inline constexpr int kMaxManifoldDim = 6;

// Small fixed-capacity matrices: sizes are runtime (d in {2,3}, N <= 6)
// but storage never touches the heap.
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using VecD = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;
using MatD = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;
using VecN = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxManifoldDim, 1>;
using MatND = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxManifoldDim, 3>;
using MatNN = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxManifoldDim, kMaxManifoldDim>;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DegenerateRetraction : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class NonTangentError : public Error {
public:
    using Error::Error;
};

/// det F <= 0 where the barrier is undefined. `cell` is -1 when the
/// failing evaluation was not tied to a grid cell.
class OrientationError : public Error {
public:
    OrientationError(const std::string& what, long cell = -1) : Error(what), cell_(cell) {}
    long cell() const noexcept { return cell_; }

private:
    long cell_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Determinant of a 1x1, 2x2 or 3x3 matrix in closed form.
inline double det(const Eigen::Ref<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>>& F) {
    switch (F.rows()) {
    case 1: return F(0, 0);
    case 2: return F(0, 0) * F(1, 1) - F(0, 1) * F(1, 0);
    default:
        return F(0, 0) * (F(1, 1) * F(2, 2) - F(1, 2) * F(2, 1)) - F(0, 1) * (F(1, 0) * F(2, 2) - F(1, 2) * F(2, 0)) +
               F(0, 2) * (F(1, 0) * F(2, 1) - F(1, 1) * F(2, 0));
    }
}

/// Zero-pads a d-vector (d <= 3) into R^3.
inline Vec3 pad3(const VecD& v) {
    Vec3 out = Vec3::Zero();
    for (int i = 0; i < v.size(); ++i) out[i] = v[i];
    return out;
}

/// Zero-pads a d x d matrix into 3 x 3.
inline Mat3 pad3(const MatD& m) {
    Mat3 out = Mat3::Zero();
    out.topLeftCorner(m.rows(), m.cols()) = m;
    return out;
}

} // namespace cbody
