#pragma once

#include <Eigen/Dense>

namespace pvs {

inline constexpr int kNumFeatures = 4;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Features = Eigen::Matrix<Scalar, kNumFeatures, 1>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;
using Vector4d = Features<double>;

}  // namespace pvs
