#pragma once

#include <complex>

#include <Eigen/Dense>

namespace ajl {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXd;

inline constexpr cplx kI{0.0, 1.0};
inline constexpr double kPi = 3.14159265358979323846;

}  // namespace ajl
