#pragma once

#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace hyflow {

using Index = Eigen::Index;

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Complex = std::complex<double>;
using RVec = Vec<double>;
using RMat = Mat<double>;
using CVec = Vec<Complex>;
using CMat = Mat<Complex>;

/// e^{j 2pi/3}
inline const Complex kGamma = std::polar(1.0, 2.0 * std::numbers::pi / 3.0);

/// Base class for all recoverable failures raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Stacks a complex vector as [Re; Im].
template <typename Derived>
RVec to_rect(const Eigen::MatrixBase<Derived>& v) {
  RVec x(2 * v.size());
  x.head(v.size()) = v.real();
  x.tail(v.size()) = v.imag();
  return x;
}

/// Inverse of to_rect.
template <typename Derived>
CVec from_rect(const Eigen::MatrixBase<Derived>& x) {
  const Index m = x.size() / 2;
  CVec v(m);
  v.real() = x.head(m);
  v.imag() = x.tail(m);
  return v;
}

}  // namespace hyflow
