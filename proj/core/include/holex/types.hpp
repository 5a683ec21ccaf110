#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace holex {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

/// Ambient point of C^n. Thin wrapper so domain code reads as geometry,
/// not linear algebra.
using CPoint = CVector;

inline constexpr double kPi = 3.14159265358979323846;

/// Hermitian inner product <a,b> = sum_j a_j conj(b_j).
inline Complex hdot(const CVector& a, const CVector& b) {
  Complex s = 0.0;
  for (Eigen::Index j = 0; j < a.size(); ++j) s += a[j] * std::conj(b[j]);
  return s;
}

inline double norm2(const CVector& a) { return std::sqrt(std::real(hdot(a, a))); }

class HolexError : public std::runtime_error {
 public:
  explicit HolexError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace holex
