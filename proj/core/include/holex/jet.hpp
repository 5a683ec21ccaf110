#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "holex/types.hpp"

namespace holex {

/// Shared descriptor for truncated multivariate Taylor arithmetic: the graded
/// enumeration of multi-indices with |alpha| <= order over `nvars` real
/// variables, plus the lookup needed by products.
class JetSpace {
 public:
  JetSpace(int nvars, int order);

  int nvars() const { return nvars_; }
  int order() const { return order_; }
  int size() const { return static_cast<int>(midx_.size()); }

  const std::vector<int>& multi_index(int flat) const { return midx_[flat]; }
  int total_degree(int flat) const { return degree_[flat]; }

  /// Flat index of a multi-index, or -1 when |alpha| exceeds the order.
  int index_of(const std::vector<int>& alpha) const;

  /// alpha_1! * ... * alpha_m!
  double factorial_product(int flat) const { return fact_[flat]; }

 private:
  static std::uint64_t pack(const std::vector<int>& alpha);

  int nvars_;
  int order_;
  std::vector<std::vector<int>> midx_;
  std::vector<int> degree_;
  std::vector<double> fact_;
  std::unordered_map<std::uint64_t, int> lookup_;
};

/// Truncated Taylor expansion with complex coefficients in real variables.
/// Coefficients are Taylor coefficients (derivative / factorial).
class Jet {
 public:
  Jet() : space_(nullptr) {}
  explicit Jet(const JetSpace& space, Complex constant = 0.0);

  /// The jet (x_i + constant), i.e. the i-th seed variable.
  static Jet variable(const JetSpace& space, int i, Complex at);

  const JetSpace& space() const { return *space_; }
  Complex value() const { return coef_[0]; }
  Complex coef(int flat) const { return coef_[flat]; }

  /// Mixed partial derivative (not Taylor coefficient) for a multi-index.
  Complex derivative(const std::vector<int>& alpha) const;

  Jet conjugate() const;

  Jet& operator+=(const Jet& o);
  Jet& operator-=(const Jet& o);
  Jet& operator+=(Complex c) { coef_[0] += c; return *this; }
  Jet& operator-=(Complex c) { coef_[0] -= c; return *this; }
  Jet& operator*=(Complex c);

  friend Jet operator+(Jet a, const Jet& b) { a += b; return a; }
  friend Jet operator-(Jet a, const Jet& b) { a -= b; return a; }
  friend Jet operator*(Jet a, Complex c) { a *= c; return a; }
  friend Jet operator*(Complex c, Jet a) { a *= c; return a; }
  friend Jet operator*(const Jet& a, const Jet& b);

  /// Composition F(u) where `outer` holds the derivatives F^(m)(u.value()),
  /// m = 0..order. Horner evaluation in (u - u0).
  Jet compose(const std::vector<Complex>& outer) const;

  /// sqrt of a jet with positive real constant term.
  Jet sqrt_real() const;

 private:
  const JetSpace* space_;
  std::vector<Complex> coef_;
};

}  // namespace holex
