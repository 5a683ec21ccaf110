#pragma once

#include <vector>

#include "holex/types.hpp"

namespace holex {

/// Generalized smoothstep: the degree 2K+1 polynomial s with s(0)=0, s(1)=1
/// and K vanishing derivatives at both ends. Used as the C^K profile of all
/// cutoffs; K is the configurable smoothness order.
class SmoothStep {
 public:
  explicit SmoothStep(int order) : order_(order), coef_(2 * order + 2, 0.0) {
    // s(u) = sum_{j=0..K} C(K+j,j) C(2K+1,K-j) (-1)^j u^{K+1+j}
    auto binom = [](int n, int k) {
      double r = 1.0;
      for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
      return r;
    };
    for (int j = 0; j <= order; ++j) {
      double c = binom(order + j, j) * binom(2 * order + 1, order - j);
      coef_[order + 1 + j] = (j % 2 == 0) ? c : -c;
    }
  }

  int order() const { return order_; }

  /// m-th derivative of s at u, with the clamped extension (s=0 for u<0,
  /// s=1 for u>1).
  double eval(double u, int m = 0) const {
    if (u <= 0.0 || u >= 1.0) return (m == 0 && u >= 1.0) ? 1.0 : 0.0;
    double acc = 0.0;
    for (int p = static_cast<int>(coef_.size()) - 1; p >= m; --p) {
      double c = coef_[p];
      if (c == 0.0) continue;
      double fall = 1.0;
      for (int i = 0; i < m; ++i) fall *= (p - i);
      acc += c * fall * std::pow(u, p - m);
    }
    return acc;
  }

 private:
  int order_;
  std::vector<double> coef_;
};

}  // namespace holex
