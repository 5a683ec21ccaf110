#include "holex/jet.hpp"

#include <cmath>

namespace holex {

namespace {

void enumerate(int nvars, int order, std::vector<int>& cur, int pos, int left,
               std::vector<std::vector<int>>& out) {
  if (pos == nvars) {
    out.push_back(cur);
    return;
  }
  for (int e = 0; e <= left; ++e) {
    cur[pos] = e;
    enumerate(nvars, order, cur, pos + 1, left - e, out);
  }
  cur[pos] = 0;
}

}  // namespace

JetSpace::JetSpace(int nvars, int order) : nvars_(nvars), order_(order) {
  std::vector<std::vector<int>> all;
  std::vector<int> cur(nvars, 0);
  enumerate(nvars, order, cur, 0, order, all);
  // Sort by total degree, then lexicographic, so index 0 is the constant term.
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    int da = 0, db = 0;
    for (int x : a) da += x;
    for (int x : b) db += x;
    if (da != db) return da < db;
    return a < b;
  });
  midx_ = std::move(all);
  degree_.resize(midx_.size());
  fact_.resize(midx_.size());
  for (std::size_t i = 0; i < midx_.size(); ++i) {
    int d = 0;
    double f = 1.0;
    for (int e : midx_[i]) {
      d += e;
      for (int j = 2; j <= e; ++j) f *= j;
    }
    degree_[i] = d;
    fact_[i] = f;
    lookup_[pack(midx_[i])] = static_cast<int>(i);
  }
}

std::uint64_t JetSpace::pack(const std::vector<int>& alpha) {
  std::uint64_t key = 0;
  for (int e : alpha) key = (key << 8) | static_cast<std::uint64_t>(e & 0xff);
  return key;
}

int JetSpace::index_of(const std::vector<int>& alpha) const {
  auto it = lookup_.find(pack(alpha));
  return it == lookup_.end() ? -1 : it->second;
}

Jet::Jet(const JetSpace& space, Complex constant)
    : space_(&space), coef_(space.size(), Complex(0.0)) {
  coef_[0] = constant;
}

Jet Jet::variable(const JetSpace& space, int i, Complex at) {
  Jet j(space, at);
  std::vector<int> alpha(space.nvars(), 0);
  alpha[i] = 1;
  j.coef_[space.index_of(alpha)] = 1.0;
  return j;
}

Complex Jet::derivative(const std::vector<int>& alpha) const {
  int idx = space_->index_of(alpha);
  if (idx < 0) throw HolexError("jet: derivative order exceeds truncation");
  return coef_[idx] * space_->factorial_product(idx);
}

Jet Jet::conjugate() const {
  Jet out = *this;
  for (auto& c : out.coef_) c = std::conj(c);
  return out;
}

Jet& Jet::operator+=(const Jet& o) {
  for (std::size_t i = 0; i < coef_.size(); ++i) coef_[i] += o.coef_[i];
  return *this;
}

Jet& Jet::operator-=(const Jet& o) {
  for (std::size_t i = 0; i < coef_.size(); ++i) coef_[i] -= o.coef_[i];
  return *this;
}

Jet& Jet::operator*=(Complex c) {
  for (auto& x : coef_) x *= c;
  return *this;
}

Jet operator*(const Jet& a, const Jet& b) {
  const JetSpace& sp = *a.space_;
  Jet out(sp);
  out.coef_[0] = 0.0;
  const int n = sp.size();
  std::vector<int> sum(sp.nvars());
  for (int i = 0; i < n; ++i) {
    if (a.coef_[i] == Complex(0.0)) continue;
    const auto& ai = sp.multi_index(i);
    const int di = sp.total_degree(i);
    for (int j = 0; j < n; ++j) {
      if (di + sp.total_degree(j) > sp.order()) continue;
      if (b.coef_[j] == Complex(0.0)) continue;
      const auto& bj = sp.multi_index(j);
      for (int v = 0; v < sp.nvars(); ++v) sum[v] = ai[v] + bj[v];
      out.coef_[sp.index_of(sum)] += a.coef_[i] * b.coef_[j];
    }
  }
  return out;
}

Jet Jet::compose(const std::vector<Complex>& outer) const {
  const JetSpace& sp = *space_;
  Jet d = *this;
  d.coef_[0] = 0.0;  // (u - u0)
  const int m = sp.order();
  // Horner: F = sum outer[j]/j! d^j.
  double fact = 1.0;
  for (int j = 2; j <= m; ++j) fact *= j;
  Jet acc(sp, outer[m] / fact);
  for (int j = m - 1; j >= 0; --j) {
    fact = 1.0;
    for (int i = 2; i <= j; ++i) fact *= i;
    acc = acc * d;
    acc += outer[j] / fact;
  }
  return acc;
}

Jet Jet::sqrt_real() const {
  const double u0 = std::real(value());
  if (!(u0 > 0.0)) throw HolexError("jet: sqrt of non-positive constant term");
  const int m = space_->order();
  std::vector<Complex> outer(m + 1);
  // d^m/du^m sqrt(u) = sqrt(u) * prod_{i<m} (1/2 - i) / u^m
  double prod = 1.0;
  const double s0 = std::sqrt(u0);
  for (int k = 0; k <= m; ++k) {
    outer[k] = s0 * prod / std::pow(u0, k);
    prod *= (0.5 - k);
  }
  return compose(outer);
}

}  // namespace holex
