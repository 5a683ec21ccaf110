#include "holex/local_extension.hpp"

#include <cmath>

#include "holex/rng.hpp"

namespace holex {

std::vector<Complex> divided_differences(const std::vector<Complex>& nodes,
                                         const std::vector<Complex>& values) {
  if (nodes.size() != values.size())
    throw HolexError("divided_differences: node/value arity mismatch");
  const std::size_t m = nodes.size();
  if (m == 0) throw HolexError("divided_differences: empty node set");
  double scale = 0.0;
  for (Complex t : nodes) scale = std::max(scale, std::abs(t));
  std::vector<Complex> table = values;
  std::vector<Complex> coeffs{table[0]};
  for (std::size_t level = 1; level < m; ++level) {
    for (std::size_t i = 0; i + level < m; ++i) {
      const Complex dt = nodes[i + level] - nodes[i];
      if (std::abs(dt) <= 1e-14 * (1.0 + scale))
        throw HolexError("divided_differences: coincident nodes");
      table[i] = (table[i + 1] - table[i]) / dt;
    }
    coeffs.push_back(table[0]);
  }
  return coeffs;
}

Complex divided_diff_contour(const std::function<Complex(Complex)>& sampler,
                             const std::vector<Complex>& nodes, double radius,
                             int quad_points) {
  if (nodes.empty()) throw HolexError("divided_diff_contour: empty node set");
  for (Complex t : nodes)
    if (std::abs(t) > 0.9 * radius)
      throw HolexError("divided_diff_contour: node within quadrature margin "
                       "of the contour");
  // (1/2 pi i) * integral of h(t) / prod (t - t_j) dt over |t| = radius.
  Complex acc = 0.0;
  for (int q = 0; q < quad_points; ++q) {
    const double th = 2.0 * kPi * q / quad_points;
    const Complex t = radius * Complex(std::cos(th), std::sin(th));
    Complex den = 1.0;
    for (Complex tj : nodes) den *= (t - tj);
    acc += sampler(t) / den * t;  // dt = i t dtheta; the 1/(2 pi i) cancels i
  }
  return acc / static_cast<double>(quad_points);
}

LocalExtension::LocalExtension(MultiPoly f, const DefiningFunction& df,
                               const CPoint& p, const Classification& cls,
                               BranchValueFn h, double c,
                               double disc_radius_factor)
    : f_(std::move(f)),
      p_(p),
      frame_(frame_at(df, p)),
      regime_(cls.regime),
      j_count_(cls.j_count),
      c_(c),
      h_(std::move(h)) {
  if (cls.regime == Regime::NoVariety || cls.j_count == 0)
    throw HolexError("local_extend: J_p is empty, use the interior extension");
  const double rho_p = std::abs(df.rho(p));
  ball_radius_ = c * rho_p;
  close_threshold_ = 2.0 * std::sqrt(c * rho_p);
  disc_radius_ = disc_radius_factor * std::sqrt(c * rho_p);
}

LocalExtension::Slice LocalExtension::prepare_slice(const CPoint& base) const {
  Slice s;
  s.base = base;
  const UniPoly rest = f_.restrict_line(base, frame_.w);
  if (rest.degree(1e-14) < 1)
    throw HolexError("local_extend: slice restriction has no roots");

  struct R {
    Complex t;
    int mult;
  };
  std::vector<R> in_disc;
  {
    std::vector<Complex> roots = poly_roots(rest);
    const double ctol = 1e-8 * std::max(disc_radius_, 1e-12);
    std::vector<bool> used(roots.size(), false);
    for (std::size_t i = 0; i < roots.size(); ++i) {
      if (used[i] || std::abs(roots[i]) >= disc_radius_) continue;
      R r{roots[i], 1};
      used[i] = true;
      Complex sum = roots[i];
      for (std::size_t j = i + 1; j < roots.size(); ++j)
        if (!used[j] && std::abs(roots[j] - roots[i]) < ctol) {
          used[j] = true;
          sum += roots[j];
          ++r.mult;
        }
      r.t = sum / static_cast<double>(r.mult);
      in_disc.push_back(r);
    }
  }
  if (in_disc.empty())
    throw HolexError("local_extend: missing branch values on the slice");
  std::sort(in_disc.begin(), in_disc.end(),
            [](const R& a, const R& b) { return std::abs(a.t) < std::abs(b.t); });

  // Keep the #J_p branches nearest the slice point; whole clusters only, so
  // the selection is stable across nearby slices.
  int taken = 0;
  bool confluent = false;
  for (const R& r : in_disc) {
    if (taken >= j_count_) break;
    for (int m = 0; m < r.mult; ++m) s.nodes.push_back(r.t);
    if (r.mult > 1) confluent = true;
    taken += r.mult;
  }

  fill_coefficients(s, confluent);
  return s;
}

void LocalExtension::fill_coefficients(Slice& s, bool confluent) const {
  if (!confluent) {
    std::vector<Complex> values;
    values.reserve(s.nodes.size());
    for (Complex t : s.nodes) values.push_back(h_(s.base + t * frame_.w));
    s.coeffs = divided_differences(s.nodes, values);
  } else {
    // Confluent nodes: every Newton coefficient from the contour formula,
    // which stays finite at branch collisions.
    auto sampler = [&](Complex t) { return h_(s.base + t * frame_.w); };
    const double rc = 0.75 * disc_radius_;
    for (std::size_t m = 1; m <= s.nodes.size(); ++m) {
      std::vector<Complex> prefix(s.nodes.begin(), s.nodes.begin() + m);
      s.coeffs.push_back(divided_diff_contour(sampler, prefix, rc));
    }
  }
}

LocalExtension::Slice LocalExtension::prepare_slice(const CPoint& base,
                                                    const Slice* hint) const {
  if (!hint || hint->nodes.empty()) return prepare_slice(base);
  const UniPoly rest = f_.restrict_line(base, frame_.w);
  if (rest.degree(1e-14) < 1) return prepare_slice(base);

  std::vector<Complex> centers;
  std::vector<int> mults;
  for (Complex t : hint->nodes) {
    if (!centers.empty() &&
        std::abs(t - centers.back()) < 1e-11 * (1.0 + std::abs(t))) {
      ++mults.back();
      continue;
    }
    centers.push_back(t);
    mults.push_back(1);
  }
  if (!polish_roots(rest, centers, mults)) return prepare_slice(base);
  for (std::size_t i = 0; i < centers.size(); ++i) {
    if (std::abs(centers[i]) >= disc_radius_) return prepare_slice(base);
    for (std::size_t j = i + 1; j < centers.size(); ++j)
      if (std::abs(centers[i] - centers[j]) <
          1e-9 * std::max(disc_radius_, 1e-12))
        return prepare_slice(base);  // clusters merged, re-select
  }

  Slice s;
  s.base = base;
  bool confluent = false;
  for (std::size_t i = 0; i < centers.size(); ++i) {
    for (int m = 0; m < mults[i]; ++m) s.nodes.push_back(centers[i]);
    confluent = confluent || mults[i] > 1;
  }
  fill_coefficients(s, confluent);
  return s;
}

Complex LocalExtension::eval_slice(const Slice& s, Complex t) const {
  Complex acc = 0.0, prod = 1.0;
  for (std::size_t m = 0; m < s.coeffs.size(); ++m) {
    acc += s.coeffs[m] * prod;
    prod *= (t - s.nodes[m]);
  }
  return acc;
}

Complex LocalExtension::eval(const CPoint& zeta) const {
  return eval_slice(prepare_slice(zeta), Complex(0.0));
}

double local_sup_bound(const LocalExtension& ext, int sample_budget,
                       std::uint64_t seed) {
  Rng rng(seed);
  const Frame& fr = ext.frame();
  const double r = ext.ball_radius();
  const int n = static_cast<int>(fr.p.size());
  double sup = 0.0;
  for (int i = 0; i < sample_budget; ++i) {
    const double split = rng.uniform();
    const Complex lam = split * r * rng.unit_complex() * rng.uniform();
    CPoint z = fr.p + lam * fr.eta;
    double tang_budget = (1.0 - split) * r;
    for (int d = 1; d < n; ++d) {
      const double frac = (d == n - 1) ? 1.0 : rng.uniform();
      z += std::sqrt(tang_budget * frac * rng.uniform()) * rng.unit_complex() *
           fr.eps[d];
      tang_budget *= (1.0 - frac);
    }
    sup = std::max(sup, std::abs(ext.eval(z)));
  }
  return sup;
}

}  // namespace holex
