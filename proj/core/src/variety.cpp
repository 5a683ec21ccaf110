#include "holex/variety.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "holex/rng.hpp"

namespace holex {

int BranchSet::close_count() const {
  int c = 0;
  for (const auto& r : roots) c += r.close ? r.multiplicity : 0;
  return c;
}

CMatrix slice_basis(const Frame& f) {
  const int n = static_cast<int>(f.p.size());
  CMatrix a = CMatrix::Identity(n, n);
  a.col(n - 1) = f.w;
  return a;
}

BranchSet branch_roots(const MultiPoly& f, const DefiningFunction& df,
                       const CPoint& p, const CPoint& base, double radius,
                       double c, double confluence_tol) {
  const Frame fr = frame_at(df, p);
  BranchSet bs;
  bs.base = base;
  bs.dir = fr.w;
  bs.disc_radius = radius;
  bs.close_threshold = 2.0 * std::sqrt(c * std::abs(df.rho(p)));

  const UniPoly rest = f.restrict_line(base, fr.w);
  // Scale of the restriction over the disc, for residual acceptance.
  double scale = 0.0, rp = 1.0;
  for (const Complex& ci : rest.coeffs()) {
    scale = std::max(scale, std::abs(ci) * rp);
    rp *= std::max(radius, 1e-8);
  }
  if (rest.is_zero(1e-14 * (1.0 + f.coeff_scale())))
    throw HolexError("branch_roots: line restriction identically zero "
                     "(slice contained in X)");
  if (rest.degree(1e-14) == 0) return bs;  // no roots anywhere

  std::vector<Complex> all = poly_roots(rest);
  std::vector<Complex> in_disc;
  for (Complex r : all)
    if (std::abs(r) < radius) in_disc.push_back(r);

  // Merge confluent clusters; the cluster center is the mean.
  std::vector<bool> used(in_disc.size(), false);
  const double ctol = confluence_tol * std::max(radius, 1e-12);
  for (std::size_t i = 0; i < in_disc.size(); ++i) {
    if (used[i]) continue;
    std::vector<Complex> cluster{in_disc[i]};
    used[i] = true;
    for (std::size_t j = i + 1; j < in_disc.size(); ++j) {
      if (used[j]) continue;
      if (std::abs(in_disc[j] - in_disc[i]) < ctol) {
        cluster.push_back(in_disc[j]);
        used[j] = true;
      }
    }
    Complex center = 0.0;
    for (Complex x : cluster) center += x;
    center /= static_cast<double>(cluster.size());
    BranchRoot root;
    root.t = center;
    root.multiplicity = static_cast<int>(cluster.size());
    root.residual = std::abs(rest.eval(center));
    root.close = std::abs(center) <= bs.close_threshold;
    if (root.residual > 1e-10 * (1.0 + scale) &&
        root.multiplicity == 1)
      throw HolexError("branch_roots: root polishing failed to converge");
    bs.roots.push_back(root);
  }
  std::sort(bs.roots.begin(), bs.roots.end(), [](const auto& a, const auto& b) {
    if (a.t.real() != b.t.real()) return a.t.real() < b.t.real();
    return a.t.imag() < b.t.imag();
  });
  return bs;
}

namespace {

double newton_sing_search(const MultiPoly& f, const CPoint& p) {
  const int n = f.dim();
  std::vector<MultiPoly> sys;
  sys.push_back(f);
  for (int j = 0; j < n; ++j) sys.push_back(f.derivative(j));
  std::vector<std::vector<MultiPoly>> jac(sys.size());
  for (std::size_t i = 0; i < sys.size(); ++i)
    for (int j = 0; j < n; ++j) jac[i].push_back(sys[i].derivative(j));

  const double scale = 1.0 + f.coeff_scale();
  double best_dist = std::numeric_limits<double>::infinity();
  double best_norm = std::numeric_limits<double>::infinity();

  Rng rng(0x5eedu);
  for (int s = 0; s < 40; ++s) {
    CPoint z = p;
    if (s > 0)
      for (int j = 0; j < n; ++j)
        z[j] += Complex(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
    // The system vanishes to second order at degenerate singularities, so
    // Gauss-Newton converges linearly; iterate until the step underflows and
    // judge convergence by the residual at the final iterate.
    double vn = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 300; ++it) {
      CVector val(sys.size());
      CMatrix jm(sys.size(), n);
      for (std::size_t i = 0; i < sys.size(); ++i) {
        val[i] = sys[i].eval(z);
        for (int j = 0; j < n; ++j) jm(i, j) = jac[i][j].eval(z);
      }
      vn = val.norm();
      best_norm = std::min(best_norm, vn);
      CVector step = jm.colPivHouseholderQr().solve(val);
      if (!step.allFinite() || step.norm() > 10.0) break;
      z -= step;
      if (step.norm() <= 1e-15 * (1.0 + norm2(z))) break;
    }
    if (vn > 1e-8 * scale) continue;
    // Deflation polish: the system vanishes to higher order at degenerate
    // singular points, which caps plain Gauss-Newton at sqrt(eps). Append
    // the second-order partials that vanish at the stall point; the enlarged
    // system is full rank and converges quadratically.
    std::vector<MultiPoly> ext = sys;
    std::vector<std::vector<MultiPoly>> ext_jac = jac;
    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b) {
        MultiPoly second = f.derivative(a).derivative(b);
        if (std::abs(second.eval(z)) < 1e-4 * scale) {
          ext_jac.push_back({});
          for (int j = 0; j < n; ++j)
            ext_jac.back().push_back(second.derivative(j));
          ext.push_back(std::move(second));
        }
      }
    for (int it = 0; it < 60; ++it) {
      CVector val(ext.size());
      CMatrix jm(ext.size(), n);
      for (std::size_t i = 0; i < ext.size(); ++i) {
        val[i] = ext[i].eval(z);
        for (int j = 0; j < n; ++j) jm(i, j) = ext_jac[i][j].eval(z);
      }
      CVector step = jm.colPivHouseholderQr().solve(val);
      if (!step.allFinite() || step.norm() > 1.0) break;
      z -= step;
      if (step.norm() <= 1e-15 * (1.0 + norm2(z))) break;
    }
    CVector final_val(sys.size());
    for (std::size_t i = 0; i < sys.size(); ++i) final_val[i] = sys[i].eval(z);
    best_norm = std::min(best_norm, final_val.norm());
    if (final_val.norm() <= 1e-10 * scale)
      best_dist = std::min(best_dist, norm2(z - p));
  }
  if (std::isfinite(best_dist)) return best_dist;
  // No singular point: the system value is bounded away from zero.
  if (best_norm >= 0.05 * scale) return std::numeric_limits<double>::infinity();
  throw HolexError("sing_distance: Newton search did not converge");
}

}  // namespace

double sing_distance(const MultiPoly& f, const CPoint& p,
                     const SingularLocus& locus) {
  switch (locus.kind) {
    case SingularLocus::Kind::Smooth:
      return std::numeric_limits<double>::infinity();
    case SingularLocus::Kind::Points: {
      double d = std::numeric_limits<double>::infinity();
      for (const CPoint& s : locus.points) d = std::min(d, norm2(p - s));
      return d;
    }
    case SingularLocus::Kind::NewtonSearch:
      return newton_sing_search(f, p);
  }
  throw HolexError("sing_distance: bad locus kind");
}

int multiplicity_at(const MultiPoly& f, const CPoint& p_sing,
                    const CVector& dir) {
  const UniPoly rest = f.restrict_line(p_sing, dir);
  if (rest.is_zero(1e-14 * (1.0 + f.coeff_scale())))
    throw HolexError("multiplicity_at: restriction identically zero");
  return rest.vanishing_order(1e-9);
}

Classification classify_point(const MultiPoly& f, const DefiningFunction& df,
                              const CPoint& p, const ClassifyParams& params,
                              const SingularLocus& locus) {
  Classification out;
  out.sing_dist = sing_distance(f, p, locus);

  const double rho_p = std::abs(df.rho(p));
  const double sqrt_cr = std::sqrt(params.c * rho_p);
  const double radius = params.probe_radius_factor * params.metric_C *
                        params.metric_C * sqrt_cr;
  const Frame fr = frame_at(df, p);

  // Probe slice bases spread over the normal disc of the ball at p.
  std::vector<CPoint> bases{p};
  const double r = params.c * rho_p;
  for (int ring = 1; ring <= params.probe_lambda_rings; ++ring)
    for (int ph = 0; ph < params.probe_lambda_phases; ++ph) {
      const double th = 2.0 * kPi * (ph + 0.5 * (ring % 2)) /
                        params.probe_lambda_phases;
      const Complex lam = (r * ring / (params.probe_lambda_rings + 1.0)) *
                          Complex(std::cos(th), std::sin(th));
      bases.push_back(p + lam * fr.eta);
    }

  bool any_roots = false;
  int best = -1, best_close = -1, best_total = -1;
  std::vector<BranchSet> sets;
  sets.reserve(bases.size());
  for (const CPoint& b : bases) {
    sets.push_back(branch_roots(f, df, p, b, radius, params.c));
    const BranchSet& bs = sets.back();
    int total = 0;
    for (const auto& rt : bs.roots) total += rt.multiplicity;
    if (total > 0) any_roots = true;
    if (bs.close_count() > best_close ||
        (bs.close_count() == best_close && total > best_total)) {
      best = static_cast<int>(sets.size()) - 1;
      best_close = bs.close_count();
      best_total = total;
    }
  }

  if (out.sing_dist <=
      params.near_sing_factor * params.metric_C * sqrt_cr) {
    out.regime = Regime::NearSing;
    out.primary = sets[best];
    // Every branch counts as close near the singularity.
    for (auto& rt : out.primary.roots) rt.close = true;
    out.j_count = 0;
    for (const auto& rt : out.primary.roots) out.j_count += rt.multiplicity;
    return out;
  }
  if (!any_roots) {
    out.regime = Regime::NoVariety;
    out.primary = sets[0];
    out.j_count = 0;
    return out;
  }
  out.regime = Regime::Far;
  out.primary = sets[best];
  out.j_count = best_close;
  return out;
}

CPoint track_to_boundary(const MultiPoly& f, const DefiningFunction& df,
                         CPoint on_x, double tol) {
  const double fscale = 1.0 + f.coeff_scale();
  if (std::abs(f.eval(on_x)) > 1e-7 * fscale)
    throw HolexError("track_to_boundary: start point is not on X");
  auto snap = [&](const CPoint& base, const Frame& fr,
                  double radius) -> std::optional<CPoint> {
    const UniPoly rest = f.restrict_line(base, fr.w);
    if (rest.degree(1e-14) < 1) return std::nullopt;
    Complex best;
    double bd = std::numeric_limits<double>::infinity();
    for (Complex rt : poly_roots(rest))
      if (std::abs(rt) < radius && std::abs(rt) < bd) {
        bd = std::abs(rt);
        best = rt;
      }
    if (!std::isfinite(bd)) return std::nullopt;
    return base + best * fr.w;
  };

  for (int it = 0; it < 400; ++it) {
    const double rho = df.rho(on_x);
    if (std::abs(rho) <= tol) return on_x;
    const Frame fr = frame_at(df, on_x);
    double h = std::min(0.25 * std::abs(rho) / norm2(df.grad(on_x)), 0.05);
    // Step outward along the normal and snap back onto X; bisect on
    // overshoot so rho increases monotonically toward 0.
    bool moved = false;
    for (int half = 0; half < 30 && !moved; ++half, h *= 0.5) {
      const CPoint base = on_x + Complex(h, 0.0) * fr.eta;
      const auto next = snap(base, fr, std::max(10.0 * h, 1e-3));
      if (!next) continue;
      const double rho_next = df.rho(*next);
      if (rho_next > rho && rho_next <= tol) {
        on_x = *next;
        moved = true;
      }
    }
    if (!moved)
      throw HolexError("track_to_boundary: failed to advance toward bD");
  }
  throw HolexError("track_to_boundary: iteration cap reached");
}

TransversalityReport transversality_check(const MultiPoly& f,
                                          const DefiningFunction& df,
                                          const std::vector<CPoint>& samples,
                                          double tol) {
  if (samples.empty())
    throw HolexError("transversality_check: no boundary samples supplied");
  const int n = f.dim();
  std::vector<MultiPoly> grad_polys;
  for (int j = 0; j < n; ++j) grad_polys.push_back(f.derivative(j));

  auto tangent_at = [&](const CPoint& z) -> CVector {
    CVector g(n);
    for (int j = 0; j < n; ++j) g[j] = grad_polys[j].eval(z);
    if (n == 2) {
      CVector v(2);
      v[0] = -g[1];
      v[1] = g[0];
      return v / norm2(v);
    }
    // Kernel of the gradient row: last right-singular vector.
    Eigen::JacobiSVD<CMatrix> svd(g.transpose(), Eigen::ComputeFullV);
    CVector v = svd.matrixV().col(n - 1);
    return v / norm2(v);
  };

  TransversalityReport rep;
  rep.tolerance = tol;
  rep.pass = true;
  for (const CPoint& p : samples) {
    const Frame fr = frame_at(df, p);
    // Tangent-cone directions: limits of tangents at regular points of X
    // approaching p. Nearby points of X are found by snapping slices onto X;
    // slices run both along w_p from inward bases and along the normal from
    // tangential bases, so varieties parallel to either direction are seen.
    std::vector<CVector> cone;
    for (double s : {1e-2, 5e-3, 2.5e-3, 1.25e-3, 6.25e-4}) {
      std::vector<std::pair<CPoint, CVector>> probes = {
          {p - Complex(s, 0.0) * fr.eta, fr.w},
          {p + Complex(s, 0.0) * fr.w, fr.eta},
      };
      for (const auto& [base, dir] : probes) {
        const UniPoly rest = f.restrict_line(base, dir);
        if (rest.degree(1e-14) < 1) continue;
        for (Complex rt : poly_roots(rest)) {
          if (std::abs(rt) > 0.5) continue;
          const CPoint zx = base + rt * dir;
          if (norm2(zx - p) > 0.4 || norm2(zx - p) < 1e-12) continue;
          CVector g(n);
          for (int j = 0; j < n; ++j) g[j] = grad_polys[j].eval(zx);
          if (norm2(g) < 1e-10) continue;  // not a regular point
          CVector v = tangent_at(zx);
          // Align the phase against previous estimates before collecting.
          bool matched = false;
          for (CVector& c : cone) {
            const Complex ip = hdot(v, c);
            if (std::abs(ip) > 0.9) {
              c = (v * std::conj(ip) / std::abs(ip) + c) * 0.5;
              c /= norm2(c);
              matched = true;
              break;
            }
          }
          if (!matched) cone.push_back(v);
        }
      }
    }
    if (cone.empty())
      throw HolexError("transversality_check: no regular points found near a "
                       "boundary sample");

    CMatrix m(static_cast<int>(cone.size()) + n - 1, n);
    for (int d = 1; d < n; ++d) m.row(d - 1) = fr.eps[d].transpose();
    for (std::size_t i = 0; i < cone.size(); ++i)
      m.row(n - 1 + static_cast<int>(i)) = cone[i].transpose();
    Eigen::JacobiSVD<CMatrix> svd(m);
    TransversalitySample ts;
    ts.p = p;
    ts.min_singular_value = svd.singularValues().minCoeff();
    ts.pass = ts.min_singular_value > tol;
    rep.pass = rep.pass && ts.pass;
    rep.samples.push_back(std::move(ts));
  }
  return rep;
}

std::vector<CPoint> sample_variety_points(const MultiPoly& f,
                                          const DefiningFunction& df,
                                          double rho_lo, double rho_hi,
                                          int count, std::uint64_t seed,
                                          int max_attempts) {
  Rng rng(seed);
  std::vector<CPoint> out;
  const int n = df.dim();
  for (int att = 0; att < max_attempts && static_cast<int>(out.size()) < count;
       ++att) {
    const CVector dir = rng.unit_vector(n);
    const double t = rng.uniform(rho_lo, rho_hi);
    CPoint base;
    try {
      base = df.level_radius(dir, t) * dir;
    } catch (const HolexError&) {
      continue;
    }
    Frame fr;
    try {
      fr = frame_at(df, base);
    } catch (const HolexError&) {
      continue;
    }
    const UniPoly rest = f.restrict_line(base, fr.w);
    if (rest.degree(1e-14) < 1) continue;
    for (Complex rt : poly_roots(rest)) {
      if (std::abs(rt) > 0.5) continue;
      const CPoint zx = base + rt * fr.w;
      const double r = df.rho(zx);
      if (r >= rho_lo && r < rho_hi) {
        out.push_back(zx);
        if (static_cast<int>(out.size()) >= count) break;
      }
    }
  }
  if (static_cast<int>(out.size()) < count)
    throw HolexError("sample_variety_points: attempt budget exhausted");
  return out;
}

}  // namespace holex
