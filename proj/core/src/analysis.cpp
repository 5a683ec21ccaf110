#include "holex/analysis.hpp"

#include <cmath>
#include <numeric>

#include "holex/rng.hpp"

namespace holex {

NormEstimate lq_norm_estimate(const ScalarField& field,
                              const DefiningFunction& df, double q, int budget,
                              std::uint64_t seed, double eps0, int bands) {
  if (q < 1.0) throw HolexError("lq_norm_estimate: q must be >= 1");
  if (budget <= 0) throw HolexError("lq_norm_estimate: zero budget");
  const int n = df.dim();
  if (n != 2) throw HolexError("lq_norm_estimate: implemented for n = 2");
  const int dim_r = 2 * n;

  // Band edges in |rho|: interior band above eps0, dyadic shell bands, and
  // the closing sliver down to the boundary.
  std::vector<double> edges{1.0 + 1e-9};
  for (int m = 0; m <= bands; ++m) edges.push_back(eps0 * std::pow(0.5, m));
  edges.push_back(0.0);

  Rng rng(seed);
  const int dirs = std::max(8, budget / (4 * (bands + 2)));
  const int per_band = std::max(2, budget / (dirs * (bands + 2)));

  NormEstimate est;
  est.kind = NormEstimate::Kind::Lq;
  est.q = q;
  est.budget = budget;
  est.seed = seed;
  est.strata.assign(edges.size() - 1, {0.0, 0.0});

  const double sphere_area = 2.0 * kPi * kPi;  // area of S^3
  double total = 0.0;
  for (int d = 0; d < dirs; ++d) {
    const CVector xi = rng.unit_vector(n);
    for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
      const double r_lo =
          (edges[b] >= 1.0) ? 0.0
                            : df.level_radius(xi, -std::min(edges[b], 1.0));
      const double r_hi = df.level_radius(xi, -edges[b + 1]);
      if (r_hi <= r_lo) continue;
      const double p_lo = std::pow(r_lo, dim_r), p_hi = std::pow(r_hi, dim_r);
      double band_acc = 0.0;
      for (int s = 0; s < per_band; ++s) {
        const double u = p_lo + (p_hi - p_lo) * rng.uniform();
        const double r = std::pow(u, 1.0 / dim_r);
        band_acc += std::pow(std::abs(field(r * xi)), q);
      }
      const double band_integral = (p_hi - p_lo) / dim_r * band_acc / per_band;
      total += band_integral;
      est.strata[b].first = edges[b + 1];
      est.strata[b].second += sphere_area * band_integral / dirs;
    }
  }
  total = sphere_area * total / dirs;
  est.value = std::pow(std::max(total, 0.0), 1.0 / q);
  return est;
}

NormEstimate bmo_gradient_bound(const ScalarField& field,
                                const DefiningFunction& df, int budget,
                                std::uint64_t seed, double eps0,
                                double fd_step) {
  if (fd_step < 1e-12) throw HolexError("bmo_gradient_bound: step underflow");
  const int n = df.dim();
  Rng rng(seed);
  NormEstimate est;
  est.kind = NormEstimate::Kind::BmoGradient;
  est.budget = budget;
  est.seed = seed;
  double sup = 0.0;
  for (int i = 0; i < budget; ++i) {
    const CVector xi = rng.unit_vector(n);
    const double t = -eps0 * std::pow(2.0, -6.0 * rng.uniform());
    const CPoint z = df.level_radius(xi, t) * xi;
    double g2 = 0.0;
    for (int j = 0; j < n; ++j) {
      CVector e = CVector::Zero(n);
      e[j] = 1.0;
      const Complex dx = (field(z + Complex(fd_step, 0) * e) -
                          field(z - Complex(fd_step, 0) * e)) /
                         (2.0 * fd_step);
      const Complex dy = (field(z + Complex(0, fd_step) * e) -
                          field(z - Complex(0, fd_step) * e)) /
                         (2.0 * fd_step);
      g2 += std::norm(dx) + std::norm(dy);
    }
    sup = std::max(sup, std::abs(t) * std::sqrt(g2));
  }
  est.value = sup;
  return est;
}

Th0Report th0_hypothesis_check(const GlobalExtension& ext, const MultiPoly& f,
                               const Th0Params& params) {
  const DefiningFunction& df = ext.domain();
  const int n = df.dim();
  Rng rng(params.seed);
  Th0Report rep;

  std::vector<std::vector<int>> alphas;  // 1 <= |alpha| <= k
  {
    std::vector<int> a(n, 0);
    auto rec = [&](auto&& self, int pos, int left) -> void {
      if (pos == n) {
        int s = 0;
        for (int x : a) s += x;
        if (s >= 1) alphas.push_back(a);
        return;
      }
      for (int e = 0; e <= left; ++e) {
        a[pos] = e;
        self(self, pos + 1, left - e);
      }
      a[pos] = 0;
    };
    rec(rec, 0, params.k);
  }

  // (i) |rho|^N tilde_h (and dbar proxies) collapse along boundary rays.
  {
    double worst_ratio = 0.0;
    int rays_used = 0;
    for (int attempt = 0;
         attempt < 6 * params.ray_count && rays_used < params.ray_count;
         ++attempt) {
      const CVector xi =
          params.ray_dirs.empty()
              ? rng.unit_vector(n)
              : params.ray_dirs[attempt % params.ray_dirs.size()];
      std::vector<double> profile;
      for (int j = 0; j < params.ray_levels; ++j) {
        const double t = -params.rho_hi *
                         std::pow(params.rho_lo / params.rho_hi,
                                  j / (params.ray_levels - 1.0));
        try {
          const CPoint z = df.level_radius(xi, t) * xi;
          double proxy = std::abs(ext.eval(z));
          for (const auto& a : alphas)
            proxy = std::max(proxy, std::abs(ext.dbar_frame(z, a)));
          profile.push_back(std::pow(std::abs(t), params.vanish_order) * proxy);
        } catch (const HolexError&) {
          break;  // the ray left the covered region; keep the deep part
        }
      }
      if (static_cast<int>(profile.size()) < (params.ray_levels + 1) / 2 ||
          profile.size() < 3)
        continue;
      ++rays_used;
      double peak = 0.0;
      for (double v : profile) peak = std::max(peak, v);
      if (peak > 0.0)
        worst_ratio = std::max(worst_ratio, profile.back() / peak);
      if (rep.ray_profile.empty()) rep.ray_profile = profile;
    }
    if (rays_used == 0)
      throw HolexError("th0_hypothesis_check: no usable boundary rays");
    rep.vanishing = {"th0.i.vanishing", worst_ratio, params.decay_factor,
                     worst_ratio <= params.decay_factor};
  }

  // (ii) weighted-derivative L^q norms are finite and budget-stable.
  {
    bool pass = true;
    double worst = 0.0;
    for (const auto& a : alphas) {
      const double weight_exp =
          a[0] + 0.5 * std::accumulate(a.begin() + 1, a.end(), 0);
      const int ord = std::accumulate(a.begin(), a.end(), 0);
      ScalarField field = [&, ord](const CPoint& z) -> Complex {
        if (!ext.fd_stencil_covered(z, ord)) return 0.0;
        return std::pow(std::abs(df.rho(z)), weight_exp) *
               std::abs(ext.dbar_frame(z, a));
      };
      const NormEstimate half = lq_norm_estimate(
          field, df, params.q, params.lq_budget / 2, params.seed + 1);
      const NormEstimate full = lq_norm_estimate(
          field, df, params.q, params.lq_budget, params.seed + 2);
      rep.weighted_values.push_back(full.value);
      worst = std::max(worst, full.value);
      const double lo = std::min(half.value, full.value);
      const double hi = std::max(half.value, full.value);
      // Stability is assessable only when both budgets see the mass;
      // values at the finite-difference noise floor are stable zeros.
      if (!std::isfinite(full.value) || (lo > 1e-6 && hi / lo > 4.0))
        pass = false;
    }
    rep.weighted_lq = {"th0.ii.weighted_lq", worst, 0.0, pass};
  }

  // (iii) dbar residuals on X cap D.
  {
    const auto xs =
        sample_variety_points(f, df, -params.rho_hi, -params.rho_lo,
                              params.on_x_samples, params.seed + 3);
    double worst = 0.0;
    int used = 0;
    for (const CPoint& x : xs) {
      if (!ext.fd_stencil_covered(x, params.k)) continue;
      ++used;
      for (const auto& a : alphas)
        worst = std::max(worst, std::abs(ext.dbar_frame(x, a)));
    }
    if (used == 0)
      throw HolexError("th0_hypothesis_check: no covered on-X samples");
    rep.on_x = {"th0.iii.on_x_dbar", worst, params.on_x_tol,
                worst <= params.on_x_tol};
  }

  rep.pass = rep.vanishing.pass && rep.weighted_lq.pass && rep.on_x.pass;
  return rep;
}

SchurReport schur_kernel_check(const DefiningFunction& df,
                               const SchurParams& params) {
  const int n = df.dim();
  const int np = params.weight_power;
  Rng rng(params.seed);
  std::vector<CPoint> probes;
  for (int i = 0; i < params.z_probes; ++i) {
    const CVector xi = rng.unit_vector(n);
    const double t = -params.shell_depth * std::pow(2.0, -5.0 * rng.uniform());
    probes.push_back(df.level_radius(xi, t) * xi);
  }

  SchurReport rep;
  rep.finite = true;
  for (double eps : params.eps) {
    if (!(eps > 0.0 && eps < 1.0))
      throw HolexError("schur_kernel_check: eps must lie in (0,1)");
    double c_direct = 0.0, c_sym = 0.0;
    for (const CPoint& z : probes) {
      const double rho_z = std::abs(df.rho(z));
      const Frame fz = frame_at(df, z);
      auto direct = [&](const CPoint& zeta) -> Complex {
        const double rho_c = std::abs(df.rho(zeta));
        const double del = pseudo_distance(fz, zeta);
        return std::pow(rho_c, np - eps) /
               std::pow(rho_c + rho_z + del, np + n + 1);
      };
      auto symmetric = [&](const CPoint& w) -> Complex {
        const double rho_w = std::abs(df.rho(w));
        const double del = pseudo_distance(fz, w);
        return std::pow(rho_z, np) * std::pow(rho_w, -eps) /
               std::pow(rho_z + rho_w + del, np + n + 1);
      };
      const double i1 = std::abs(integrate_domain(df, z, direct, params.quad));
      const double i2 =
          std::abs(integrate_domain(df, z, symmetric, params.quad));
      c_direct = std::max(c_direct, std::pow(rho_z, eps) * i1);
      c_sym = std::max(c_sym, std::pow(rho_z, eps) * i2);
    }
    if (!std::isfinite(c_direct) || !std::isfinite(c_sym)) rep.finite = false;
    rep.entries.push_back({eps, c_direct, c_sym});
  }
  return rep;
}

DiscConditionReport disc_condition_check(const GlobalExtension& ext,
                                         const DiscParams& params) {
  const DefiningFunction& df = ext.domain();
  Rng rng(params.seed);
  DiscConditionReport rep;
  rep.mode_sup = params.mode_sup;
  rep.q = params.q;

  for (std::size_t b = 0; b < ext.pieces().size(); ++b) {
    const BallPiece& bp = ext.pieces()[b];
    if (!bp.interp) continue;
    const double rho_p = std::abs(df.rho(bp.center()));
    const double radius = params.radius_factor * params.metric_C *
                          params.metric_C * std::sqrt(params.c * rho_p);

    DiscConditionReport::Ball ball;
    ball.index = static_cast<int>(b);
    for (int s = 0; s < params.bases_per_ball; ++s) {
      CPoint base = bp.center();
      base += Complex(rng.uniform(-0.5, 0.5) * bp.radius,
                      rng.uniform(-0.5, 0.5) * bp.radius) *
              bp.frame.eta;
      base += rng.unit_complex() * (0.4 * std::sqrt(bp.radius) * rng.uniform()) *
              bp.frame.w;

      double r = radius;
      for (int guard = 0; guard < 40; ++guard) {
        bool inside = true;
        for (int i = 0; i < params.circle_samples && inside; ++i) {
          const double th = 2.0 * kPi * i / params.circle_samples;
          inside = df.rho(base + r * Complex(std::cos(th), std::sin(th)) *
                                     bp.frame.w) < 0.0;
        }
        if (inside) break;
        r *= 0.8;
        ++ball.shranks;
      }

      LocalExtension::Slice slice;
      try {
        slice = bp.interp->prepare_slice(base);
      } catch (const HolexError&) {
        continue;  // slice misses the branches; no disc data here
      }
      for (int i = 0; i < params.circle_samples; ++i) {
        const double th = 2.0 * kPi * i / params.circle_samples;
        for (double frac : {1.0, 0.6, 0.25}) {
          const Complex t = frac * r * Complex(std::cos(th), std::sin(th));
          ball.sup =
              std::max(ball.sup, std::abs(bp.interp->eval_slice(slice, t)));
        }
      }
    }
    const double vol = kPi * kPi / 3.0 * std::pow(bp.radius, 3);  // n = 2
    ball.c_j = vol * std::pow(ball.sup, params.q);
    rep.sup_max = std::max(rep.sup_max, ball.sup);
    rep.c_sum += ball.c_j;
    rep.balls.push_back(ball);
  }
  if (rep.balls.empty())
    throw HolexError("disc_condition_check: no interpolation balls");
  return rep;
}

}  // namespace holex
