#include "holex/kernels.hpp"

#include <cmath>

namespace holex {

Complex levi_polynomial(const DefiningFunction& df, const CPoint& zeta,
                        const CPoint& z) {
  const RhoJet jet = df.rho_jet(zeta, 2);
  const CVector d = z - zeta;
  Complex f = 0.0;
  for (int j = 0; j < df.dim(); ++j) f += jet.grad[j] * d[j];
  Complex quad = 0.0;
  for (int j = 0; j < df.dim(); ++j)
    for (int k = 0; k < df.dim(); ++k) quad += jet.pure(j, k) * d[j] * d[k];
  return f - 0.5 * quad;
}

SupportValue support_function(const DefiningFunction& df, const CPoint& zeta,
                              const CPoint& z) {
  if (!df.levi_global())
    throw HolexError("support_function: domain not certified Levi-global");
  const RhoJet jet = df.rho_jet(zeta, 2);
  const CVector d = z - zeta;
  SupportValue sv;
  sv.coeffs = CVector(df.dim());
  for (int j = 0; j < df.dim(); ++j) {
    Complex corr = 0.0;
    for (int k = 0; k < df.dim(); ++k) corr += jet.pure(j, k) * d[k];
    sv.coeffs[j] = 0.5 * (jet.grad[j] - 0.5 * corr);
  }
  sv.g = 0.0;
  for (int j = 0; j < df.dim(); ++j) sv.g += sv.coeffs[j] * d[j];
  return sv;
}

CVector HeferForm::eval(const CPoint& zeta, const CPoint& z) const {
  CVector both(2 * n);
  both.head(n) = zeta;
  both.tail(n) = z;
  CVector out(n);
  for (int j = 0; j < n; ++j) out[j] = coeffs[j].eval(both);
  return out;
}

std::vector<HeferForm::ZPoly> HeferForm::collapse_z(const CPoint& zeta) const {
  std::vector<ZPoly> out(n);
  std::map<std::uint32_t, Complex> acc;
  for (int j = 0; j < n; ++j) {
    acc.clear();
    for (const auto& [e, c] : coeffs[j].terms()) {
      Complex v = c;
      std::uint32_t key = 0;
      for (int l = 0; l < n; ++l) {
        for (int k = 0; k < e[l]; ++k) v *= zeta[l];
        key |= static_cast<std::uint32_t>(e[n + l] & 0xff) << (8 * l);
      }
      acc[key] += v;
    }
    out[j].assign(acc.begin(), acc.end());
  }
  return out;
}

CVector HeferForm::eval_collapsed(const std::vector<ZPoly>& zp,
                                  const CPoint& z) {
  const int n = static_cast<int>(zp.size());
  CVector out(n);
  for (int j = 0; j < n; ++j) {
    Complex acc = 0.0;
    for (const auto& [key, c] : zp[j]) {
      Complex v = c;
      for (int l = 0; l < n; ++l) {
        const int e = static_cast<int>((key >> (8 * l)) & 0xff);
        for (int k = 0; k < e; ++k) v *= z[l];
      }
      acc += v;
    }
    out[j] = acc;
  }
  return out;
}

HeferForm hefer_raw(const MultiPoly& f) {
  const int n = f.dim();
  HeferForm hf;
  hf.n = n;
  hf.jet_order = -1;
  for (int j = 0; j < n; ++j) {
    MultiPoly bj(2 * n);
    for (const auto& [e, c] : f.terms()) {
      if (e[j] == 0) continue;
      // (z_j^a - zeta_j^a) = (z_j - zeta_j) sum_i z_j^i zeta_j^{a-1-i}
      for (int i = 0; i < e[j]; ++i) {
        std::vector<int> exps(2 * n, 0);
        for (int l = 0; l < j; ++l) exps[n + l] = e[l];
        for (int l = j + 1; l < n; ++l) exps[l] = e[l];
        exps[n + j] = i;
        exps[j] = e[j] - 1 - i;
        bj.add_term(exps, c);
      }
    }
    hf.coeffs.push_back(std::move(bj));
  }
  return hf;
}

namespace {

MultiPoly embed_zeta(const MultiPoly& p) {
  const int n = p.dim();
  MultiPoly out(2 * n);
  for (const auto& [e, c] : p.terms()) {
    std::vector<int> exps(2 * n, 0);
    for (int l = 0; l < n; ++l) exps[l] = e[l];
    out.add_term(exps, c);
  }
  return out;
}

MultiPoly substitute_z_by_zeta(const MultiPoly& p) {
  const int n = p.dim() / 2;
  MultiPoly out(n);
  for (const auto& [e, c] : p.terms()) {
    std::vector<int> exps(n, 0);
    for (int l = 0; l < n; ++l) exps[l] = e[l] + e[n + l];
    out.add_term(exps, c);
  }
  return out;
}

MultiPoly pow_z_minus_zeta(int n, const std::vector<int>& alpha) {
  MultiPoly out = MultiPoly::constant(2 * n, 1.0);
  for (int i = 0; i < n; ++i) {
    MultiPoly lin(2 * n);
    std::vector<int> ez(2 * n, 0), ezeta(2 * n, 0);
    ez[n + i] = 1;
    ezeta[i] = 1;
    lin.add_term(ez, 1.0);
    lin.add_term(ezeta, -1.0);
    for (int m = 0; m < alpha[i]; ++m) out = out * lin;
  }
  return out;
}

void for_each_multi_index(int n, int order,
                          const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> alpha(n, 0);
  auto rec = [&](auto&& self, int pos, int left) -> void {
    if (pos == n) {
      fn(alpha);
      return;
    }
    for (int e = 0; e <= left; ++e) {
      alpha[pos] = e;
      self(self, pos + 1, left - e);
    }
    alpha[pos] = 0;
  };
  rec(rec, 0, order);
}

double factorial_of(const std::vector<int>& alpha) {
  double f = 1.0;
  for (int a : alpha)
    for (int i = 2; i <= a; ++i) f *= i;
  return f;
}

}  // namespace

std::vector<MultiPoly> hefer_jet_truncation(const MultiPoly& f, int k) {
  const int n = f.dim();
  std::vector<MultiPoly> out;
  for (int j = 0; j < n; ++j) {
    MultiPoly acc(2 * n);
    for_each_multi_index(n, k, [&](const std::vector<int>& alpha) {
      int aj = 0;
      for (int x : alpha) aj += x;
      MultiPoly d = f.derivative(alpha).derivative(j);
      if (d.is_zero()) return;
      const double w = 1.0 / (factorial_of(alpha) * (aj + 1));
      acc += (embed_zeta(d) * pow_z_minus_zeta(n, alpha)) * Complex(w);
    });
    out.push_back(std::move(acc));
  }
  return out;
}

HeferForm hefer_jet(const MultiPoly& f, int k) {
  if (k < 0) throw HolexError("hefer_jet: negative jet order");
  const int n = f.dim();
  HeferForm raw = hefer_raw(f);
  std::vector<MultiPoly> jets = hefer_jet_truncation(f, k);

  HeferForm out;
  out.n = n;
  out.jet_order = k;
  for (int j = 0; j < n; ++j) {
    MultiPoly bj = raw.coeffs[j];
    // Subtract the z-Taylor polynomial of the raw coefficient at z = zeta.
    for_each_multi_index(n, k, [&](const std::vector<int>& alpha) {
      MultiPoly d = raw.coeffs[j];
      for (int v = 0; v < n; ++v)
        for (int i = 0; i < alpha[v]; ++i) d = d.derivative(n + v);
      MultiPoly at = substitute_z_by_zeta(d);
      if (at.is_zero()) return;
      bj -= (embed_zeta(at) * pow_z_minus_zeta(n, alpha)) *
            Complex(1.0 / factorial_of(alpha));
    });
    bj += jets[j];
    bj.prune(1e-15);
    out.coeffs.push_back(std::move(bj));
  }
  return out;
}

namespace {

/// Monotone stretch S(u) = R sinh(sigma u) / sinh(sigma) with S'(0) matching
/// the requested focal resolution s0; the grid concentrates near the focus.
struct SinhMap {
  double big_r = 1.0, sigma = 1.0;

  SinhMap(double reach, double s0) : big_r(reach) {
    // solve R sigma / sinh(sigma) = s0 for sigma (decreasing in sigma)
    s0 = std::min(s0, 0.99 * reach);
    double lo = 1e-6, hi = 60.0;
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      (big_r * mid / std::sinh(mid) > s0 ? lo : hi) = mid;
    }
    sigma = 0.5 * (lo + hi);
  }
  double value(double u) const {
    return big_r * std::sinh(sigma * u) / std::sinh(sigma);
  }
  double deriv(double u) const {
    return big_r * sigma * std::cosh(sigma * u) / std::sinh(sigma);
  }
};

}  // namespace

Complex integrate_domain(const DefiningFunction& df, const CPoint& focus,
                         const std::function<Complex(const CPoint&)>& f,
                         const DomainQuadParams& params) {
  const int n = df.dim();
  if (n != 2)
    throw HolexError("integrate_domain: implemented for n = 2");
  const Frame fr = frame_at(df, focus);
  const double a = std::abs(df.rho(focus));
  if (a <= 0.0) throw HolexError("integrate_domain: focus on the boundary");

  // A box of half-width `reach` in the focus frame covers the domain.
  const double reach = norm2(focus) + df.bounding_radius() + 1e-3;
  const SinhMap mn(reach, params.base_scale * a);
  const SinhMap mt(reach, std::sqrt(params.base_scale * a));
  const int pn = params.normal_pts * 2;  // two real normal coordinates
  const int pt = params.tangential_pts * 2;

  Complex acc = 0.0;
  const double hn = 2.0 / pn, ht = 2.0 / pt;
  for (int i0 = 0; i0 < pn; ++i0) {
    const double u0 = -1.0 + (i0 + 0.5) * hn;
    for (int i1 = 0; i1 < pn; ++i1) {
      const double u1 = -1.0 + (i1 + 0.5) * hn;
      const Complex lam(mn.value(u0), mn.value(u1));
      const double wl = mn.deriv(u0) * mn.deriv(u1);
      for (int i2 = 0; i2 < pt; ++i2) {
        const double u2 = -1.0 + (i2 + 0.5) * ht;
        for (int i3 = 0; i3 < pt; ++i3) {
          const double u3 = -1.0 + (i3 + 0.5) * ht;
          const Complex tau(mt.value(u2), mt.value(u3));
          const CPoint zeta = focus + lam * fr.eta + tau * fr.eps[1];
          if (df.rho(zeta) >= 0.0) continue;
          acc += f(zeta) * (wl * mt.deriv(u2) * mt.deriv(u3));
        }
      }
    }
  }
  return acc * (hn * hn * ht * ht);
}

KernelValue ba_kernel_eval(KernelContext& ctx, const CPoint& zeta,
                           const CPoint& z, int form_degree) {
  const DefiningFunction& df = *ctx.df;
  const int n = df.dim();
  KernelValue kv;
  kv.rho = df.rho(zeta);
  if (kv.rho >= 0.0) {
    kv.outside = true;
    kv.density = 0.0;
    return kv;
  }
  const SupportValue sv = support_function(df, zeta, z);
  kv.g = sv.g;
  kv.g_coeffs = sv.coeffs;
  const Complex den = sv.g + kv.rho;
  if (std::abs(den) < ctx.denominator_floor) {
    kv.floor_breach = true;
    ++ctx.floor_breaches;
    kv.density = 0.0;
    return kv;
  }
  kv.ratio = kv.rho / den;

  const RhoJet jet = df.rho_jet(zeta, 2);
  kv.m = CMatrix(n, n);
  for (int a = 0; a < n; ++a)
    for (int e = 0; e < n; ++e) {
      const Complex rho_bar_e = std::conj(jet.grad[e]);
      kv.m(a, e) = 0.5 * jet.mixed(a, e) / kv.rho -
                   sv.coeffs[a] * rho_bar_e / (kv.rho * kv.rho);
    }

  Complex ratio_pow = 1.0;
  for (int i = 0; i < ctx.weight_power + form_degree; ++i) ratio_pow *= kv.ratio;
  const Complex det =
      (n == 2) ? kv.m(0, 0) * kv.m(1, 1) - kv.m(0, 1) * kv.m(1, 0)
               : kv.m.determinant();
  kv.density = ctx.constant * ratio_pow * det;
  return kv;
}

KernelDbar ba_kernel_dbar(const KernelContext& ctx, const CPoint& zeta,
                          const CPoint& z, const KernelValue& kv) {
  const DefiningFunction& df = *ctx.df;
  const int n = df.dim();
  const RhoJet jet = df.rho_jet(zeta, 2);
  const double rho = kv.rho;
  const Complex den = kv.g + rho;

  KernelDbar kd;
  kd.dbar_g = CVector::Zero(n);
  for (int s = 0; s < n; ++s) {
    Complex acc = 0.0;
    for (int j = 0; j < n; ++j) acc += jet.mixed(j, s) * (z[j] - zeta[j]);
    kd.dbar_g[s] = 0.5 * acc;
  }
  kd.dbar_ratio = CVector(n);
  for (int s = 0; s < n; ++s) {
    const Complex rho_bar_s = std::conj(jet.grad[s]);
    kd.dbar_ratio[s] = (rho_bar_s * kv.g - rho * kd.dbar_g[s]) / (den * den);
  }
  kd.dbar_m.assign(n, CMatrix(n, n));
  for (int s = 0; s < n; ++s) {
    const Complex rho_bar_s = std::conj(jet.grad[s]);
    for (int a = 0; a < n; ++a)
      for (int e = 0; e < n; ++e) {
        const Complex rho_bar_e = std::conj(jet.grad[e]);
        const Complex dbar_g_a = 0.5 * jet.mixed(a, s);
        const Complex dbar_rho_bar_e = std::conj(jet.pure(e, s));
        kd.dbar_m[s](a, e) =
            -0.5 * jet.mixed(a, e) * rho_bar_s / (rho * rho) -
            (dbar_g_a * rho_bar_e + kv.g_coeffs[a] * dbar_rho_bar_e) /
                (rho * rho) +
            2.0 * kv.g_coeffs[a] * rho_bar_e * rho_bar_s / (rho * rho * rho);
      }
  }
  return kd;
}

Complex calibrate_constant(KernelContext& ctx, const CPoint& probe) {
  const int n = ctx.df->dim();
  ctx.constant = 1.0;
  auto integrand = [&](const CPoint& zeta) {
    KernelValue kv = ba_kernel_eval(ctx, zeta, probe, n);
    return kv.density;
  };
  const Complex base = integrate_domain(*ctx.df, probe, integrand, ctx.quad);
  DomainQuadParams fine = ctx.quad;
  fine.normal_pts = ctx.quad.normal_pts * 3 / 2;
  fine.tangential_pts = ctx.quad.tangential_pts * 3 / 2;
  const Complex refined = integrate_domain(*ctx.df, probe, integrand, fine);
  if (std::abs(refined) < 1e-14 ||
      std::abs(base - refined) > 0.05 * std::abs(refined))
    throw HolexError("calibrate_constant: quadrature did not converge");
  // The constant matches the context quadrature, so the reproducing integral
  // equals one at the probe by construction; the refinement is only the
  // convergence gate.
  ctx.constant = 1.0 / base;
  return ctx.constant;
}

Complex kernel_reproduce(KernelContext& ctx,
                         const std::function<Complex(const CPoint&)>& h,
                         const CPoint& z) {
  const int n = ctx.df->dim();
  auto integrand = [&](const CPoint& zeta) {
    KernelValue kv = ba_kernel_eval(ctx, zeta, z, n);
    return h(zeta) * kv.density;
  };
  return integrate_domain(*ctx.df, z, integrand, ctx.quad);
}

}  // namespace holex
