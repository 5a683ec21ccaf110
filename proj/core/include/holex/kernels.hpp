#pragma once

#include <functional>
#include <vector>

#include "holex/geometry.hpp"
#include "holex/polynomial.hpp"

namespace holex {

/// Levi polynomial of rho at zeta, with the sign for which
/// 2 Re F <= rho(z) - rho(zeta) - 2 beta |zeta-z|^2 holds on the built-in
/// domains:
///   F = sum_j drho/dzeta_j (zeta)(z_j - zeta_j)
///       - 1/2 sum_jk d2rho/dzeta_j dzeta_k (zeta)(z_j-zeta_j)(z_k-zeta_k).
Complex levi_polynomial(const DefiningFunction& df, const CPoint& zeta,
                        const CPoint& z);

struct SupportValue {
  Complex g;       // g = F / 2
  CVector coeffs;  // Hefer coefficients: sum g_j (z_j - zeta_j) = g exactly
};

SupportValue support_function(const DefiningFunction& df, const CPoint& zeta,
                              const CPoint& z);

/// Hefer decomposition of a polynomial: coefficient polynomials b_j(zeta, z)
/// over the 2n variables (zeta_1..zeta_n, z_1..z_n) with
/// sum_j b_j (z_j - zeta_j) = f(z) - f(zeta) as a polynomial identity.
struct HeferForm {
  int n = 0;
  int jet_order = -1;  // -1 for the raw telescoping decomposition
  std::vector<MultiPoly> coeffs;

  CVector eval(const CPoint& zeta, const CPoint& z) const;

  /// b_j(zeta, .) collapsed to z-polynomials at a fixed zeta: per j, a list
  /// of (packed z-exponents, coefficient). Exponents pack 8 bits per
  /// variable. Quadrature tables store this to amortize evaluation over z.
  using ZPoly = std::vector<std::pair<std::uint32_t, Complex>>;
  std::vector<ZPoly> collapse_z(const CPoint& zeta) const;
  static CVector eval_collapsed(const std::vector<ZPoly>& zp, const CPoint& z);
};

/// Telescoping difference quotients by exact factoring of z_j^a - zeta_j^a
/// (no runtime division by z_j - zeta_j).
HeferForm hefer_raw(const MultiPoly& f);

/// Jet-corrected coefficients agreeing with the derivative jet of f to order
/// k, with remainder O(|z - zeta|^{k+1}); the identity is preserved exactly.
HeferForm hefer_jet(const MultiPoly& f, int k);

/// The truncated jet sum_{|a|<=k} 1/(a!(|a|+1)) d^{|a|+1} f / dzeta^a dzeta_j
/// (zeta) (z-zeta)^a the corrected coefficients converge to.
std::vector<MultiPoly> hefer_jet_truncation(const MultiPoly& f, int k);

/// Deterministic anisotropic quadrature of F over D: tensorized midpoint
/// cells on geometrically inflated Koranyi boxes around a focus point.
struct DomainQuadParams {
  int normal_pts = 10;      // half-grid per real normal coordinate
  int tangential_pts = 14;  // half-grid per real tangential coordinate
  double base_scale = 2.0;  // focal resolution: base_scale * |rho(focus)|
};

Complex integrate_domain(const DefiningFunction& df, const CPoint& focus,
                         const std::function<Complex(const CPoint&)>& f,
                         const DomainQuadParams& params);

/// Berndtsson-Andersson kernel context for one domain and weight power N.
struct KernelContext {
  const DefiningFunction* df = nullptr;
  int weight_power = 1;  // N >= 1
  double denominator_floor = 1e-12;
  Complex constant = 1.0;  // C_{N,n}, set by calibrate_constant
  DomainQuadParams quad;
  int floor_breaches = 0;  // running count, reported not regularized
};

/// Pointwise kernel data at (zeta, z).
struct KernelValue {
  bool outside = false;       // zeta outside D: kernel vanishes identically
  bool floor_breach = false;  // |g + rho| under the floor: value withheld
  double rho = 0.0;
  Complex g;
  CVector g_coeffs;
  Complex ratio;    // rho / (g + rho)
  CMatrix m;        // M_ab = dbar_b (g_a / rho)
  Complex density;  // constant * ratio^{N+k} * det M (k = form degree)
};

KernelValue ba_kernel_eval(KernelContext& ctx, const CPoint& zeta,
                           const CPoint& z, int form_degree);

/// dbar_s in zeta of the kernel building blocks; closed form (the built-in
/// rho families have constant Hessians and vanishing third derivatives).
struct KernelDbar {
  CVector dbar_g;              // s -> dbar_s g
  CVector dbar_ratio;          // s -> dbar_s (rho/(g+rho))
  std::vector<CMatrix> dbar_m; // s -> dbar_s M
};

KernelDbar ba_kernel_dbar(const KernelContext& ctx, const CPoint& zeta,
                          const CPoint& z, const KernelValue& kv);

/// Constant making integral_D P^{N,n}(., probe) = 1; stored in ctx.
Complex calibrate_constant(KernelContext& ctx, const CPoint& probe);

/// Integral of h * P^{N,n}(., z) with the calibrated constant.
Complex kernel_reproduce(KernelContext& ctx,
                         const std::function<Complex(const CPoint&)>& h,
                         const CPoint& z);

}  // namespace holex
