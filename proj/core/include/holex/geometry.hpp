#pragma once

#include <optional>
#include <vector>

#include "holex/types.hpp"

namespace holex {

enum class DomainFamily { UnitBall, HermitianEllipsoid, QuadraticPerturbation };

/// Exact derivatives of rho at a point. Every built-in family is a (real)
/// quadratic in (zeta, conj zeta), so the Hessians are constant in zeta and
/// all third derivatives vanish identically.
struct RhoJet {
  double value = 0.0;
  CVector grad;    // d rho / d zeta_j
  CMatrix mixed;   // d2 rho / d zeta_j d conj(zeta_k) (the Levi form)
  CMatrix pure;    // d2 rho / d zeta_j d zeta_k
  bool third_zero = true;
};

/// Strictly plurisubharmonic defining function rho with D = {rho < 0}.
/// Restricted to families whose jets are available in closed form.
class DefiningFunction {
 public:
  static DefiningFunction unit_ball(int n);
  /// rho = zeta^* A zeta - 1, A hermitian positive definite.
  static DefiningFunction hermitian_ellipsoid(const CMatrix& A);
  /// rho = |zeta|^2 - 1 + Re(zeta^T B zeta), B symmetric, ||B|| < 1/2.
  static DefiningFunction quadratic_perturbation(const CMatrix& B);

  int dim() const { return n_; }
  DomainFamily family() const { return family_; }

  double rho(const CPoint& z) const;
  CVector grad(const CPoint& z) const;
  RhoJet rho_jet(const CPoint& z, int order) const;

  /// All built-in families admit the Levi polynomial as a global support
  /// function; certified at construction (perturbations must be small).
  bool levi_global() const { return true; }

  /// The families are star-shaped around 0: rho(r*dir) = r^2 q(dir) - 1 for a
  /// unit direction. Radius of the level set {rho = t} along dir.
  double level_radius(const CVector& unit_dir, double t = 0.0) const;

  /// Half-width of a coordinate box containing the closed domain.
  double bounding_radius() const;

 private:
  DefiningFunction(DomainFamily f, int n) : family_(f), n_(n) {}
  double direction_quadratic(const CVector& unit_dir) const;

  DomainFamily family_;
  int n_;
  CMatrix a_;  // ellipsoid matrix
  CMatrix b_;  // perturbation matrix
};

/// Orthonormal frame adapted to the level set of rho through p.
struct Frame {
  CPoint p;
  CVector eta;               // unit outward normal
  std::vector<CVector> eps;  // eps[0] = eta, eps[1..n-1] complex-tangent
  CVector w;                 // unit tangent vector along e_n - <e_n,eta>eta
};

/// Throws on a degenerate normal or when e_n is parallel to eta.
Frame frame_at(const DefiningFunction& df, const CPoint& p);

struct KoranyiDecomp {
  Complex lambda;  // normal component
  CVector tau;     // tangential component
};

KoranyiDecomp koranyi_decompose(const Frame& f, const CPoint& zeta);

/// zeta in P_r(z): |lambda| + |tau|^2 < r in the frame at the center z.
bool koranyi_membership(const DefiningFunction& df, const CPoint& z, double r,
                        const CPoint& zeta);

/// delta(z, zeta) = |lambda| + |tau|^2, the infimal radius putting zeta in a
/// Koranyi ball centered at z.
double pseudo_distance(const DefiningFunction& df, const CPoint& z,
                       const CPoint& zeta);
double pseudo_distance(const Frame& fz, const CPoint& zeta);

/// Bisection approximation of sup{ tau : |rho(z+lambda v)-rho(z)| < eps for
/// all |lambda| < tau }, sampling lambda over arguments and radial fractions.
/// Throws when the supremum exceeds `cap`.
double tau_radius(const DefiningFunction& df, const CPoint& z,
                  const CVector& unit_v, double eps, int arg_samples = 16,
                  double cap = 8.0);

}  // namespace holex
