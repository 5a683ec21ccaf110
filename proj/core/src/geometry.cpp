#include "holex/geometry.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

namespace holex {

DefiningFunction DefiningFunction::unit_ball(int n) {
  if (n < 2) throw HolexError("defining function: dimension must be >= 2");
  return DefiningFunction(DomainFamily::UnitBall, n);
}

DefiningFunction DefiningFunction::hermitian_ellipsoid(const CMatrix& A) {
  const int n = static_cast<int>(A.rows());
  if (n < 2 || A.cols() != n) throw HolexError("ellipsoid: bad matrix shape");
  if ((A - A.adjoint()).norm() > 1e-12 * (1.0 + A.norm()))
    throw HolexError("ellipsoid: matrix is not hermitian");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(A);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw HolexError("ellipsoid: matrix is not positive definite");
  DefiningFunction df(DomainFamily::HermitianEllipsoid, n);
  df.a_ = A;
  return df;
}

DefiningFunction DefiningFunction::quadratic_perturbation(const CMatrix& B) {
  const int n = static_cast<int>(B.rows());
  if (n < 2 || B.cols() != n) throw HolexError("perturbation: bad matrix shape");
  if ((B - B.transpose()).norm() > 1e-12 * (1.0 + B.norm()))
    throw HolexError("perturbation: matrix is not symmetric");
  // Small perturbations keep the family star-shaped, strictly
  // plurisubharmonic, and Levi-global.
  if (B.operatorNorm() >= 0.5)
    throw HolexError("perturbation: ||B|| must be < 1/2");
  DefiningFunction df(DomainFamily::QuadraticPerturbation, n);
  df.b_ = B;
  return df;
}

double DefiningFunction::rho(const CPoint& z) const {
  switch (family_) {
    case DomainFamily::UnitBall:
      return z.squaredNorm() - 1.0;
    case DomainFamily::HermitianEllipsoid:
      return std::real((z.adjoint() * a_ * z)(0, 0)) - 1.0;
    case DomainFamily::QuadraticPerturbation:
      return z.squaredNorm() - 1.0 +
             std::real((z.transpose() * b_ * z)(0, 0));
  }
  throw HolexError("rho: unsupported family");
}

CVector DefiningFunction::grad(const CPoint& z) const {
  switch (family_) {
    case DomainFamily::UnitBall:
      return z.conjugate();
    case DomainFamily::HermitianEllipsoid:
      return a_.transpose() * z.conjugate();
    case DomainFamily::QuadraticPerturbation:
      return z.conjugate() + b_ * z;
  }
  throw HolexError("grad: unsupported family");
}

RhoJet DefiningFunction::rho_jet(const CPoint& z, int order) const {
  if (order < 0 || order > 3)
    throw HolexError("rho_jet: order must be in {0,1,2,3}");
  if (!z.allFinite()) throw HolexError("rho_jet: non-finite point");
  RhoJet jet;
  jet.value = rho(z);
  if (order >= 1) jet.grad = grad(z);
  if (order >= 2) {
    switch (family_) {
      case DomainFamily::UnitBall:
        jet.mixed = CMatrix::Identity(n_, n_);
        jet.pure = CMatrix::Zero(n_, n_);
        break;
      case DomainFamily::HermitianEllipsoid:
        jet.mixed = a_.transpose();
        jet.pure = CMatrix::Zero(n_, n_);
        break;
      case DomainFamily::QuadraticPerturbation:
        jet.mixed = CMatrix::Identity(n_, n_);
        jet.pure = b_;
        break;
    }
  }
  jet.third_zero = true;
  return jet;
}

double DefiningFunction::direction_quadratic(const CVector& dir) const {
  switch (family_) {
    case DomainFamily::UnitBall:
      return dir.squaredNorm();
    case DomainFamily::HermitianEllipsoid:
      return std::real((dir.adjoint() * a_ * dir)(0, 0));
    case DomainFamily::QuadraticPerturbation:
      return dir.squaredNorm() + std::real((dir.transpose() * b_ * dir)(0, 0));
  }
  throw HolexError("unsupported family");
}

double DefiningFunction::level_radius(const CVector& dir, double t) const {
  const double q = direction_quadratic(dir);
  if (q <= 0.0) throw HolexError("level_radius: degenerate direction");
  if (1.0 + t < 0.0) throw HolexError("level_radius: level below the minimum");
  return std::sqrt((1.0 + t) / q);
}

double DefiningFunction::bounding_radius() const {
  switch (family_) {
    case DomainFamily::UnitBall:
      return 1.0;
    case DomainFamily::HermitianEllipsoid: {
      Eigen::SelfAdjointEigenSolver<CMatrix> es(a_);
      return 1.0 / std::sqrt(es.eigenvalues().minCoeff());
    }
    case DomainFamily::QuadraticPerturbation:
      return 1.0 / std::sqrt(1.0 - b_.operatorNorm());
  }
  throw HolexError("unsupported family");
}

Frame frame_at(const DefiningFunction& df, const CPoint& p) {
  const int n = df.dim();
  const CVector g = df.grad(p);
  const double gn = norm2(g);
  if (gn < 1e-12) throw HolexError("frame_at: degenerate normal (grad rho ~ 0)");

  Frame f;
  f.p = p;
  // The real gradient of rho corresponds to conj(d rho / d zeta).
  f.eta = g.conjugate() / gn;

  CVector en = CVector::Zero(n);
  en[n - 1] = 1.0;
  CVector w = en - hdot(en, f.eta) * f.eta;
  const double wn = norm2(w);
  if (wn < 1e-10)
    throw HolexError("frame_at: e_n parallel to the normal, w undefined");
  f.w = w / wn;

  // Deterministic Gram-Schmidt completion seeded by the canonical basis.
  f.eps.push_back(f.eta);
  for (int j = 0; j < n && static_cast<int>(f.eps.size()) < n; ++j) {
    CVector v = CVector::Zero(n);
    v[j] = 1.0;
    for (const CVector& e : f.eps) v -= hdot(v, e) * e;
    const double vn = norm2(v);
    if (vn > 1e-8) f.eps.push_back(v / vn);
  }
  if (static_cast<int>(f.eps.size()) != n)
    throw HolexError("frame_at: Gram-Schmidt completion failed");
  return f;
}

KoranyiDecomp koranyi_decompose(const Frame& f, const CPoint& zeta) {
  KoranyiDecomp d;
  const CVector xi = zeta - f.p;
  d.lambda = hdot(xi, f.eta);
  d.tau = xi - d.lambda * f.eta;
  return d;
}

bool koranyi_membership(const DefiningFunction& df, const CPoint& z, double r,
                        const CPoint& zeta) {
  return pseudo_distance(df, z, zeta) < r;
}

double pseudo_distance(const Frame& fz, const CPoint& zeta) {
  // |tau|^2 = |xi|^2 - |lambda|^2; avoids materializing tau.
  Complex lambda = 0.0;
  double xi2 = 0.0;
  for (Eigen::Index j = 0; j < zeta.size(); ++j) {
    const Complex xij = zeta[j] - fz.p[j];
    lambda += xij * std::conj(fz.eta[j]);
    xi2 += std::norm(xij);
  }
  const double al = std::abs(lambda);
  return al + std::max(0.0, xi2 - al * al);
}

double pseudo_distance(const DefiningFunction& df, const CPoint& z,
                       const CPoint& zeta) {
  return pseudo_distance(frame_at(df, z), zeta);
}

double tau_radius(const DefiningFunction& df, const CPoint& z,
                  const CVector& unit_v, double eps, int arg_samples,
                  double cap) {
  if (eps <= 0.0) throw HolexError("tau_radius: eps must be positive");
  const double rho0 = df.rho(z);
  // Sampled sup of |rho(z + lambda v) - rho(z)| over |lambda| <= tau.
  auto worst = [&](double tau) {
    double m = 0.0;
    for (double frac : {1.0, 0.7, 0.4}) {
      for (int i = 0; i < arg_samples; ++i) {
        const double th = 2.0 * kPi * i / arg_samples;
        const Complex lam = frac * tau * Complex(std::cos(th), std::sin(th));
        m = std::max(m, std::abs(df.rho(z + lam * unit_v) - rho0));
      }
    }
    return m;
  };
  if (worst(cap) < eps)
    throw HolexError("tau_radius: non-bracketing, tau exceeds the search cap");
  double lo = 0.0, hi = cap;
  for (int it = 0; it < 200 && (hi - lo) > 1e-14 * cap; ++it) {
    const double mid = 0.5 * (lo + hi);
    (worst(mid) < eps ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace holex
