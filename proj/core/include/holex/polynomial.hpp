#pragma once

#include <iosfwd>
#include <map>
#include <vector>

#include "holex/types.hpp"

namespace holex {

/// Dense univariate polynomial sum c[i] t^i over C.
class UniPoly {
 public:
  UniPoly() = default;
  explicit UniPoly(std::vector<Complex> coeffs) : c_(std::move(coeffs)) {}

  const std::vector<Complex>& coeffs() const { return c_; }
  bool is_zero(double tol = 0.0) const;
  int degree(double tol = 0.0) const;  // -1 for the zero polynomial
  double coeff_scale() const;

  Complex eval(Complex t) const;
  UniPoly derivative() const;

  /// Order of vanishing at t = 0 (index of the first coefficient above
  /// tol * scale). Throws on (numerically) zero polynomials.
  int vanishing_order(double tol = 1e-12) const;

  friend UniPoly operator*(const UniPoly& a, const UniPoly& b);
  friend UniPoly operator+(const UniPoly& a, const UniPoly& b);

 private:
  std::vector<Complex> c_;
};

/// All roots via companion-matrix eigenvalues followed by Newton polishing.
/// No clustering is applied here.
std::vector<Complex> poly_roots(const UniPoly& p);

/// Newton continuation: polish cluster centers (with multiplicities) as roots
/// of p, seeding from nearby values. Returns false if any seed fails to
/// converge; callers then fall back to the eigensolve.
bool polish_roots(const UniPoly& p, std::vector<Complex>& roots,
                  const std::vector<int>& mults);

/// Exact multivariate polynomial: multi-index -> complex coefficient.
/// Operations (derivative, composition with affine maps, arithmetic) are
/// closed form on the coefficients.
class MultiPoly {
 public:
  explicit MultiPoly(int dim) : dim_(dim) {}
  static MultiPoly constant(int dim, Complex c);
  static MultiPoly variable(int dim, int var);

  int dim() const { return dim_; }
  const std::map<std::vector<int>, Complex>& terms() const { return terms_; }
  void add_term(const std::vector<int>& exps, Complex c);

  bool is_zero(double tol = 0.0) const;
  int total_degree() const;
  double coeff_scale() const;
  void prune(double tol);

  Complex eval(const CVector& z) const;
  MultiPoly derivative(int var) const;
  MultiPoly derivative(const std::vector<int>& alpha) const;

  /// All partial derivatives up to `order`, evaluated at z.
  std::map<std::vector<int>, Complex> eval_jet(const CVector& z,
                                               int order) const;

  /// Coefficients of t -> p(base + t dir), by exact composition.
  UniPoly restrict_line(const CVector& base, const CVector& dir) const;

  MultiPoly& operator+=(const MultiPoly& o);
  MultiPoly& operator-=(const MultiPoly& o);
  friend MultiPoly operator+(MultiPoly a, const MultiPoly& b) { a += b; return a; }
  friend MultiPoly operator-(MultiPoly a, const MultiPoly& b) { a -= b; return a; }
  friend MultiPoly operator*(const MultiPoly& a, const MultiPoly& b);
  MultiPoly operator*(Complex c) const;

 private:
  int dim_;
  std::map<std::vector<int>, Complex> terms_;
};

/// Text format: `polyfile 1`, `dim N`, then `term e1 .. eN re im` lines.
/// `#` starts a comment. Documented in the README.
MultiPoly read_poly(std::istream& in);
void write_poly(std::ostream& out, const MultiPoly& p);

}  // namespace holex
