#include "holex/polynomial.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace holex {

bool UniPoly::is_zero(double tol) const {
  const double s = coeff_scale();
  return s <= tol;
}

int UniPoly::degree(double tol) const {
  const double floor = tol * (1.0 + coeff_scale());
  for (int i = static_cast<int>(c_.size()) - 1; i >= 0; --i)
    if (std::abs(c_[i]) > floor) return i;
  return -1;
}

double UniPoly::coeff_scale() const {
  double s = 0.0;
  for (const Complex& x : c_) s = std::max(s, std::abs(x));
  return s;
}

Complex UniPoly::eval(Complex t) const {
  Complex acc = 0.0;
  for (int i = static_cast<int>(c_.size()) - 1; i >= 0; --i)
    acc = acc * t + c_[i];
  return acc;
}

UniPoly UniPoly::derivative() const {
  if (c_.size() <= 1) return UniPoly(std::vector<Complex>{});
  std::vector<Complex> d(c_.size() - 1);
  for (std::size_t i = 1; i < c_.size(); ++i)
    d[i - 1] = c_[i] * static_cast<double>(i);
  return UniPoly(std::move(d));
}

int UniPoly::vanishing_order(double tol) const {
  const double s = coeff_scale();
  if (s == 0.0) throw HolexError("vanishing_order: zero polynomial");
  for (std::size_t i = 0; i < c_.size(); ++i)
    if (std::abs(c_[i]) > tol * s) return static_cast<int>(i);
  throw HolexError("vanishing_order: polynomial is numerically zero");
}

UniPoly operator*(const UniPoly& a, const UniPoly& b) {
  if (a.c_.empty() || b.c_.empty()) return UniPoly(std::vector<Complex>{});
  std::vector<Complex> out(a.c_.size() + b.c_.size() - 1, Complex(0.0));
  for (std::size_t i = 0; i < a.c_.size(); ++i)
    for (std::size_t j = 0; j < b.c_.size(); ++j)
      out[i + j] += a.c_[i] * b.c_[j];
  return UniPoly(std::move(out));
}

UniPoly operator+(const UniPoly& a, const UniPoly& b) {
  std::vector<Complex> out(std::max(a.c_.size(), b.c_.size()), Complex(0.0));
  for (std::size_t i = 0; i < a.c_.size(); ++i) out[i] += a.c_[i];
  for (std::size_t i = 0; i < b.c_.size(); ++i) out[i] += b.c_[i];
  return UniPoly(std::move(out));
}

std::vector<Complex> poly_roots(const UniPoly& p) {
  const int deg = p.degree(1e-14);
  if (deg < 0) throw HolexError("poly_roots: zero polynomial");
  if (deg == 0) return {};
  const auto& c = p.coeffs();
  CMatrix comp = CMatrix::Zero(deg, deg);
  for (int i = 1; i < deg; ++i) comp(i, i - 1) = 1.0;
  for (int i = 0; i < deg; ++i) comp(i, deg - 1) = -c[i] / c[deg];
  Eigen::ComplexEigenSolver<CMatrix> es(comp, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success)
    throw HolexError("poly_roots: eigensolver failed to converge");

  const UniPoly dp = p.derivative();
  std::vector<Complex> roots;
  roots.reserve(deg);
  for (int i = 0; i < deg; ++i) {
    Complex r = es.eigenvalues()[i];
    for (int it = 0; it < 8; ++it) {
      const Complex f = p.eval(r);
      const Complex df = dp.eval(r);
      if (std::abs(df) < 1e-300) break;
      const Complex step = f / df;
      r -= step;
      if (std::abs(step) < 1e-16 * (1.0 + std::abs(r))) break;
    }
    roots.push_back(r);
  }
  // Deterministic order independent of the eigensolver's internals.
  std::sort(roots.begin(), roots.end(), [](Complex a, Complex b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  return roots;
}

bool polish_roots(const UniPoly& p, std::vector<Complex>& roots,
                  const std::vector<int>& mults) {
  if (roots.size() != mults.size()) return false;
  for (std::size_t i = 0; i < roots.size(); ++i) {
    // A cluster of multiplicity mu is a simple root of p^{(mu-1)}.
    UniPoly q = p;
    for (int d = 1; d < mults[i]; ++d) q = q.derivative();
    const UniPoly dq = q.derivative();
    Complex r = roots[i];
    bool converged = false;
    for (int it = 0; it < 12; ++it) {
      const Complex dv = dq.eval(r);
      if (std::abs(dv) < 1e-300) break;
      const Complex step = q.eval(r) / dv;
      r -= step;
      if (std::abs(step) < 1e-13 * (1.0 + std::abs(r))) {
        converged = true;
        break;
      }
    }
    if (!converged || std::abs(r - roots[i]) > 0.5 * (1.0 + std::abs(roots[i])))
      return false;
    roots[i] = r;
  }
  return true;
}

MultiPoly MultiPoly::constant(int dim, Complex c) {
  MultiPoly p(dim);
  p.add_term(std::vector<int>(dim, 0), c);
  return p;
}

MultiPoly MultiPoly::variable(int dim, int var) {
  MultiPoly p(dim);
  std::vector<int> e(dim, 0);
  e[var] = 1;
  p.add_term(e, 1.0);
  return p;
}

void MultiPoly::add_term(const std::vector<int>& exps, Complex c) {
  if (static_cast<int>(exps.size()) != dim_)
    throw HolexError("poly: exponent tuple has wrong arity");
  for (int e : exps)
    if (e < 0) throw HolexError("poly: negative exponent");
  auto [it, fresh] = terms_.emplace(exps, c);
  if (!fresh) it->second += c;
  if (it->second == Complex(0.0)) terms_.erase(it);
}

bool MultiPoly::is_zero(double tol) const { return coeff_scale() <= tol; }

int MultiPoly::total_degree() const {
  int d = 0;
  for (const auto& [e, c] : terms_) {
    int s = 0;
    for (int x : e) s += x;
    d = std::max(d, s);
  }
  return d;
}

double MultiPoly::coeff_scale() const {
  double s = 0.0;
  for (const auto& [e, c] : terms_) s = std::max(s, std::abs(c));
  return s;
}

void MultiPoly::prune(double tol) {
  const double floor = tol * coeff_scale();
  for (auto it = terms_.begin(); it != terms_.end();)
    it = (std::abs(it->second) <= floor) ? terms_.erase(it) : std::next(it);
}

Complex MultiPoly::eval(const CVector& z) const {
  Complex acc = 0.0;
  for (const auto& [e, c] : terms_) {
    Complex m = c;
    for (int j = 0; j < dim_; ++j)
      for (int k = 0; k < e[j]; ++k) m *= z[j];
    acc += m;
  }
  return acc;
}

MultiPoly MultiPoly::derivative(int var) const {
  MultiPoly out(dim_);
  for (const auto& [e, c] : terms_) {
    if (e[var] == 0) continue;
    std::vector<int> d = e;
    d[var] -= 1;
    out.add_term(d, c * static_cast<double>(e[var]));
  }
  return out;
}

MultiPoly MultiPoly::derivative(const std::vector<int>& alpha) const {
  MultiPoly out = *this;
  for (int v = 0; v < dim_; ++v)
    for (int i = 0; i < alpha[v]; ++i) out = out.derivative(v);
  return out;
}

std::map<std::vector<int>, Complex> MultiPoly::eval_jet(const CVector& z,
                                                        int order) const {
  std::map<std::vector<int>, Complex> out;
  std::vector<int> alpha(dim_, 0);
  // Enumerate |alpha| <= order recursively.
  auto rec = [&](auto&& self, int pos, int left) -> void {
    if (pos == dim_) {
      out[alpha] = derivative(alpha).eval(z);
      return;
    }
    for (int e = 0; e <= left; ++e) {
      alpha[pos] = e;
      self(self, pos + 1, left - e);
    }
    alpha[pos] = 0;
  };
  rec(rec, 0, order);
  return out;
}

UniPoly MultiPoly::restrict_line(const CVector& base, const CVector& dir) const {
  if (dir.isZero(0.0)) throw HolexError("restrict_line: zero direction");
  std::vector<Complex> acc{Complex(0.0)};
  auto mul_linear = [](std::vector<Complex> p, Complex a, Complex b) {
    // p(t) * (a + b t)
    std::vector<Complex> out(p.size() + 1, Complex(0.0));
    for (std::size_t i = 0; i < p.size(); ++i) {
      out[i] += p[i] * a;
      out[i + 1] += p[i] * b;
    }
    return out;
  };
  for (const auto& [e, c] : terms_) {
    std::vector<Complex> mono{c};
    for (int j = 0; j < dim_; ++j)
      for (int k = 0; k < e[j]; ++k) mono = mul_linear(mono, base[j], dir[j]);
    if (mono.size() > acc.size()) acc.resize(mono.size(), Complex(0.0));
    for (std::size_t i = 0; i < mono.size(); ++i) acc[i] += mono[i];
  }
  return UniPoly(std::move(acc));
}

MultiPoly& MultiPoly::operator+=(const MultiPoly& o) {
  for (const auto& [e, c] : o.terms_) add_term(e, c);
  return *this;
}

MultiPoly& MultiPoly::operator-=(const MultiPoly& o) {
  for (const auto& [e, c] : o.terms_) add_term(e, -c);
  return *this;
}

MultiPoly operator*(const MultiPoly& a, const MultiPoly& b) {
  MultiPoly out(a.dim());
  std::vector<int> sum(a.dim());
  for (const auto& [ea, ca] : a.terms())
    for (const auto& [eb, cb] : b.terms()) {
      for (int j = 0; j < a.dim(); ++j) sum[j] = ea[j] + eb[j];
      out.add_term(sum, ca * cb);
    }
  return out;
}

MultiPoly MultiPoly::operator*(Complex c) const {
  MultiPoly out(dim_);
  for (const auto& [e, x] : terms_) out.add_term(e, x * c);
  return out;
}

MultiPoly read_poly(std::istream& in) {
  std::string line;
  int dim = -1;
  bool header = false;
  MultiPoly p(2);
  std::vector<std::pair<std::vector<int>, Complex>> staged;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "polyfile") {
      int version = 0;
      if (!(ls >> version) || version != 1)
        throw HolexError("polyfile: unsupported version");
      header = true;
    } else if (tag == "dim") {
      if (!(ls >> dim) || dim < 1) throw HolexError("polyfile: bad dim");
    } else if (tag == "term") {
      if (dim < 0) throw HolexError("polyfile: term before dim");
      std::vector<int> e(dim);
      for (int j = 0; j < dim; ++j)
        if (!(ls >> e[j])) throw HolexError("polyfile: short term line");
      double re, im;
      if (!(ls >> re >> im)) throw HolexError("polyfile: missing coefficient");
      staged.emplace_back(e, Complex(re, im));
    } else {
      throw HolexError("polyfile: unknown line tag '" + tag + "'");
    }
  }
  if (!header) throw HolexError("polyfile: missing 'polyfile 1' header");
  if (dim < 0) throw HolexError("polyfile: missing dim");
  MultiPoly out(dim);
  for (const auto& [e, c] : staged) out.add_term(e, c);
  return out;
}

void write_poly(std::ostream& out, const MultiPoly& p) {
  out << "polyfile 1\n";
  out << "dim " << p.dim() << "\n";
  char buf[64];
  for (const auto& [e, c] : p.terms()) {
    out << "term";
    for (int x : e) out << ' ' << x;
    std::snprintf(buf, sizeof buf, " %.17g %.17g", c.real(), c.imag());
    out << buf << "\n";
  }
}

}  // namespace holex
