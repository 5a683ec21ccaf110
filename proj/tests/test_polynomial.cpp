#include <doctest.h>

#include <sstream>

#include <Eigen/Dense>

#include "holex/polynomial.hpp"
#include "holex/rng.hpp"

using namespace holex;

namespace {

MultiPoly cusp() {
  // z2^2 - (z1 - 1)^3
  MultiPoly f(2);
  f.add_term({0, 2}, 1.0);
  f.add_term({3, 0}, -1.0);
  f.add_term({2, 0}, 3.0);
  f.add_term({1, 0}, -3.0);
  f.add_term({0, 0}, 1.0);
  return f;
}

CPoint pt(Complex a, Complex b) {
  CPoint z(2);
  z[0] = a;
  z[1] = b;
  return z;
}

MultiPoly random_poly(Rng& rng, int deg) {
  MultiPoly p(2);
  for (int a = 0; a <= deg; ++a)
    for (int b = 0; a + b <= deg; ++b)
      p.add_term({a, b}, Complex(rng.uniform(-1, 1), rng.uniform(-1, 1)));
  return p;
}

}  // namespace

TEST_CASE("eval jets: singular point, constants, finite differences") {
  const MultiPoly f = cusp();
  const auto jet = f.eval_jet(pt(1, 0), 1);
  CHECK(std::abs(jet.at({0, 0})) < 1e-14);
  CHECK(std::abs(jet.at({1, 0})) < 1e-14);
  CHECK(std::abs(jet.at({0, 1})) < 1e-14);

  const MultiPoly c = MultiPoly::constant(2, Complex(2.5, -1));
  CHECK(c.derivative(0).is_zero());
  CHECK(c.derivative(1).is_zero());

  Rng rng(3);
  const MultiPoly p = random_poly(rng, 3);
  const CPoint z = pt(Complex(0.3, -0.2), Complex(-0.1, 0.4));
  const double h = 1e-6;
  for (int j = 0; j < 2; ++j) {
    CVector e = CVector::Zero(2);
    e[j] = 1.0;
    const Complex fd = (p.eval(z + Complex(h, 0) * e) - p.eval(z - Complex(h, 0) * e)) / (2 * h);
    const Complex fdi = (p.eval(z + Complex(0, h) * e) - p.eval(z - Complex(0, h) * e)) / (2 * h);
    const Complex want = 0.5 * (fd - Complex(0, 1) * fdi);
    const Complex got = p.derivative(j).eval(z);
    CHECK(std::abs(want - got) <= 1e-8 * (1.0 + std::abs(got)));
  }
}

TEST_CASE("line restriction: direct substitution and degree bound") {
  const MultiPoly linear = MultiPoly::variable(2, 1);  // f = z2
  CVector dir = CVector::Zero(2);
  dir[1] = 1.0;
  const UniPoly r1 = linear.restrict_line(pt(0.3, Complex(0.1, 0.2)), dir);
  REQUIRE(r1.degree() == 1);
  CHECK(std::abs(r1.coeffs()[0] - Complex(0.1, 0.2)) < 1e-15);  // t + b
  CHECK(std::abs(r1.coeffs()[1] - 1.0) < 1e-15);

  const double s = 0.35;
  const UniPoly r2 = cusp().restrict_line(pt(1.0 + s * s, 0.0), dir);
  REQUIRE(r2.degree() == 2);  // t^2 - s^6
  CHECK(std::abs(r2.coeffs()[0] + std::pow(s, 6)) < 1e-12);
  CHECK(std::abs(r2.coeffs()[1]) < 1e-12);
  CHECK(std::abs(r2.coeffs()[2] - 1.0) < 1e-12);

  // degree <= total degree, coefficients cross-checked by a Vandermonde fit
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const MultiPoly p = random_poly(rng, 3);
    const CPoint base = pt(Complex(rng.uniform(-1, 1), rng.uniform(-1, 1)),
                           Complex(rng.uniform(-1, 1), rng.uniform(-1, 1)));
    const CVector d = rng.unit_vector(2);
    const UniPoly rest = p.restrict_line(base, d);
    CHECK(rest.degree() <= p.total_degree());
    const int m = p.total_degree() + 1;
    CMatrix vand(m, m);
    CVector rhs(m);
    for (int i = 0; i < m; ++i) {
      const Complex t = std::polar(0.9, 2.0 * kPi * i / m);
      Complex pw = 1.0;
      for (int j = 0; j < m; ++j) {
        vand(i, j) = pw;
        pw *= t;
      }
      rhs[i] = p.eval(base + t * d);
    }
    const CVector fit = vand.colPivHouseholderQr().solve(rhs);
    for (int j = 0; j < m; ++j) {
      const Complex have =
          j < static_cast<int>(rest.coeffs().size()) ? rest.coeffs()[j] : 0.0;
      CHECK(std::abs(fit[j] - have) <= 1e-10 * (1.0 + std::abs(have)));
    }
  }
}

TEST_CASE("root finding polishes to tight residuals") {
  Rng rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<Complex> roots;
    for (int i = 0; i < 4; ++i)
      roots.push_back(Complex(rng.uniform(-1, 1), rng.uniform(-1, 1)));
    UniPoly p({1.0});
    for (Complex r : roots) p = p * UniPoly({-r, 1.0});
    auto got = poly_roots(p);
    REQUIRE(got.size() == 4);
    // argument-principle count over a wide contour as an independent oracle
    const UniPoly dp = p.derivative();
    Complex winding = 0.0;
    const int m = 2048;
    for (int i = 0; i < m; ++i) {
      const Complex t = std::polar(3.0, 2.0 * kPi * i / m);
      winding += dp.eval(t) / p.eval(t) * t;
    }
    CHECK(std::abs(winding / static_cast<double>(m) - 4.0) < 1e-6);
    for (Complex r : got) CHECK(std::abs(p.eval(r)) <= 1e-10 * p.coeff_scale());
  }
}

TEST_CASE("seeded polish follows roots across nearby slices") {
  UniPoly p({Complex(0.02, 0.01), Complex(0, 0), 1.0});  // t^2 + c
  const auto exact = poly_roots(p);
  std::vector<Complex> seeds = {exact[0] + Complex(1e-3, -2e-3),
                                exact[1] + Complex(-1e-3, 1e-3)};
  std::vector<int> mults{1, 1};
  REQUIRE(polish_roots(p, seeds, mults));
  CHECK(std::abs(seeds[0] - exact[0]) < 1e-12);
  CHECK(std::abs(seeds[1] - exact[1]) < 1e-12);
}

TEST_CASE("vanishing order and polyfile round trip") {
  UniPoly p({0.0, 0.0, Complex(2, 1), 3.0});
  CHECK(p.vanishing_order() == 2);
  CHECK_THROWS_AS(UniPoly(std::vector<Complex>{}).vanishing_order(), HolexError);

  const MultiPoly f = cusp();
  std::stringstream ss;
  write_poly(ss, f);
  const MultiPoly g = read_poly(ss);
  CHECK(g.dim() == 2);
  CHECK((g - f).coeff_scale() == 0.0);

  std::stringstream bad("dim 2\nterm 0 0 1 0\n");
  CHECK_THROWS_AS(read_poly(bad), HolexError);  // missing header
}
