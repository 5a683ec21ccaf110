#include <doctest.h>

#include <Eigen/Dense>

#include "holex/local_extension.hpp"
#include "holex/rng.hpp"

using namespace holex;

namespace {

MultiPoly cusp() {
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

}  // namespace

TEST_CASE("divided differences: degenerate and closed-form cases") {
  {
    const auto c = divided_differences({0.3, Complex(0, 1), -0.7, 2.0},
                                       {2.5, 2.5, 2.5, 2.5});
    CHECK(std::abs(c[0] - 2.5) < 1e-14);
    for (std::size_t i = 1; i < c.size(); ++i) CHECK(std::abs(c[i]) < 1e-13);
  }
  {
    const std::vector<Complex> nodes{Complex(0.2, 0.1), Complex(-0.4, 0.7)};
    const auto c = divided_differences(nodes, {nodes[0], nodes[1]});  // phi(t)=t
    CHECK(std::abs(c[1] - 1.0) < 1e-14);
  }
  CHECK_THROWS_AS(divided_differences({1.0, 1.0}, {0.0, 0.0}), HolexError);
}

TEST_CASE("top coefficient of a cubic equals the leading coefficient") {
  Rng rng(81);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Complex> cubic(4);
    for (auto& c : cubic) c = Complex(rng.uniform(-1, 1), rng.uniform(-1, 1));
    const UniPoly p(cubic);
    std::vector<Complex> nodes, values;
    for (int i = 0; i < 4; ++i) {
      nodes.push_back(Complex(rng.uniform(-1, 1), rng.uniform(-1, 1)));
      values.push_back(p.eval(nodes.back()));
    }
    const auto coeffs = divided_differences(nodes, values);
    // least-squares fit of the cubic as the independent oracle
    CMatrix vand(4, 4);
    CVector rhs(4);
    for (int i = 0; i < 4; ++i) {
      Complex pw = 1.0;
      for (int j = 0; j < 4; ++j) {
        vand(i, j) = pw;
        pw *= nodes[i];
      }
      rhs[i] = values[i];
    }
    const CVector fit = vand.colPivHouseholderQr().solve(rhs);
    CHECK(std::abs(coeffs[3] - fit[3]) <= 1e-10 * (1.0 + std::abs(fit[3])));
    CHECK(std::abs(coeffs[3] - cubic[3]) <= 1e-10 * (1.0 + std::abs(cubic[3])));
  }
}

TEST_CASE("permutation invariance of the top divided difference") {
  Rng rng(82);
  std::vector<Complex> nodes, values;
  for (int i = 0; i < 5; ++i) {
    nodes.push_back(Complex(rng.uniform(-1, 1), rng.uniform(-1, 1)));
    values.push_back(Complex(rng.uniform(-1, 1), rng.uniform(-1, 1)));
  }
  const Complex top = divided_differences(nodes, values).back();
  for (int perm = 0; perm < 10; ++perm) {
    const std::size_t a = static_cast<std::size_t>(rng.uniform() * 5);
    const std::size_t b = static_cast<std::size_t>(rng.uniform() * 5);
    std::swap(nodes[a], nodes[b]);
    std::swap(values[a], values[b]);
    const Complex again = divided_differences(nodes, values).back();
    CHECK(std::abs(again - top) <= 1e-12 * (1.0 + std::abs(top)));
  }
}

TEST_CASE("contour coefficients: Cauchy formula cases") {
  auto one = [](Complex) { return Complex(1.0); };
  CHECK(std::abs(divided_diff_contour(one, {Complex(0.1, 0.05)}, 1.0) - 1.0) <
        1e-12);

  const Complex a(0.3, -0.1), b(-0.2, 0.25);
  auto square = [](Complex t) { return t * t; };
  const Complex got = divided_diff_contour(square, {a, b}, 1.0);
  CHECK(std::abs(got - (a + b)) < 1e-12);  // phi[a,b] of t^2

  // degree < m-1 vanishes
  auto lin = [](Complex t) { return 3.0 * t + 1.0; };
  const Complex zero =
      divided_diff_contour(lin, {a, b, Complex(0.4, 0.3)}, 1.0);
  CHECK(std::abs(zero) < 1e-12);

  // contour agrees with the recursion for polynomial samplers, repeated nodes allowed
  auto cubic = [](Complex t) { return t * t * t - 2.0 * t; };
  const std::vector<Complex> nodes{a, b, Complex(0.05, 0.4)};
  std::vector<Complex> values;
  for (Complex t : nodes) values.push_back(cubic(t));
  const Complex rec = divided_differences(nodes, values).back();
  const Complex con = divided_diff_contour(cubic, nodes, 1.0);
  CHECK(std::abs(rec - con) <= 1e-8 * (1.0 + std::abs(rec)));

  CHECK_THROWS_AS(divided_diff_contour(one, {Complex(0.95, 0)}, 1.0),
                  HolexError);  // node at the quadrature margin
}

TEST_CASE("local extension: exactness, symmetry, closed forms") {
  const auto df = DefiningFunction::unit_ball(2);
  const MultiPoly f = cusp();
  const double c = 0.1;
  const CPoint p = pt(0.93, 0.02);

  ClassifyParams params;
  params.c = c;
  params.metric_C = 1.0;
  const Classification cls =
      classify_point(f, df, p, params, SingularLocus::at({pt(1.0, 0.0)}));
  REQUIRE(cls.j_count >= 1);

  // h = restriction of a polynomial of degree < #J in the last slice
  // coordinate: the interpolation reproduces it everywhere on the slice.
  MultiPoly g(2);
  g.add_term({1, 0}, Complex(0.8, -0.3));
  g.add_term({0, 1}, Complex(0.2, 0.1) * static_cast<double>(cls.j_count > 1));
  g.add_term({0, 0}, 0.45);
  BranchValueFn h = [g](const CPoint& z) { return g.eval(z); };
  const LocalExtension ext(f, df, p, cls, h, c, 4.0);

  Rng rng(91);
  const Frame& fr = ext.frame();
  for (int s = 0; s < 25; ++s) {
    CPoint q = p;
    q += Complex(ext.ball_radius() * rng.uniform(-0.5, 0.5), 0) *
         rng.unit_complex() * fr.eta;
    q += std::sqrt(ext.ball_radius()) * 0.4 * rng.uniform() *
         rng.unit_complex() * fr.w;
    const Complex want = g.eval(q);
    CHECK(std::abs(ext.eval(q) - want) <= 1e-9 * (1.0 + std::abs(want)));
  }

  // interpolation exactness at the nodes themselves
  const auto slice = ext.prepare_slice(p);
  for (std::size_t i = 0; i < slice.nodes.size(); ++i) {
    const Complex node_val = h(p + slice.nodes[i] * fr.w);
    CHECK(std::abs(ext.eval_slice(slice, slice.nodes[i]) - node_val) <=
          1e-9 * (1.0 + std::abs(node_val)));
  }

  // seeded continuation path gives the same slice data
  CPoint nearby = p;
  nearby[0] += Complex(1e-4, -5e-5);
  const auto fresh = ext.prepare_slice(nearby);
  const auto hinted = ext.prepare_slice(nearby, &slice);
  REQUIRE(fresh.nodes.size() == hinted.nodes.size());
  for (std::size_t i = 0; i < fresh.nodes.size(); ++i)
    CHECK(std::abs(fresh.nodes[i] - hinted.nodes[i]) < 1e-10);
}

TEST_CASE("cusp divided difference: order-2 coefficient is 1/s^2") {
  const double s = 0.2;
  const Complex t1 = std::pow(s, 3), t2 = -std::pow(s, 3);
  const auto coeffs = divided_differences({t1, t2}, {s, -s});
  CHECK(std::abs(coeffs[1] - 1.0 / (s * s)) <= 1e-10 / (s * s));
}

TEST_CASE("sup bound over the ball: zero, constant, stress value") {
  const auto df = DefiningFunction::unit_ball(2);
  const MultiPoly f = MultiPoly::variable(2, 1);  // z2
  const CPoint p = pt(0.9, 0.01);
  ClassifyParams params;
  params.c = 0.1;
  params.metric_C = 1.0;
  const Classification cls =
      classify_point(f, df, p, params, SingularLocus::smooth());
  REQUIRE(cls.j_count == 1);

  const LocalExtension zero(f, df, p, cls,
                            [](const CPoint&) { return Complex(0.0); }, 0.1);
  CHECK(local_sup_bound(zero, 200, 3) == 0.0);

  const Complex cval(0.7, -0.2);
  const LocalExtension cst(f, df, p, cls,
                           [cval](const CPoint&) { return cval; }, 0.1);
  CHECK(local_sup_bound(cst, 200, 3) == doctest::Approx(std::abs(cval)));

  // J empty: the caller must fall back to the interior extension
  Classification none = cls;
  none.regime = Regime::NoVariety;
  none.j_count = 0;
  CHECK_THROWS_AS(LocalExtension(f, df, p, none,
                                 [](const CPoint&) { return Complex(1.0); },
                                 0.1),
                  HolexError);
}
