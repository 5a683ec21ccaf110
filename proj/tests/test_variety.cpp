#include <doctest.h>

#include "holex/rng.hpp"
#include "holex/variety.hpp"

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

CPoint sing_point() { return pt(1.0, 0.0); }

}  // namespace

TEST_CASE("branch roots of the cusp: +-s^3 with close flags") {
  const auto df = DefiningFunction::unit_ball(2);
  const MultiPoly f = cusp();
  const CPoint p = pt(0.9, 0.0);  // frame has w = (0, 1)
  const double s = 0.1;
  const BranchSet bs = branch_roots(f, df, p, pt(1.0 + s * s, 0.0), 0.05, 0.1);
  REQUIRE(bs.roots.size() == 2);
  CHECK(std::abs(bs.roots[0].t + 1e-3) < 1e-12);
  CHECK(std::abs(bs.roots[1].t - 1e-3) < 1e-12);
  for (const BranchRoot& r : bs.roots) {
    CHECK(r.residual <= 1e-10);
    CHECK(r.close);  // |t| = 1e-3 << 2 sqrt(c rho)
  }
  CHECK(bs.close_count() == 2);
}

TEST_CASE("branch roots: single root, empty disc, line inside X") {
  const auto df = DefiningFunction::unit_ball(2);
  const MultiPoly plane = MultiPoly::variable(2, 1);  // f = z2
  const CPoint p = pt(0.9, 0.0);
  const BranchSet one = branch_roots(plane, df, p, pt(0.9, 0.05), 0.2, 0.1);
  REQUIRE(one.roots.size() == 1);
  CHECK(std::abs(one.roots[0].t + 0.05) < 1e-12);

  const BranchSet none = branch_roots(plane, df, p, pt(0.5, 0.3), 0.1, 0.1);
  CHECK(none.empty());

  const MultiPoly z1 = MultiPoly::variable(2, 0);  // slice along w lies in X
  CHECK_THROWS_AS(branch_roots(z1 - MultiPoly::constant(2, 0.9), df, p,
                               pt(0.9, 0.0), 0.1, 0.1),
                  HolexError);
}

TEST_CASE("singular locus distance: points, smooth, newton search") {
  const MultiPoly f = cusp();
  const CPoint p = pt(0.8, 0.1);
  const double d_pts = sing_distance(f, p, SingularLocus::at({sing_point()}));
  CHECK(d_pts == doctest::Approx(norm2(p - sing_point())));
  CHECK(std::isinf(
      sing_distance(MultiPoly::variable(2, 1), p, SingularLocus::smooth())));
  // Newton search on {f = 0, grad f = 0} agrees with the known point
  const double d_newton = sing_distance(f, p, SingularLocus::newton());
  CHECK(std::abs(d_newton - d_pts) <= 1e-9);
  // smooth graph: the gradient system is infeasible -> +infinity
  CHECK(std::isinf(
      sing_distance(MultiPoly::variable(2, 1), p, SingularLocus::newton())));
}

TEST_CASE("multiplicity along distinguished directions") {
  CVector e2 = CVector::Zero(2);
  e2[1] = 1.0;
  CHECK(multiplicity_at(cusp(), sing_point(), e2) == 2);
  CHECK(multiplicity_at(MultiPoly::variable(2, 1), pt(0.3, 0.0), e2) == 1);
  MultiPoly z2cubed(2);
  z2cubed.add_term({0, 3}, 1.0);
  CHECK(multiplicity_at(z2cubed, pt(0.2, 0.0), e2) == 3);
}

TEST_CASE("classification regimes") {
  const auto df = DefiningFunction::unit_ball(2);
  ClassifyParams params;
  params.c = 0.1;
  params.metric_C = 1.0;
  const SingularLocus locus = SingularLocus::at({sing_point()});

  // at (a point extremely near) the singular point itself
  const Classification at_sing =
      classify_point(cusp(), df, pt(0.995, 1e-4), params, locus);
  CHECK(at_sing.regime == Regime::NearSing);
  CHECK(at_sing.j_count == 2);

  // far from X with a ball disjoint from X
  const Classification away = classify_point(
      MultiPoly::variable(2, 1), df, pt(0.3, 0.6), params, SingularLocus::smooth());
  CHECK(away.regime == Regime::NoVariety);
  CHECK(away.j_count == 0);

  // smooth hyperplane near X: far regime with one close branch
  const Classification far = classify_point(
      MultiPoly::variable(2, 1), df, pt(0.9, 0.01), params, SingularLocus::smooth());
  CHECK(far.regime == Regime::Far);
  CHECK(far.j_count == 1);

  // stability under a denser probe family
  ClassifyParams dense = params;
  dense.probe_lambda_phases = 8;
  const Classification redo = classify_point(cusp(), df, pt(0.9, 0.02), dense, locus);
  const Classification base = classify_point(cusp(), df, pt(0.9, 0.02), params, locus);
  CHECK(redo.regime == base.regime);
  CHECK(redo.j_count == base.j_count);
}

TEST_CASE("prop 2.2 proxy: |f| over the close-root product stays pinched") {
  const auto df = DefiningFunction::unit_ball(2);
  const MultiPoly f = cusp();
  const CPoint p = pt(0.9, 0.03);
  const Frame fr = frame_at(df, p);
  Rng rng(61);
  const double r = 0.1 * std::abs(df.rho(p));
  double lo = 1e300, hi = 0.0;
  for (int s = 0; s < 60; ++s) {
    CPoint q = p + Complex(r * rng.uniform(-1, 1), r * rng.uniform(-1, 1)) * fr.eta;
    q += std::sqrt(r) * rng.uniform() * rng.unit_complex() * fr.eps[1];
    const UniPoly rest = f.restrict_line(q, fr.w);
    double prod = 1.0;
    for (Complex root : poly_roots(rest))
      if (std::abs(root) < 0.8) prod *= std::abs(root);
    const double u = std::abs(f.eval(q)) / prod;
    if (!std::isfinite(u) || u == 0.0) continue;
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  CHECK(hi / lo < 25.0);  // |u_z| pinched on the ball
}

TEST_CASE("transversality: cusp passes, tangent hyperplane fails") {
  const auto df = DefiningFunction::unit_ball(2);
  {
    const TransversalityReport rep =
        transversality_check(cusp(), df, {sing_point()});
    REQUIRE(rep.samples.size() == 1);
    CHECK(rep.pass);
    CHECK(rep.samples[0].min_singular_value > 0.5);
  }
  {
    MultiPoly tangent = MultiPoly::variable(2, 0);
    tangent.add_term({0, 0}, -1.0);  // X = {z1 = 1}, tangent to the sphere
    const TransversalityReport rep =
        transversality_check(tangent, df, {sing_point()});
    CHECK_FALSE(rep.pass);
    CHECK(rep.samples[0].min_singular_value < 0.05);
  }
  {
    // transverse regular crossing f = z2: sample a boundary point of X
    const CPoint x = track_to_boundary(MultiPoly::variable(2, 1), df,
                                       pt(0.7, 0.0));
    const TransversalityReport rep =
        transversality_check(MultiPoly::variable(2, 1), df, {x});
    CHECK(rep.pass);
  }
}

TEST_CASE("tracking to the boundary and shell sampling") {
  const auto df = DefiningFunction::unit_ball(2);
  const MultiPoly f = cusp();
  const auto pts = sample_variety_points(f, df, -0.3, -0.05, 10, 71);
  REQUIRE(pts.size() == 10);
  for (const CPoint& x : pts) {
    CHECK(std::abs(f.eval(x)) <= 1e-8);
    CHECK(df.rho(x) < -0.05);
    CHECK(df.rho(x) >= -0.3);
  }
  const CPoint bd = track_to_boundary(f, df, pts.front());
  CHECK(std::abs(df.rho(bd)) <= 1e-10);
  CHECK(std::abs(f.eval(bd)) <= 1e-7);
}
