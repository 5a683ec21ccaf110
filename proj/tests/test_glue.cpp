#include <doctest.h>

#include "holex/glue.hpp"
#include "holex/rng.hpp"
#include "mini.hpp"

using namespace holex;

namespace {

CPoint pt(Complex a, Complex b) {
  CPoint z(2);
  z[0] = a;
  z[1] = b;
  return z;
}

}  // namespace

TEST_CASE("bump profile: plateau, support, derivative orders") {
  const auto df = DefiningFunction::unit_ball(2);
  const Frame fr = frame_at(df, pt(0.9, 0.0));
  const double r = 0.02;
  const Bump bump(fr, r, 4);

  CHECK(bump.eval(fr.p) == doctest::Approx(1.0));
  std::vector<int> a10{1, 0}, a01{0, 1}, zero{0, 0};
  CHECK(std::abs(bump.eval_derivative(fr.p, a10, zero)) == 0.0);
  CHECK(std::abs(bump.eval_derivative(fr.p, zero, a01)) == 0.0);

  // outside the ball
  const CPoint outside = fr.p + Complex(1.5 * r, 0) * fr.eta;
  CHECK(bump.eval(outside) == 0.0);
  // on the half-radius ball it is identically one
  const CPoint inner = fr.p + Complex(0.2 * r, 0) * fr.eta;
  CHECK(bump.eval(inner) == doctest::Approx(1.0));

  CHECK_THROWS_AS(bump.eval_derivative(fr.p, {3, 0}, {2, 0}), HolexError);
}

TEST_CASE("bump derivatives match finite differences in frame directions") {
  const auto df = DefiningFunction::unit_ball(2);
  const Frame fr = frame_at(df, pt(0.88, 0.05));
  const double r = 0.03;
  const Bump bump(fr, r, 4);
  Rng rng(101);

  for (int s = 0; s < 12; ++s) {
    // active-region point
    CPoint q = fr.p + Complex(0.5 * r * rng.uniform(0.5, 1.0), 0) *
                          rng.unit_complex() * fr.eta;
    q += std::sqrt(0.25 * r * rng.uniform(0.4, 1.0)) * rng.unit_complex() *
         fr.eps[1];
    const double val = bump.eval(q);
    if (val <= 0.0 || val >= 1.0) continue;
    for (int dir = 0; dir < 2; ++dir) {
      std::vector<int> alpha(2, 0), beta(2, 0);
      alpha[dir] = 1;
      const Complex got = bump.eval_derivative(q, alpha, beta);
      const double h = 1e-6;
      const CVector e = fr.eps[dir];
      const double gx =
          (bump.eval(q + Complex(h, 0) * e) - bump.eval(q - Complex(h, 0) * e)) /
          (2 * h);
      const double gy =
          (bump.eval(q + Complex(0, h) * e) - bump.eval(q - Complex(0, h) * e)) /
          (2 * h);
      const Complex want = 0.5 * Complex(gx, -gy);
      CHECK(std::abs(got - want) <= 1e-5 * (1.0 + std::abs(want)));
    }
    // a second-order mixed derivative also agrees
    std::vector<int> alpha{1, 0}, beta{1, 0};
    const Complex got2 = bump.eval_derivative(q, alpha, beta);
    const double h = 2e-6;
    auto d_eta = [&](const CPoint& at) {
      const CVector e = fr.eta;
      const double gx = (bump.eval(at + Complex(h, 0) * e) -
                         bump.eval(at - Complex(h, 0) * e)) /
                        (2 * h);
      const double gy = (bump.eval(at + Complex(0, h) * e) -
                         bump.eval(at - Complex(0, h) * e)) /
                        (2 * h);
      return 0.5 * Complex(gx, -gy);  // holomorphic derivative along eta
    };
    const CVector e = fr.eta;
    const Complex gx = (d_eta(q + Complex(h, 0) * e) - d_eta(q - Complex(h, 0) * e)) / (2 * h);
    const Complex gy = (d_eta(q + Complex(0, h) * e) - d_eta(q - Complex(0, h) * e)) / (2 * h);
    const Complex want2 = 0.5 * (gx + Complex(0, 1) * gy);
    CHECK(std::abs(got2 - want2) <= 1e-2 * (1.0 + std::abs(want2)));
  }
}

TEST_CASE("anisotropic derivative bounds across two shell depths") {
  const auto df = DefiningFunction::unit_ball(2);
  Rng rng(102);
  double worst[2] = {0.0, 0.0};
  const double depths[2] = {0.1, 0.05};
  for (int d = 0; d < 2; ++d) {
    for (int trial = 0; trial < 8; ++trial) {
      CVector dir = rng.unit_vector(2);
      if (std::abs(dir[0]) < 0.1) continue;
      const CPoint p = df.level_radius(dir, -depths[d]) * dir;
      const Frame fr = frame_at(df, p);
      const double r = 0.1 * depths[d];
      const Bump bump(fr, r, 4);
      for (int s = 0; s < 20; ++s) {
        CPoint q = p + Complex(r * rng.uniform(-0.9, 0.9), 0) *
                           rng.unit_complex() * fr.eta;
        q += std::sqrt(r * rng.uniform(0.0, 0.9)) * rng.unit_complex() * fr.eps[1];
        for (int a = 0; a < 2; ++a) {
          std::vector<int> beta(2, 0);
          beta[a] = 1;
          double mag;
          try {
            mag = std::abs(bump.eval_derivative(q, {0, 0}, beta));
          } catch (const HolexError&) {
            continue;  // the |lambda| = 0 kink set
          }
          const double weight = a == 0 ? depths[d] : std::sqrt(depths[d]);
          worst[d] = std::max(worst[d], mag * weight);
        }
      }
    }
  }
  CHECK(worst[0] > 0.0);
  CHECK(worst[1] > 0.0);
  // the weighted derivative magnitude stays comparable as the depth halves
  const double ratio = std::max(worst[0], worst[1]) / std::min(worst[0], worst[1]);
  CHECK(ratio < 4.0);
}

TEST_CASE("partition weights: single ball, split, sums to one") {
  const auto df = DefiningFunction::unit_ball(2);
  Pipeline p = testmini::patch_pipeline(false);
  Rng rng(103);
  int checked = 0;
  for (int s = 0; s < 4000 && checked < 1000; ++s) {
    CVector dir = rng.unit_vector(2);
    CPoint z;
    try {
      z = df.level_radius(dir, -rng.uniform(0.04, 0.8)) * dir;
    } catch (const HolexError&) {
      continue;
    }
    std::vector<double> w;
    if (!p.ext->try_partition_weights(z, w)) continue;
    ++checked;
    double sum = 0.0;
    for (double x : w) sum += x;
    CHECK(std::abs(sum - 1.0) <= 1e-10);
  }
  CHECK(checked >= 500);

  // a deep interior point sees only the interior piece
  std::vector<double> w;
  REQUIRE(p.ext->try_partition_weights(pt(0.1, 0.1), w));
  CHECK(w[0] == doctest::Approx(1.0));

  CHECK_THROWS_AS(p.ext->partition_weights(pt(2.0, 2.0)), HolexError);
}

TEST_CASE("tilde_h equals a global polynomial when every piece carries it") {
  const auto df = DefiningFunction::unit_ball(2);
  MultiPoly g(2);
  g.add_term({1, 0}, Complex(1.2, 0.4));
  g.add_term({0, 1}, Complex(-0.3, 0.2));
  g.add_term({0, 0}, 0.1);
  BranchValueFn gfn = [g](const CPoint& z) { return g.eval(z); };

  // two overlapping j = 0 balls plus the interior ramp, all carrying G
  std::vector<BallPiece> pieces;
  for (double x : {0.9, 0.905}) {
    BallPiece bp;
    bp.frame = frame_at(df, pt(x, 0.0));
    bp.radius = 0.05;
    bp.regime = Regime::NoVariety;
    bp.j_count = 0;
    bp.fallback = gfn;
    pieces.push_back(std::move(bp));
  }
  GlueParams gp;
  const GlobalExtension ext(df, 0.2, 0.2, std::move(pieces), gfn, gp);

  Rng rng(104);
  for (int s = 0; s < 40; ++s) {
    CPoint z = pt(0.9, 0.0);
    z[0] += Complex(rng.uniform(-0.03, 0.03), rng.uniform(-0.02, 0.02));
    z[1] += Complex(rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1));
    if (df.rho(z) >= -1e-3) continue;
    std::vector<double> w;
    if (!ext.try_partition_weights(z, w)) continue;
    const Complex want = g.eval(z);
    CHECK(std::abs(ext.eval(z) - want) <= 1e-12 * (1.0 + std::abs(want)));
    // dbar derivatives vanish up to finite-difference noise
    CHECK(std::abs(ext.dbar_frame(z, {1, 0})) <= 1e-7);
    CHECK(std::abs(ext.dbar_frame(z, {0, 1})) <= 1e-7);
  }
}

TEST_CASE("glued extension restricts to h on X") {
  Pipeline p = testmini::patch_pipeline(true);
  const auto xs =
      sample_variety_points(p.cfg.f, p.df, -0.18, -0.06, 30, 105);
  int used = 0;
  for (const CPoint& x : xs) {
    std::vector<double> w;
    if (!p.ext->try_partition_weights(x, w)) continue;
    ++used;
    CHECK(std::abs(p.ext->eval(x) - p.h(x)) <= 1e-8 * (1.0 + p.h_sup));
  }
  CHECK(used >= 5);
}
