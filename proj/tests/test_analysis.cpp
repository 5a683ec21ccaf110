#include <doctest.h>

#include "holex/analysis.hpp"
#include "holex/rng.hpp"
#include "holex/types.hpp"
#include "mini.hpp"

using namespace holex;

TEST_CASE("Lq estimator: volume closed forms and monotonicity") {
  const auto df = DefiningFunction::unit_ball(2);
  auto one = [](const CPoint&) { return Complex(1.0); };
  const NormEstimate l2 = lq_norm_estimate(one, df, 2.0, 20000, 5);
  CHECK(std::abs(l2.value - std::sqrt(kPi * kPi / 2.0)) <=
        0.01 * std::sqrt(kPi * kPi / 2.0));

  auto zero = [](const CPoint&) { return Complex(0.0); };
  CHECK(lq_norm_estimate(zero, df, 2.0, 2000, 5).value == 0.0);

  auto half = [](const CPoint& z) {
    return Complex(z[0].real() > 0.0 ? 1.0 : 0.0, 0.0);
  };
  const NormEstimate l1 = lq_norm_estimate(half, df, 1.0, 40000, 6);
  CHECK(std::abs(l1.value - kPi * kPi / 4.0) <= 0.02 * kPi * kPi / 4.0);

  // monotone under pointwise domination, same seed and budget
  auto small = [](const CPoint& z) { return Complex(std::abs(z[0]), 0.0); };
  auto big = [](const CPoint& z) { return Complex(std::abs(z[0]) + 0.1, 0.0); };
  const double a = lq_norm_estimate(small, df, 2.0, 4000, 7).value;
  const double b = lq_norm_estimate(big, df, 2.0, 4000, 7).value;
  CHECK(a <= b);

  CHECK_THROWS_AS(lq_norm_estimate(one, df, 2.0, 0, 5), HolexError);
  CHECK_THROWS_AS(lq_norm_estimate(one, df, 0.5, 100, 5), HolexError);
}

TEST_CASE("estimators are deterministic under a fixed seed") {
  const auto df = DefiningFunction::unit_ball(2);
  auto field = [](const CPoint& z) { return z[0] * z[0] + z[1]; };
  const double a = lq_norm_estimate(field, df, 2.0, 5000, 11).value;
  const double b = lq_norm_estimate(field, df, 2.0, 5000, 11).value;
  CHECK(a == b);  // bit identical
}

TEST_CASE("BMO gradient criterion values") {
  const auto df = DefiningFunction::unit_ball(2);
  auto constant = [](const CPoint&) { return Complex(3.0, -1.0); };
  CHECK(bmo_gradient_bound(constant, df, 400, 13).value <= 1e-9);

  auto linear = [](const CPoint& z) { return z[0]; };
  const double lin = bmo_gradient_bound(linear, df, 400, 13).value;
  CHECK(lin > 0.0);
  CHECK(lin <= 0.5);  // |rho| * O(1) on the shell

  // h = log(1 - z1): |dh| = 1/|1 - z1| and |rho| <= 2|1 - z1| on the ball
  auto logf = [](const CPoint& z) { return std::log(1.0 - z[0]); };
  const double logb = bmo_gradient_bound(logf, df, 2000, 14).value;
  CHECK(logb < 8.0);
}

TEST_CASE("schur integrand behavior and light run") {
  const auto df = DefiningFunction::unit_ball(2);
  SchurParams sp;
  sp.eps = {0.5};
  sp.z_probes = 3;
  sp.quad.normal_pts = 6;
  sp.quad.tangential_pts = 8;
  const SchurReport rep = schur_kernel_check(df, sp);
  CHECK(rep.finite);
  REQUIRE(rep.entries.size() == 1);
  CHECK(rep.entries[0].c_direct > 0.0);
  CHECK(rep.entries[0].c_symmetric > 0.0);

  // integrand positivity and monotone decrease in delta at fixed rho values
  const double rho_c = 0.1, rho_z = 0.2;
  auto kern = [&](double del) {
    return std::pow(rho_c, 2.0 - 0.5) / std::pow(rho_c + rho_z + del, 2 + 2 + 1);
  };
  double prev = kern(0.0);
  CHECK(prev > 0.0);
  for (double del : {0.1, 0.2, 0.5, 1.0}) {
    const double v = kern(del);
    CHECK(v > 0.0);
    CHECK(v < prev);
    prev = v;
  }

  SchurParams bad = sp;
  bad.eps = {1.5};
  CHECK_THROWS_AS(schur_kernel_check(df, bad), HolexError);
}

TEST_CASE("disc conditions on the mini pipelines") {
  {
    Pipeline p = testmini::patch_pipeline(false);  // manifold scenario
    DiscParams dp;
    dp.c = p.cfg.cover.c;
    dp.metric_C = 1.0;
    const DiscConditionReport rep = disc_condition_check(*p.ext, dp);
    REQUIRE(!rep.balls.empty());
    // trivial-extension bound: sup <= sup |h| + tolerance
    CHECK(rep.sup_max <= p.h_sup + 0.05 * (1.0 + p.h_sup));
    CHECK(rep.c_sum > 0.0);
  }
  {
    Pipeline p = testmini::patch_pipeline(true);  // cusp stress profile
    DiscParams dp;
    dp.c = p.cfg.cover.c;
    dp.metric_C = 1.0;
    dp.mode_sup = false;
    dp.q = 2.0;
    const DiscConditionReport rep = disc_condition_check(*p.ext, dp);
    CHECK(rep.c_sum > 0.0);  // reported without a pass/fail assertion
  }
}

TEST_CASE("th0 hypothesis check passes on the manifold mini pipeline") {
  Pipeline p = testmini::patch_pipeline(false);
  Th0Params tp = p.cfg.th0;
  tp.k = p.k;
  tp.seed = p.cfg.seed + 7;
  {
    Rng rng(5);
    for (int i = 0; i < 12; ++i) {
      CVector v = rng.unit_vector(2);
      v[0] += 3.0;  // aim into the covered patch around (1, 0)
      tp.ray_dirs.push_back(v / norm2(v));
    }
  }
  const Th0Report rep = th0_hypothesis_check(*p.ext, p.cfg.f, tp);
  CHECK(rep.on_x.pass);
  CHECK(rep.weighted_lq.pass);
  CHECK(rep.vanishing.pass);

  // deliberately corrupted glue: one ball carries a wrong constant
  Pipeline bad = testmini::patch_pipeline(false);
  std::vector<BallPiece> pieces;
  bool corrupted = false;
  for (std::size_t b = 0; b < bad.ext->pieces().size(); ++b) {
    BallPiece bp;
    const BallPiece& src = bad.ext->pieces()[b];
    bp.frame = src.frame;
    bp.radius = src.radius;
    bp.regime = src.regime;
    bp.j_count = 0;
    if (src.j_count > 0 && b % 2 == 0) {
      // non-matching constants on alternating balls: clean/corrupt overlaps
      // along X force a visible dbar mismatch
      bp.fallback = [](const CPoint&) { return Complex(5.0, 0.0); };
      corrupted = true;
    } else {
      bp.fallback = src.j_count > 0
                        ? BranchValueFn([piece = src](const CPoint& z) {
                            return piece.eval(z);
                          })
                        : src.fallback;
    }
    pieces.push_back(std::move(bp));
  }
  REQUIRE(corrupted);
  const GlobalExtension broken(bad.df, bad.cfg.cover.c, bad.cfg.cover.eps0,
                               std::move(pieces), bad.h, bad.cfg.glue);
  const Th0Report rep_bad = th0_hypothesis_check(broken, bad.cfg.f, tp);
  CHECK_FALSE(rep_bad.on_x.pass);
}
