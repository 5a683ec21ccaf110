#include <doctest.h>

#include "holex/currents.hpp"
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

TEST_CASE("cr residual: polynomials are flat, |z1|^2 is not") {
  MultiPoly p(2);
  p.add_term({2, 1}, Complex(1.0, 0.5));
  p.add_term({1, 0}, -2.0);
  auto sampler = [&](const CPoint& z) { return p.eval(z); };
  CHECK(cr_residual(sampler, pt(0.3, -0.2), 1e-4) <= 1e-9);

  auto absq = [](const CPoint& z) { return Complex(std::norm(z[0]), 0.0); };
  const CPoint z0 = pt(Complex(0.4, 0.2), 0.1);
  CHECK(cr_residual(absq, z0, 1e-5) ==
        doctest::Approx(std::abs(z0[0])).epsilon(1e-5));

  CHECK_THROWS_AS(cr_residual(absq, z0, 1e-15), HolexError);
}

TEST_CASE("test form bump integrates consistently") {
  const auto df = DefiningFunction::unit_ball(2);
  const TestForm phi = euclid_bump_form(pt(0.2, 0.1), 0.2, 5);
  const Complex coarse = integrate_form(df, phi, 16);
  const Complex fine = integrate_form(df, phi, 28);
  CHECK(std::abs(coarse - fine) <= 5e-3 * std::abs(fine));
  CHECK(std::real(fine) > 0.0);
}

TEST_CASE("mini pipeline: current identity fT = 1 and linearity") {
  Pipeline p = testmini::patch_pipeline(false);  // hyperplane patch
  p.hefer = hefer_jet(p.cfg.f, p.k);
  const ResidueCurrent current(p.cfg.f, *p.hefer, p.cfg.weight_power, *p.ext,
                               p.cfg.current);

  // zero form
  auto zero = [](const CPoint&) { return Complex(0.0); };
  CHECK(std::abs(current.apply(zero)) == 0.0);

  // deep interior test form (interior Weierstrass piece only)
  {
    const TestForm phi = euclid_bump_form(pt(0.25, -0.15), 0.18, 5);
    TestForm f_phi = phi;
    const MultiPoly f = p.cfg.f;
    auto base = phi.density;
    f_phi.density = [f, base](const CPoint& z) { return f.eval(z) * base(z); };
    const Complex got = current.apply_form(f_phi);
    const Complex want = integrate_form(p.df, phi);
    CHECK(std::abs(got - want) <= 2e-2 * std::abs(want));
  }

  // shell form inside the covered patch (ball pieces carry it)
  {
    const TestForm phi = euclid_bump_form(pt(0.86, 0.02), 0.1, 5);
    TestForm f_phi = phi;
    const MultiPoly f = p.cfg.f;
    auto base = phi.density;
    f_phi.density = [f, base](const CPoint& z) { return f.eval(z) * base(z); };
    const Complex got = current.apply_form(f_phi);
    const Complex want = integrate_form(p.df, phi);
    CHECK(std::abs(got - want) <= 3e-2 * std::abs(want));
  }

  // linearity of a single ball piece
  {
    std::size_t ball = 0;
    while (ball < p.ext->pieces().size() && p.ext->pieces()[ball].j_count == 0)
      ++ball;
    REQUIRE(ball < p.ext->pieces().size());
    const CPoint c = p.ext->pieces()[ball].center();
    const TestForm phi = euclid_bump_form(c, 0.05, 5);
    const Complex one = current.apply_piece(ball, phi.density, true);
    auto scaled = [&](const CPoint& z) { return 2.0 * phi.density(z); };
    const Complex two = current.apply_piece(ball, scaled, true);
    CHECK(std::abs(two - 2.0 * one) <= 1e-12 * (1.0 + std::abs(two)));
  }

  // uncovered support is rejected
  {
    const TestForm phi = euclid_bump_form(pt(-0.9, 0.02), 0.08, 5);
    CHECK_THROWS_AS(current.apply_form(phi), HolexError);
  }
}

TEST_CASE("single close branch agrees with the slice-wise Cauchy oracle") {
  Pipeline p = testmini::patch_pipeline(false);
  p.hefer = hefer_jet(p.cfg.f, p.k);
  CurrentParams cp = p.cfg.current;
  cp.normal_pts = 12;  // the form is ball-sized: the lambda grid must see it
  cp.tangential_pts = 14;
  const ResidueCurrent current(p.cfg.f, *p.hefer, p.cfg.weight_power, *p.ext, cp);

  // pick a ball crossing X = {z2 = 0}
  std::size_t ball = p.ext->pieces().size();
  for (std::size_t b = 0; b < p.ext->pieces().size(); ++b)
    if (p.ext->pieces()[b].j_count == 1 &&
        std::abs(p.ext->pieces()[b].center()[1]) <
            0.2 * std::sqrt(p.ext->pieces()[b].radius)) {
      ball = b;
      break;
    }
  REQUIRE(ball < p.ext->pieces().size());
  const BallPiece& bp = p.ext->pieces()[ball];

  const TestForm phi = euclid_bump_form(bp.center(), 0.6 * bp.radius, 5);
  const Complex got = current.apply_piece(ball, phi.density, false, &phi);

  // Oracle: for f = z2 and one branch, the unweighted ball current equals
  // (1/a) int phi / (t - r) dA slice-by-slice, with no finite differences.
  const Frame& fr = bp.frame;
  const double r = bp.radius;
  const double T = std::sqrt(r);
  const int mo = 24, mrad = 160, mth = 64;
  const double ho = 2.0 * r / mo;
  Complex oracle = 0.0;
  for (int o0 = 0; o0 < mo; ++o0)
    for (int o1 = 0; o1 < mo; ++o1) {
      const Complex lam(-r + (o0 + 0.5) * ho, -r + (o1 + 0.5) * ho);
      const CPoint origin = bp.center() + lam * fr.eta;
      const UniPoly rest = p.cfg.f.restrict_line(origin, fr.w);
      REQUIRE(rest.degree() == 1);
      const Complex a = rest.coeffs()[1];
      const Complex root = -rest.coeffs()[0] / a;
      // polar grid around the root, resolved against the support scale
      const Complex t_c = hdot(phi.support_center - origin, fr.w);
      const double R = std::abs(root - t_c) + phi.support_radius + 0.01;
      Complex inner = 0.0;
      for (int ir = 0; ir < mrad; ++ir)
        for (int it = 0; it < mth; ++it) {
          const double rad = (ir + 0.5) * R / mrad;
          const double th = 2.0 * kPi * (it + 0.5) / mth;
          const Complex u = std::polar(rad, th);
          const CPoint at = origin + (root + u) * fr.w;
          // ball indicator matches the unweighted piece's support
          if (pseudo_distance(fr, at) >= r) continue;
          inner += phi.density(at) / u * rad * (R / mrad) * (2.0 * kPi / mth);
        }
      oracle += inner / a * ho * ho;
    }
  CHECK(std::abs(got - oracle) <= 2e-2 * (std::abs(oracle) + 1e-6));
}

TEST_CASE("extension batch machinery runs and is z-holomorphic") {
  Pipeline p = testmini::patch_pipeline(false);
  p.hefer = hefer_jet(p.cfg.f, p.k);
  ResidueCurrent current(p.cfg.f, *p.hefer, p.cfg.weight_power, *p.ext,
                         p.cfg.current);

  // batch: center point plus Wirtinger stencil, shared prune group
  const CPoint z0 = pt(0.6, 0.05);
  std::vector<CPoint> zs{z0};
  std::vector<int> group{0};
  const double h = 1e-4;
  for (int s = 0; s < 2; ++s)
    for (auto off : {Complex(h, 0), Complex(-h, 0), Complex(0, h), Complex(0, -h)}) {
      CPoint q = z0;
      q[s] += off;
      zs.push_back(q);
      group.push_back(0);
    }
  const auto raw = current.extension_raw_batch(zs, group);
  REQUIRE(raw.size() == zs.size());
  CHECK(std::abs(raw[0]) > 0.0);

  // discrete Wirtinger dbar of the raw field vanishes to roundoff
  for (int s = 0; s < 2; ++s) {
    const Complex gx = (raw[1 + 4 * s] - raw[2 + 4 * s]) / (2 * h);
    const Complex gy = (raw[3 + 4 * s] - raw[4 + 4 * s]) / (2 * h);
    const Complex dbar = 0.5 * (gx + Complex(0, 1) * gy);
    CHECK(std::abs(dbar) <= 1e-6 * (1.0 + std::abs(raw[0]) / h));
  }

  // rho floor enforcement
  current.set_c1(1.0);
  CHECK_THROWS_AS(current.extension_eval({pt(0.999, 0.0)}), HolexError);
}
