#include <doctest.h>

#include <sstream>

#include "holex/covering.hpp"
#include "holex/rng.hpp"

using namespace holex;

namespace {

CoverParams patch_params(std::uint64_t seed) {
  CoverParams p;
  p.c = 0.1;
  p.kappa = 0.5;
  p.eps0 = 0.2;
  p.candidate_budget = 5000;
  p.seed = seed;
  p.level_floor = 0.12;
  p.level_tol = 1e-10;
  // a patch around the boundary point (1, 0)
  p.box_min = {0.7, -0.25, -0.75, -0.75};
  p.box_max = {1.02, 0.25, 0.75, 0.75};
  return p;
}

}  // namespace

TEST_CASE("covering invariants on a boundary patch") {
  const auto df = DefiningFunction::unit_ball(2);
  const CoverParams params = patch_params(21);
  const Covering cov = build_covering(df, params);
  REQUIRE(!cov.entries.empty());

  // (seqi) levels, exact radii
  for (const CoverEntry& e : cov.entries) {
    CHECK(std::abs(df.rho(e.center) - e.level) <= 2.0 * params.level_tol);
    CHECK(std::abs(e.radius - params.c * std::abs(df.rho(e.center))) <=
          1e-12 * e.radius);
  }

  // (seqii) symmetric pairwise separation within each layer
  for (std::size_t i = 0; i < cov.entries.size(); ++i)
    for (std::size_t j = i + 1; j < cov.entries.size(); ++j) {
      if (cov.entries[i].layer != cov.entries[j].layer) continue;
      const double sep = cov.layer_separation(cov.entries[i].layer);
      CHECK(pseudo_distance(df, cov.entries[i].center, cov.entries[j].center) >=
            sep * (1.0 - 1e-12));
    }

  // sampled membership coverage of the layer level sets inside the patch
  const CoveringIndex index(df, cov);
  Rng rng(22);
  int total = 0, covered = 0;
  const double margin = 0.15;
  const int max_layer = cov.entries.back().layer;
  for (int attempt = 0; attempt < 60000 && total < 400; ++attempt) {
    const int layer = static_cast<int>(rng.uniform() * (max_layer + 1));
    CVector xi = rng.unit_vector(2);
    xi[0] += 3.0;  // bias toward the patch around (1, 0)
    xi /= norm2(xi);
    const CPoint z = df.level_radius(xi, -cov.layer_level(layer)) * xi;
    bool inner = params.in_box(z);
    for (int d = 0; d < 4 && inner; ++d) {
      const double x = d % 2 == 0 ? z[d / 2].real() : z[d / 2].imag();
      inner = x > params.box_min[d] + margin && x < params.box_max[d] - margin;
    }
    if (!inner) continue;
    ++total;
    covered += index.covers(z);
  }
  REQUIRE(total >= 200);
  CHECK(static_cast<double>(covered) / total >= 0.99);

  // members' rho stays comparable to the center's rho
  Rng rng2(23);
  for (int s = 0; s < 200; ++s) {
    const CoverEntry& e =
        cov.entries[static_cast<std::size_t>(rng2.uniform() * cov.entries.size())];
    const Frame f = frame_at(df, e.center);
    const double split = rng2.uniform();
    CPoint q = e.center;
    q += Complex(split * e.radius * rng2.uniform(), 0) * rng2.unit_complex() * f.eta;
    q += std::sqrt((1.0 - split) * e.radius * rng2.uniform()) *
         rng2.unit_complex() * f.eps[1];
    const double ratio = std::abs(df.rho(q)) / std::abs(df.rho(e.center));
    CHECK(ratio > 0.5);
    CHECK(ratio < 1.5);
  }
}

TEST_CASE("covering serialization is byte-stable and parses back") {
  const auto df = DefiningFunction::unit_ball(2);
  const CoverParams params = patch_params(33);
  const Covering cov = build_covering(df, params);
  const Covering again = build_covering(df, params);
  std::ostringstream a, b;
  write_covering(a, cov);
  write_covering(b, again);
  CHECK(a.str() == b.str());  // determinism, byte equality

  std::istringstream in(a.str());
  const Covering parsed = read_covering(in);
  REQUIRE(parsed.entries.size() == cov.entries.size());
  for (std::size_t i = 0; i < cov.entries.size(); ++i) {
    CHECK(parsed.entries[i].layer == cov.entries[i].layer);
    CHECK(norm2(parsed.entries[i].center - cov.entries[i].center) == 0.0);
  }
}

TEST_CASE("overlap counts: empty covering, self, depth stability") {
  const auto df = DefiningFunction::unit_ball(2);
  Covering empty;
  empty.dim = 2;
  empty.params = patch_params(1);
  CPoint z(2);
  z[0] = 0.97;
  z[1] = 0.0;
  CHECK(overlap_count(df, empty, z, 1.0) == 0);

  const CoverParams params = patch_params(44);
  const Covering cov = build_covering(df, params);
  const double inflation = 5.0 * params.c;  // 5 c C^4 with C = 1
  const CoveringIndex index(df, cov, inflation);
  CHECK(overlap_count(index, cov.entries.front().center, inflation, 4) >= 1);

  CoverParams half = params;
  half.eps0 = 0.1;
  half.level_floor = 0.06;
  half.seed = 45;
  const Covering cov_half = build_covering(df, half);
  const CoveringIndex index_half(df, cov_half, inflation);
  Rng rng(46);
  int m_full = 0, m_half = 0;
  for (int s = 0; s < 24; ++s) {
    const CVector xi = rng.unit_vector(2);
    CPoint q;
    bool ok = true;
    try {
      q = df.level_radius(xi, -rng.uniform(0.06, 0.18)) * xi;
    } catch (const HolexError&) {
      ok = false;
    }
    if (!ok || !params.in_box(q)) continue;
    m_full = std::max(m_full, overlap_count(index, q, inflation, 4));
    m_half = std::max(m_half, overlap_count(index_half, q, inflation, 4));
  }
  CHECK(m_full >= 1);
  // halving the depth must not inflate the overlap constant
  CHECK(m_half <= 2 * m_full + 2);
}

TEST_CASE("renumbering groups around a shell point") {
  const auto df = DefiningFunction::unit_ball(2);
  const CoverParams params = patch_params(55);
  const Covering cov = build_covering(df, params);

  // at a covering center the (0, j) group is nonempty
  const CPoint& z0 = cov.entries.front().center;
  const RenumberGroups g0 = renumber_around(df, cov, z0);
  bool found_self = false;
  for (const auto& [key, members] : g0.groups)
    if (key.first == 0) found_self = !members.empty();
  CHECK(found_self);

  // m_{i,j} / i^n stays bounded over annuli
  CPoint z(2);
  z[0] = 0.92;
  z[1] = 0.05;
  const RenumberGroups g = renumber_around(df, cov, z);
  REQUIRE(!g.groups.empty());
  double worst = 0.0;
  for (const auto& [key, members] : g.groups) {
    const int i = key.first;
    if (i < 1 || i > 20) continue;
    worst = std::max(worst,
                     static_cast<double>(members.size()) / (double(i) * i));
  }
  CHECK(worst < 60.0);

  // the returned balls cover most of P_{eps0/2C}(z) inside D
  const CoveringIndex gindex(df, cov);
  Rng rng(56);
  const Frame fz = frame_at(df, z);
  const double r = params.eps0 / 4.0;
  (void)0;
  int total = 0, covered = 0;
  for (int s = 0; s < 4000 && total < 200; ++s) {
    const double split = rng.uniform();
    CPoint q = z + Complex(split * r * rng.uniform(), 0) * rng.unit_complex() * fz.eta;
    q += std::sqrt((1.0 - split) * r * rng.uniform()) * rng.unit_complex() *
         fz.eps[1];
    if (df.rho(q) >= -params.level_floor || !params.in_box(q)) continue;
    if (std::abs(df.rho(q)) > params.eps0) continue;
    bool inner = true;
    for (int d = 0; d < 4; ++d) {
      const double x = d % 2 == 0 ? q[d / 2].real() : q[d / 2].imag();
      inner = inner && x > params.box_min[d] + 0.12 && x < params.box_max[d] - 0.12;
    }
    if (!inner) continue;
    ++total;
    bool in = false;
    for (const auto& [key, members] : g.groups) {
      for (int m : members)
        if (pseudo_distance(gindex.frame(m), q) < cov.entries[m].radius) {
          in = true;
          break;
        }
      if (in) break;
    }
    covered += in;
  }
  REQUIRE(total > 50);
  CHECK(static_cast<double>(covered) / total >= 0.95);
}

TEST_CASE("covering rejects invalid parameters and empty regions") {
  const auto df = DefiningFunction::unit_ball(2);
  CoverParams bad = patch_params(1);
  bad.c = 0.3;
  CHECK_THROWS_AS(build_covering(df, bad), HolexError);
  bad = patch_params(1);
  bad.kappa = 11.0;  // c kappa >= 1
  CHECK_THROWS_AS(build_covering(df, bad), HolexError);
  bad = patch_params(1);
  bad.box_min = {5.0, 5.0, 5.0, 5.0};
  bad.box_max = {6.0, 6.0, 6.0, 6.0};  // disjoint from the shell
  CHECK_THROWS_AS(build_covering(df, bad), HolexError);
}
