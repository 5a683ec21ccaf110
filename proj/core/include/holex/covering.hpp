#pragma once

#include <cstdint>
#include <unordered_map>
#include <iosfwd>
#include <map>
#include <vector>

#include "holex/geometry.hpp"
#include "holex/types.hpp"

namespace holex {

/// Parameters of the layered covering of the boundary shell.
struct CoverParams {
  double c = 0.1;          // ball-size factor, 0 < c < 1/4
  double kappa = 0.5;      // separation factor, c*kappa < 1
  double eps0 = 0.2;       // shell depth
  int candidate_budget = 2000;  // candidate samples per layer
  std::uint64_t seed = 1;
  double level_floor = 0.02;  // deepest layer: stop once the level drops below
  int max_layers = 64;
  double level_tol = 1e-10;  // Newton projection tolerance onto bD_t
  std::vector<double> box_min;  // region box, re/im interleaved, size 2n
  std::vector<double> box_max;

  void validate(int n) const;
  bool in_box(const CPoint& z) const;
};

struct CoverEntry {
  CPoint center;
  int layer = 0;
  double level = 0.0;   // -(1-c kappa)^layer eps0
  double radius = 0.0;  // c |rho(center)|
};

struct Covering {
  int dim = 0;
  CoverParams params;
  std::vector<CoverEntry> entries;

  double layer_level(int k) const;       // (1-c kappa)^k eps0 (magnitude)
  double layer_separation(int k) const;  // c kappa (1-c kappa)^k eps0
};

/// Greedy layered construction: seeded rejection sampling of the region box,
/// Newton projection onto each level set, then symmetric-separation greedy
/// selection in the seeded candidate order.
Covering build_covering(const DefiningFunction& df, const CoverParams& params);

/// Query accelerator over a covering: cached frames plus a euclidean spatial
/// hash of the centers (a Koranyi ball P_r(c) fits in the euclidean ball of
/// radius r + sqrt(r) around c).
class CoveringIndex {
 public:
  /// `inflate_cap` is the largest ball inflation later queries will use.
  CoveringIndex(const DefiningFunction& df, const Covering& cov,
                double inflate_cap = 1.0);

  const Covering& covering() const { return *cov_; }
  const DefiningFunction& domain() const { return *df_; }
  const Frame& frame(std::size_t i) const { return frames_[i]; }

  /// Entries whose inflated euclidean reach can contain z.
  void candidates(const CPoint& z, double inflate, std::vector<int>& out) const;

  /// z lies in some covering ball (radii scaled by `inflate`).
  bool covers(const CPoint& z, double inflate = 1.0) const;

 private:
  std::uint64_t key(const CPoint& z, int d0, int d1, int d2, int d3) const;

  const Covering* cov_;
  const DefiningFunction* df_;
  std::vector<Frame> frames_;
  std::vector<double> reach_;
  double cell_ = 1.0;
  std::unordered_map<std::uint64_t, std::vector<int>> buckets_;
};

/// Number of covering entries whose ball inflated by `inflation` meets the
/// inflated ball at z. Membership is sampled on a deterministic boundary mesh.
int overlap_count(const CoveringIndex& index, const CPoint& z,
                  double inflation, int mesh_phases = 6);
int overlap_count(const DefiningFunction& df, const Covering& cov,
                  const CPoint& z, double inflation, int mesh_phases = 6);

/// Renumbering of the covering around z: groups keyed by (annulus index i,
/// absolute layer j), plus the layer origin j0 whose level matches |rho(z)|.
struct RenumberGroups {
  int j0 = 0;
  std::map<std::pair<int, int>, std::vector<int>> groups;
};

RenumberGroups renumber_around(const DefiningFunction& df, const Covering& cov,
                               const CPoint& z);

/// Stable text serialization (format `covering 1`, documented in the README).
void write_covering(std::ostream& out, const Covering& cov);
Covering read_covering(std::istream& in);

}  // namespace holex
