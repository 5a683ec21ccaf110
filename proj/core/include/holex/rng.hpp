#pragma once

#include <cstdint>
#include <cmath>

#include "holex/types.hpp"

namespace holex {

/// Deterministic counter-free RNG (splitmix64). Unlike the standard
/// distributions the output stream is pinned by the standard's arithmetic,
/// so reports stay byte-identical across platforms and library versions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0,1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (always consumes two uniforms).
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  Complex unit_complex() {
    double th = uniform(0.0, 2.0 * kPi);
    return Complex(std::cos(th), std::sin(th));
  }

  /// Uniform direction on the unit sphere of C^n.
  CVector unit_vector(int n) {
    CVector v(n);
    double s;
    do {
      for (int j = 0; j < n; ++j) v[j] = Complex(normal(), normal());
      s = norm2(v);
    } while (s < 1e-12);
    return v / s;
  }

  /// Derive an independent stream; used to decouple stages from each other.
  Rng fork(std::uint64_t stream) const {
    Rng r(state_ ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
    r.next_u64();
    return r;
  }

 private:
  std::uint64_t state_;
};

}  // namespace holex
