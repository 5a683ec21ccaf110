#pragma once

#include <functional>
#include <string>
#include <vector>

#include "holex/currents.hpp"
#include "holex/glue.hpp"
#include "holex/kernels.hpp"
#include "holex/variety.hpp"

namespace holex {

struct NormEstimate {
  enum class Kind { Lq, BmoGradient, Sup } kind = Kind::Lq;
  double value = 0.0;
  double q = 2.0;
  int budget = 0;
  std::uint64_t seed = 0;
  // per-stratum contributions (|rho| band edge, estimated mass)
  std::vector<std::pair<double, double>> strata;
};

using ScalarField = std::function<Complex(const CPoint&)>;

/// Stratified Monte Carlo estimate of (integral_D |F|^q dV)^{1/q}, with
/// radial stratification by dyadic |rho| bands below eps0.
NormEstimate lq_norm_estimate(const ScalarField& field,
                              const DefiningFunction& df, double q, int budget,
                              std::uint64_t seed, double eps0 = 0.2,
                              int bands = 6);

/// sup over shell samples of |rho| * |dF| (finite-difference differential);
/// the BMO sufficient criterion.
NormEstimate bmo_gradient_bound(const ScalarField& field,
                                const DefiningFunction& df, int budget,
                                std::uint64_t seed, double eps0 = 0.2,
                                double fd_step = 1e-5);

struct CheckResult {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct Th0Report {
  CheckResult vanishing;    // (i) |rho|^N decay along boundary rays
  CheckResult weighted_lq;  // (ii) finiteness/stability of weighted norms
  CheckResult on_x;         // (iii) dbar residuals on X cap D
  std::vector<double> ray_profile;  // measured (i) proxy along the ray
  std::vector<double> weighted_values;
  bool pass = false;
};

struct Th0Params {
  int k = 1;
  int vanish_order = 5;  // N in hypothesis (i)
  double q = 2.0;
  int ray_count = 6;
  int ray_levels = 6;
  int lq_budget = 20000;
  int on_x_samples = 40;
  double on_x_tol = 1e-4;
  double decay_factor = 0.1;  // (i): final/maximal proxy ratio required
  double rho_lo = 0.05;       // sampling floor
  double rho_hi = 0.18;
  std::uint64_t seed = 7;
  std::vector<CVector> ray_dirs;  // optional; seeded directions when empty
};

Th0Report th0_hypothesis_check(const GlobalExtension& ext, const MultiPoly& f,
                               const Th0Params& params);

struct SchurReport {
  struct Entry {
    double eps;
    double c_direct;     // measured constant of the first inequality
    double c_symmetric;  // measured constant of the second
  };
  std::vector<Entry> entries;
  bool finite = false;
};

struct SchurParams {
  std::vector<double> eps{0.25, 0.5, 0.75};
  int weight_power = 2;  // N' in the kernel envelope
  int z_probes = 24;
  double shell_depth = 0.2;
  DomainQuadParams quad;
  std::uint64_t seed = 11;
};

SchurReport schur_kernel_check(const DefiningFunction& df,
                               const SchurParams& params);

struct DiscConditionReport {
  struct Ball {
    int index = 0;
    double sup = 0.0;
    double c_j = 0.0;
    int shranks = 0;  // times the disc had to shrink to stay inside D
  };
  std::vector<Ball> balls;
  double sup_max = 0.0;
  double c_sum = 0.0;
  bool mode_sup = true;
  double q = 2.0;
};

struct DiscParams {
  bool mode_sup = true;
  double q = 2.0;
  double radius_factor = 1.5;  // disc radius = factor * C^2 sqrt(c|rho|)
  double metric_C = 2.0;
  double c = 0.1;
  int bases_per_ball = 3;
  int circle_samples = 32;
  std::uint64_t seed = 13;
};

DiscConditionReport disc_condition_check(const GlobalExtension& ext,
                                         const DiscParams& params);

}  // namespace holex
