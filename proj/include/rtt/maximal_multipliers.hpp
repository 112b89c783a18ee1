#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "rtt/dyadic_geometry.hpp"
#include "rtt/grid_fourier.hpp"
#include "rtt/norms_size.hpp"

namespace rtt {

/// Sorted, distinct frequencies lambda_1 < ... < lambda_N.
class FrequencySet {
 public:
  explicit FrequencySet(std::vector<double> lambdas);
  const std::vector<double>& lambdas() const { return lambdas_; }
  std::size_t size() const { return lambdas_.size(); }

 private:
  std::vector<double> lambdas_;
};

/// Dyadic intervals of length 2^k containing some lambda, in increasing order.
std::vector<DyadicInterval> build_Rk(const FrequencySet& lambdas, int k);

struct ScaleEntry {
  DyadicInterval omega;
  AdaptedBump bump;
  cd coefficient;  // m_omega = coefficient * bump, |coefficient| <= 1

  cd operator()(double xi) const { return coefficient * bump(xi); }
};

struct ScaleMultipliers {
  int k = 0;
  std::vector<ScaleEntry> entries;
};

/// m_omega for omega in R_k over a range of scales.
struct LambdaFamily {
  FrequencySet lambdas;
  double C = 1.0;
  std::vector<ScaleMultipliers> scales;  // increasing k

  const ScaleMultipliers& at(int k) const;
  /// Summed multiplier of scale k at each grid frequency (slot order).
  std::vector<cd> samples(const Grid& g, int k) const;
  /// One multiplier per scale, for the maximal-multiplier estimator.
  MultiplierFamily as_multiplier_family(const Grid& g) const;
};

/// Bump index 0 on every omega with a coefficient of magnitude in [1/2, 1] and uniform phase.
LambdaFamily random_family(const FrequencySet& lambdas, int k_min, int k_max, double C, std::mt19937_64& rng);
/// Bump index 0 with coefficient one on every omega.
LambdaFamily flat_family(const FrequencySet& lambdas, int k_min, int k_max, double C);

SampledFunction delta_k(const LambdaFamily& fam, const SampledFunction& f, int k);
/// sup_k |Delta_k f| pointwise.
std::vector<double> sup_delta(const LambdaFamily& fam, const SampledFunction& f);

/// max over lambda_n of the V^r norm of k -> m_{omega_k}(lambda_n), omega_k the R_k interval holding lambda_n.
double vr_star(const LambdaFamily& fam, double r);

struct GrowthScanConfig {
  double q = 1.5;
  double r = 3.0;
  double eps = 0.01;
  std::vector<int> N_list{1, 2, 4, 8, 16, 32};
  int trials = 50;
  std::uint64_t seed = 1;
  int J = 10;
  double L = 64.0;
  int k_min = -3;
  int k_max = 2;
  double C = 0.0;  // 0 selects the adapted-bump family constant
};

struct GrowthScanRow {
  double q, r, eps;
  int N;
  int trial_count;
  double max_ratio;      // max of ||sup|Delta_k f|||_q / (N^{1/q-1/r+eps} (C + vr*) ||f||_q)
  double max_numerator;  // max of ||sup|Delta_k f|||_q / ||f||_q
  double fitted_slope;   // log-log slope of max_numerator against N
};

std::vector<GrowthScanRow> thm41_scan(const GrowthScanConfig& cfg);
std::string growth_scan_csv(const std::vector<GrowthScanRow>& rows);

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Independent stream for (seed, a, b): splitmix64 mixing.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

}  // namespace rtt
