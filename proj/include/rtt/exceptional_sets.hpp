#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rtt/dyadic_geometry.hpp"
#include "rtt/grid_fourier.hpp"
#include "rtt/norms_size.hpp"
#include "rtt/tree_algorithms.hpp"
#include "rtt/wavepacket_frame.hpp"

namespace rtt {

struct ParamEntry {
  double p, q, eps, lambda;
  int n;
  double Q, b;
  double sigma, beta, gamma;
  bool check_exponents;   // 1/p + 1/q < 3/2
  bool check_b;  // 0 < b < p
  bool check_decay;  // eps + (2 + eps) Q < 1
  bool check_Q;   // Q < 1 - 1/p
};

/// Q = 1/q - 1/2 + eps, b = (1 - pQ)/(1 - 2Q), sigma = 2^{-n},
/// beta = 2^{(2+eps)n} lambda^p, gamma = 2^{-n((2+eps)Q + eps)} lambda^{1 - Qp - 3 eps}.
/// Throws InvalidParameter naming the failed condition.
ParamEntry params(double p, double q, double eps, double lambda, int n);

/// Subset of grid samples; measure = count * dx.
struct GridSet {
  Grid grid;
  std::vector<std::uint8_t> mask;

  explicit GridSet(const Grid& g) : grid(g), mask(g.size(), 0) {}
  double measure() const;
  std::size_t count() const;
  bool contains(std::size_t n) const { return mask[n] != 0; }
  GridSet& operator|=(const GridSet& o);
  bool subset_of(const GridSet& o) const;
};

/// {x : M 1_F(x) >= lambda^b}.
GridSet build_E(const SampledFunction& F_indicator, double lambda, double b);
GridSet set_of(const SampledFunction& F_indicator);

/// Grid samples inside the half-open interval, clipped to the box.
bool interval_meets_complement(const Interval& I, const GridSet& E);

struct SplitS {
  TileSet S1;  // I_s meets the complement of E
  TileSet S2;
};
SplitS split_S(const TileSet& S, const GridSet& E);

struct KappaSplit {
  std::map<int, TileSet> by_kappa;
  TileSet unreached;  // no dilate inside the box meets the complement (E is everything)
};
/// kappa >= 1 with 2^{kappa-1} I_s inside E and 2^kappa I_s meeting its complement.
KappaSplit split_S2_kappa(const TileSet& S2, const GridSet& E);

/// Counting function x -> #{T : x in 2^l I_T} (difference arrays).
std::vector<int> e1_counting(const std::vector<Tree>& trees, const Grid& g, int l);

struct LevelSet {
  GridSet set;
  int l_max = 0;  // last l included before truncation
};

/// Union over l >= l_min of {count_l > beta 2^{2l}}.  The union stops once
/// beta 2^{2l} >= #trees, after which no level set can be nonempty.
LevelSet build_E1(const std::vector<Tree>& trees, const Grid& g, double beta, int l_min = 0);

/// x -> || sum_{s in T, |I_s| = 2^j} a_s phi^(alpha)_{s,T}(x, xi_T) ||_{V^r_j}.
std::vector<double> e2_tree_values(const FrameContext& ctx, const Tree& T, const std::map<Tile, cd>& a, int alpha,
                                   double r);

/// Union over l, m and T_{l,m} (T in the forest, built from the saturation in P)
/// of {e2_tree_values > gamma 2^{-10 l} (|m| + 1)^{-2}}.  l stops once 2^l |I_T| >= 2L.
/// Throws InvalidInput when sup |a_s| / |I_s|^{1/2} > sigma.
LevelSet build_E2(const FrameContext& ctx, const std::vector<Tree>& forest, const TileSet& P,
                  const std::map<Tile, cd>& a, double gamma, double r, double sigma, int l_min = 0);

struct PointwiseCheck {
  double lhs_lower = 0.0;
  double rhs = 0.0;
};

/// lhs_lower: M*_q lower bound of the theta-family k -> sum_{|I_s| = 2^k} a_s phi_s(x, theta);
/// rhs = beta^{1/q - 1/r + eps} (gamma + sigma).
PointwiseCheck check_pointwise_bound(const FrameContext& ctx, std::size_t x_index, const TileSet& P,
                                     const std::map<Tile, cd>& a, const ParamEntry& ledger, double r,
                                     const SearchBudget& budget = {2, 60, 8, 1});

struct PipelineConfig {
  int J = 10;
  double L = 64.0;
  double p = 1.8;
  double q = 1.5;
  double eps = 0.01;
  double r = 0.0;  // 0 selects the midpoint of (2, 1/(1/2 - eps))
  double lambda = 0.5;
  int k_min = -1;
  int k_max = 2;
  double freq_lo = -1.0;
  double freq_hi = 1.0;
  int x_samples = 100;
  std::uint64_t seed = 1;
  SearchBudget budget{2, 60, 8, 1};
};

struct PipelineLevel {
  int n;
  std::size_t tiles, trees;
  double sigma, beta, gamma;
  double measure_E1, measure_E2;
  int l_max_E1, l_max_E2;
};

struct PipelineResult {
  double measure_F = 0, measure_E = 0, measure_Estar = 0, measure_total = 0;
  double c_sigma = 1.0;  // sigma_n = c_sigma 2^{-n}
  std::size_t S1 = 0, S2 = 0;
  std::vector<PipelineLevel> levels;
  std::vector<double> ratios;  // lhs_lower / rhs over sampled (x, n)
  double ratio_p95 = 0.0;  // NaN when no sample lies outside E*
  ParamEntry ledger{};
  double r = 0.0;
};

/// Random F (union of intervals), the tile universe of the config, and the full chain
/// E -> S1 -> forests -> E1, E2 -> E* -> pointwise checks at x outside E*.
PipelineResult run_pipeline(const PipelineConfig& cfg);
/// Midpoint of the admissible r range (2, 1/(1/2 - eps)) where 1/q - 1/r < Q holds.
double default_r(double eps);
std::string pipeline_levels_csv(const PipelineResult& r);

double percentile(std::vector<double> v, double pct);

}  // namespace rtt
