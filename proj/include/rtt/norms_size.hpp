#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "rtt/dyadic_geometry.hpp"
#include "rtt/grid_fourier.hpp"

namespace rtt {

struct VariationResult {
  double value = 0.0;     // sup_part + variation
  double sup_part = 0.0;  // sup_k |x_k|
  double variation = 0.0;
  std::vector<std::size_t> best_subsequence;
};

/// sup_k |x_k| + sup over increasing subsequences of (sum |x_{k_j} - x_{k_{j-1}}|^r)^{1/r}.
/// Exact, O(n^2).
VariationResult variational_norm(std::span<const cd> x, double r);
VariationResult variational_norm(std::span<const double> x, double r);

/// (1 + |x - c(I)| / |I|)^{-M}.
double chi_tilde(const Interval& I, double x, double M = 1.0);

/// Member of a fixed finite family of smooth bumps supported on omega.
/// Index v in [0, 8): translation t = v % 4 (t = 0 spans omega, t = 1..3 are
/// half-width bumps centered at the quarter points) and modulation v / 4 (the
/// second one carries e^{-2 pi i (xi - c) / |omega|}).
class AdaptedBump {
 public:
  static constexpr int kFamilySize = 8;

  AdaptedBump(const Interval& omega, double C, int index);

  const Interval& omega() const { return omega_; }
  double constant() const { return C_; }
  int index() const { return index_; }

  cd operator()(double xi) const;
  /// Multiplier samples at each grid frequency (slot order).
  std::vector<cd> samples(const Grid& g) const;

  /// Smallest C for which the variant satisfies |m| <= C and |m'| <= C / |omega|.
  static double required_constant(int index);
  /// Smallest C that admits every member of the family.
  static double family_constant();

 private:
  Interval omega_;
  double C_;
  int index_;
  double center_;
  double width_;
  bool modulated_;
};

AdaptedBump make_adapted_bump(const Interval& omega, double C, int index);

/// Size of tile collections for a fixed f: for each tile the max over the
/// first `family_size` bumps m adapted to 10 omega_s (clipped to the frequency
/// box) of |I_s|^{-1/2} || chi~_{I_s}^{10} T_m f ||_2.  Filtered functions are
/// cached per frequency interval, so tiles sharing omega_s cost O(N) each.
class SizeEstimator {
 public:
  SizeEstimator(const SampledFunction& f, int family_size = AdaptedBump::kFamilySize);

  const Grid& grid() const { return fhat_.grid; }
  double tile(const Tile& s);
  double set(const TileSet& S);
  template <typename It>
  double range(It first, It last) {
    double m = 0.0;
    for (; first != last; ++first) m = std::max(m, tile(*first));
    return m;
  }

 private:
  const std::vector<std::vector<double>>& filtered(const DyadicInterval& omega);

  Spectrum fhat_;
  int family_size_;
  bool zero_;
  std::map<DyadicInterval, std::vector<std::vector<double>>> cache_;  // |T_m f|^2 per bump
  std::map<Tile, double> tile_cache_;
};

double tile_size(const TileSet& S, const SampledFunction& f, int family_size = AdaptedBump::kFamilySize);

/// Multipliers m_k sampled on one grid (slot order), one vector per k.
struct MultiplierFamily {
  Grid grid;
  std::vector<std::vector<cd>> m;
};

/// ||sup_k |T_{m_k} g|||_q / ||g||_q.
double maximal_multiplier_ratio(const MultiplierFamily& fam, const SampledFunction& g, double q);

struct SearchBudget {
  int restarts = 4;
  int iterations = 200;
  int basis_size = 12;
  std::uint64_t seed = 1;
};

struct MmLowerResult {
  double value = 0.0;
  std::vector<cd> best;  // extremizing candidate (unnormalized)
};

/// Certified lower bound on the M*_q norm of the family: the best ratio over
/// canonical bumps, modulated bumps and randomly restarted coordinate ascent.
MmLowerResult mm_norm_lower_search(const MultiplierFamily& fam, double q, const SearchBudget& budget);
double mm_norm_lower(const MultiplierFamily& fam, double q, const SearchBudget& budget = {});

}  // namespace rtt
