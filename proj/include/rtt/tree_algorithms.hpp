#pragma once

#include <iosfwd>
#include <map>
#include <utility>
#include <vector>

#include "rtt/dyadic_geometry.hpp"
#include "rtt/grid_fourier.hpp"
#include "rtt/norms_size.hpp"
#include "rtt/wavepacket_frame.hpp"

namespace rtt {

struct ForestLevel {
  int n = 0;
  Forest forest;
  double size = 0.0;          // recomputed size of P_n
  double top_length_sum = 0;  // sum over trees of |I_T|
};

struct ForestDecomposition {
  std::vector<ForestLevel> levels;
  int delta = 0;  // first level

  TileSet all_tiles() const;
  /// Lines "level tree k_time m_time k_freq m_freq", trees numbered within a level.
  void write(std::ostream& os) const;
};

struct SelectOptions {
  int family_size = AdaptedBump::kFamilySize;
  /// Levels beyond this receive whatever is left (all of it has size below 2^{-n_cap}).
  int level_cap = 52;
  /// Convexity precondition, checked over the grid box and the scale range of S.
  bool check_convex = true;
};

/// Size-decrement greedy: at level n, while the residual has size > 2^{-(n+1)},
/// take the offending tile s (size > 2^{-(n+1)}) with the longest I_s, then
/// lowest omega_s left endpoint, then leftmost I_s, and remove the tree
/// {t in residual : t <= s}.  The removed trees form P_n.
ForestDecomposition select_forests(const TileSet& S, const SampledFunction& f, const SelectOptions& opts = {});

/// Cutoff equal to 1 on [-1/4, 1/4], supported in [-1/2, 1/2].
double tree_cutoff(double u);

/// Split phi_s = tilde + main relative to a tree top frequency xi_T, with
/// D(x) = cutoff((x - c(I_s)) / (2^{l-1} |I_s|)) so that tilde lives on 2^{l-1} I_s.
class TreePieces {
 public:
  TreePieces(const FrameContext& ctx, const Tile& s, double xi_T, int l);

  const Tile& tile() const { return tile_; }
  int level() const { return l_; }
  double top_frequency() const { return xi_T_; }
  const std::vector<double>& cutoff() const { return D_; }
  const ModelFunction& model() const { return phi_; }

  /// (tilde, main) at theta; for l = 0 tilde is zero and main is phi_s.
  std::pair<SampledFunction, SampledFunction> at_theta(double theta) const;
  SampledFunction main_at(double theta) const { return at_theta(theta).second; }
  SampledFunction tilde_at(double theta) const { return at_theta(theta).first; }

 private:
  Tile tile_;
  double xi_T_;
  int l_;
  ModelFunction phi_;
  std::vector<double> D_;
  double Z_ = 0.0;
};

TreePieces tree_decompose(const FrameContext& ctx, const Tile& s, const Tree& T, int l);

/// Pointwise V^r over j in Z of per-scale rows; absent scales are zero, including one
/// scale below and one above the populated range.
std::vector<double> scale_variation(const std::map<int, std::vector<cd>>& by_scale, std::size_t size, double r);

struct TreeVariationResult {
  double lhs = 0.0;
  double rhs_scale = 0.0;
};

/// lhs = || V^r_k ( sum_{s in T, |I_s| = 2^k} <f, phi_s> phi^(l)_{s,T}(x, xi_T) ) ||_{L^t_x},
/// rhs_scale = 2^{-M l} size(T) |I_T|^{1/t}.
TreeVariationResult verify_prop_3_7(const FrameContext& ctx, const Tree& T, const SampledFunction& f, int l, double r,
                             double t, double M = 4.0);

}  // namespace rtt
