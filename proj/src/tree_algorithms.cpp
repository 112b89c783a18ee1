#include "rtt/tree_algorithms.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace rtt {

TileSet ForestDecomposition::all_tiles() const {
  TileSet out;
  for (const auto& lv : levels) {
    const TileSet t = lv.forest.all_tiles();
    out.insert(t.begin(), t.end());
  }
  return out;
}

void ForestDecomposition::write(std::ostream& os) const {
  for (const auto& lv : levels)
    for (std::size_t i = 0; i < lv.forest.trees.size(); ++i)
      for (const Tile& t : lv.forest.trees[i].tiles)
        os << lv.n << ' ' << i << ' ' << t.time.k << ' ' << t.time.m << ' ' << t.freq.k << ' ' << t.freq.m << '\n';
}

ForestDecomposition select_forests(const TileSet& S, const SampledFunction& f, const SelectOptions& opts) {
  const Grid& g = f.grid;
  ForestDecomposition out;
  if (S.empty()) return out;
  int kmin = S.begin()->time.k, kmax = kmin;
  for (const Tile& s : S) {
    if (!fits_in_grid(s, g)) throw InvalidInput("select_forests: tile does not fit in the grid box");
    kmin = std::min(kmin, s.time.k);
    kmax = std::max(kmax, s.time.k);
  }
  if (opts.check_convex && !is_convex(S, UniverseBounds::for_grid(g, kmin, kmax)))
    throw InvalidInput("select_forests: tile collection is not convex");

  SizeEstimator est(f, opts.family_size);
  std::map<Tile, double> size;
  double total = 0.0;
  for (const Tile& s : S) total = std::max(total, size[s] = est.tile(s));

  // Static priority: longest I_s, lowest omega_s left endpoint, leftmost I_s.
  std::vector<Tile> order(S.begin(), S.end());
  std::sort(order.begin(), order.end(), [](const Tile& a, const Tile& b) {
    if (a.time.k != b.time.k) return a.time.k > b.time.k;
    if (a.freq.lo() != b.freq.lo()) return a.freq.lo() < b.freq.lo();
    return a.time.lo() < b.time.lo();
  });

  TileSet residual = S;
  out.delta = total > 0.0 ? static_cast<int>(std::floor(-std::log2(total))) : opts.level_cap;
  out.delta = std::min(out.delta, opts.level_cap);
  for (int n = out.delta; !residual.empty(); ++n) {
    ForestLevel lv;
    lv.n = n;
    lv.forest.level = n;
    if (n >= opts.level_cap) {
      Tree rest;
      rest.tiles = residual;
      for (Tree& t : decompose_top_trees(rest)) {
        lv.top_length_sum += t.top_interval.length();
        lv.forest.trees.push_back(std::move(t));
      }
      residual.clear();
    } else {
      const double threshold = std::ldexp(1.0, -(n + 1));
      for (const Tile& s : order) {
        if (!residual.contains(s) || !(size[s] > threshold)) continue;
        TileSet tree;
        for (auto it = residual.begin(); it != residual.end();) {
          if (tile_le(*it, s)) {
            tree.insert(*it);
            it = residual.erase(it);
          } else {
            ++it;
          }
        }
        lv.top_length_sum += s.time.length();
        lv.forest.trees.push_back(Tree::with_top_tile(s, std::move(tree)));
      }
    }
    const TileSet pn = lv.forest.all_tiles();
    lv.size = est.range(pn.begin(), pn.end());
    if (n < opts.level_cap && lv.size > std::ldexp(1.0, -n))
      throw std::logic_error("select_forests: level size certificate violated");
    out.levels.push_back(std::move(lv));
  }
  return out;
}

double tree_cutoff(double u) {
  const double a = std::abs(u);
  if (a <= 0.25) return 1.0;
  if (a >= 0.5) return 0.0;
  return smooth_step(2.0 - 4.0 * a, 1.0);
}

TreePieces::TreePieces(const FrameContext& ctx, const Tile& s, double xi_T, int l)
    : tile_(s), xi_T_(xi_T), l_(l), phi_(ctx.model(s)) {
  if (l < 0) throw InvalidParameter("tree_decompose: l must be nonnegative");
  if (l == 0) return;
  const Grid& g = ctx.grid();
  const double c = s.time.center();
  const double scale = std::ldexp(s.time.length(), l - 1);
  D_.resize(g.size());
  for (std::size_t n = 0; n < g.size(); ++n) {
    D_[n] = tree_cutoff((g.x(n) - c) / scale);
    Z_ += D_[n];
  }
  Z_ *= g.dx();
}

std::pair<SampledFunction, SampledFunction> TreePieces::at_theta(double theta) const {
  SampledFunction phi = phi_.at_theta(theta);
  const Grid& g = phi.grid;
  SampledFunction tilde(g);
  if (l_ == 0) return {std::move(tilde), std::move(phi)};
  // A = int phi_s(x, theta) e^{-2 pi i xi_T x} D(x) dx
  cd A = 0.0;
  std::vector<cd> mod(g.size());
  for (std::size_t n = 0; n < g.size(); ++n) {
    mod[n] = std::polar(1.0, kTwoPi * xi_T_ * g.x(n));
    A += phi[n] * std::conj(mod[n]) * D_[n];
  }
  A *= g.dx() / Z_;
  SampledFunction main(g);
  for (std::size_t n = 0; n < g.size(); ++n) {
    const cd lifted = mod[n] * D_[n] * A;
    tilde[n] = phi[n] * D_[n] - lifted;
    main[n] = lifted + phi[n] * (1.0 - D_[n]);
  }
  return {std::move(tilde), std::move(main)};
}

std::vector<double> scale_variation(const std::map<int, std::vector<cd>>& by_scale, std::size_t size, double r) {
  std::vector<double> out(size, 0.0);
  if (by_scale.empty()) return out;
  const int k0 = by_scale.begin()->first - 1, k1 = by_scale.rbegin()->first + 1;
  std::vector<const std::vector<cd>*> rows;
  for (int k = k0; k <= k1; ++k) {
    auto it = by_scale.find(k);
    rows.push_back(it == by_scale.end() ? nullptr : &it->second);
  }
  std::vector<cd> seq(rows.size());
  for (std::size_t n = 0; n < size; ++n) {
    for (std::size_t i = 0; i < rows.size(); ++i) seq[i] = rows[i] ? (*rows[i])[n] : cd(0.0);
    out[n] = variational_norm(seq, r).value;
  }
  return out;
}

TreePieces tree_decompose(const FrameContext& ctx, const Tile& s, const Tree& T, int l) {
  if (!T.tiles.contains(s)) throw InvalidInput("tree_decompose: tile is not in the tree");
  return TreePieces(ctx, s, T.top_frequency, l);
}

TreeVariationResult verify_prop_3_7(const FrameContext& ctx, const Tree& T, const SampledFunction& f, int l, double r,
                             double t, double M) {
  if (!(r > 2.0)) throw InvalidParameter("verify_prop_3_7: r must exceed 2");
  if (!(t > 1.0) || std::isinf(t)) throw InvalidParameter("verify_prop_3_7: t must lie in (1, inf)");
  const Grid& g = ctx.grid();
  TreeVariationResult res;
  if (T.tiles.empty()) return res;

  std::map<int, std::vector<cd>> by_scale;
  for (const Tile& s : T.tiles) {
    const cd coef = inner(f, tile_packet(*ctx.window, s));
    auto& acc = by_scale[s.time.k];
    if (acc.empty()) acc.assign(g.size(), 0.0);
    if (coef == cd(0.0)) continue;
    const SampledFunction piece = TreePieces(ctx, s, T.top_frequency, l).main_at(T.top_frequency);
    for (std::size_t n = 0; n < g.size(); ++n) acc[n] += coef * piece[n];
  }
  const std::vector<double> vr = scale_variation(by_scale, g.size(), r);
  res.lhs = lp_norm(vr, g.dx(), t);
  res.rhs_scale = std::pow(2.0, -M * l) * tile_size(T.tiles, f) * std::pow(T.top_interval.length(), 1.0 / t);
  return res;
}

}  // namespace rtt
