#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "rtt/tree_algorithms.hpp"

using namespace rtt;

namespace {

// All tiles t <= top with |I_t| >= 2^kmin.
TileSet full_tree(const Tile& top, int kmin) {
  TileSet out;
  for (int k = kmin; k <= top.time.k; ++k) {
    const long count = 1L << (top.time.k - k);
    for (long j = 0; j < count; ++j)
      out.insert(Tile{{k, top.time.m * count + j}, top.freq.ancestor(-k)});
  }
  return out;
}

double l1_norm(const SampledFunction& f) { return lp_norm(f, 1.0); }

}  // namespace

TEST_CASE("tree pieces: sum, support, and theta support") {
  const Grid g(11, 16.0);
  const FrameContext ctx = FrameContext::make(g);
  const Tile top{{2, 2}, {-2, 1}};  // [8,12) x [1/4, 1/2)
  const Tree T = Tree::with_top_tile(top, full_tree(top, -1));
  for (const Tile& s : T.tiles) {
    for (int l = 0; l <= 3; ++l) {
      const TreePieces tp = tree_decompose(ctx, s, T, l);
      const Interval sup = tp.model().theta_support();
      for (double frac : {0.2, 0.5, 0.8}) {
        const double th = sup.lo + frac * sup.length();
        const auto [tilde, main] = tp.at_theta(th);
        const SampledFunction phi = tp.model().at_theta(th);
        double err = 0.0;
        for (std::size_t n = 0; n < g.size(); ++n) err = std::max(err, std::abs(tilde[n] + main[n] - phi[n]));
        CHECK(err <= 1e-12);
        if (l >= 1) {
          const Interval box = Interval::of(s.time).dilate(std::ldexp(1.0, l - 1));
          for (std::size_t n = 0; n < g.size(); ++n)
            if (!(g.x(n) > box.lo && g.x(n) < box.hi)) CHECK(std::abs(tilde[n]) <= 1e-12);
        }
      }
      // theta outside omega_s +- 2^{-k}: both pieces vanish
      for (double th : {sup.lo - 1e-3, sup.hi + 1e-3}) {
        const auto [tilde, main] = tp.at_theta(th);
        CHECK(lp_norm(main, 2.0) <= 1e-12);
        CHECK(lp_norm(tilde, 2.0) <= 1e-12);
      }
    }
  }
  CHECK_THROWS_AS(tree_decompose(ctx, Tile::make(0, 0, 0), T, 1), InvalidInput);
}

TEST_CASE("tree pieces: mean zero against the top frequency") {
  const Grid g(12, 16.0);
  const FrameContext ctx = FrameContext::make(g);
  // lacunary tree: every omega_s = [0, 2^{-k}) has xi_T = 0 as its left endpoint
  const Tile top{{2, 1}, {-2, 0}};
  Tree T = Tree::with_top_tile(top, full_tree(top, -2));
  T.top_frequency = 0.0;
  for (const Tile& s : T.tiles)
    for (int l = 1; l <= 3; ++l) {
      const TreePieces tp = tree_decompose(ctx, s, T, l);
      for (double frac : {0.1, 0.3, 0.6, 0.9}) {
        const Interval sup = tp.model().theta_support();
        const SampledFunction main = tp.main_at(sup.lo + frac * sup.length());
        cd mean = 0.0;
        for (std::size_t n = 0; n < g.size(); ++n) mean += main[n] * std::polar(1.0, -kTwoPi * T.top_frequency * g.x(n));
        mean *= g.dx();
        CHECK(std::abs(mean) <= 1e-8 * l1_norm(main));
      }
    }
}

TEST_CASE("tree pieces: the mean of the main piece is the packet transform at xi_T") {
  // For xi_T inside omega_s the main piece keeps int phi_s(x, theta) e^{-2 pi i xi_T x} dx.
  const Grid g(12, 16.0);
  const FrameContext ctx = FrameContext::make(g);
  const Tile top{{1, 3}, {-1, 1}};  // omega_T = [1/2, 1)
  Tree T = Tree::with_top_tile(top, full_tree(top, -1));
  T.top_frequency = 0.6875;  // a grid frequency inside every omega_s
  for (const Tile& s : T.tiles) {
    const TreePieces tp = tree_decompose(ctx, s, T, 2);
    const double th = s.freq.center();
    const SampledFunction main = tp.main_at(th);
    cd mean = 0.0;
    for (std::size_t n = 0; n < g.size(); ++n) mean += main[n] * std::polar(1.0, -kTwoPi * T.top_frequency * g.x(n));
    mean *= g.dx();
    const Spectrum spec = tp.model().spectrum_at_theta(th);
    const cd expected = spec[g.slot_of(std::lround(T.top_frequency * g.L()))];
    CHECK(std::abs(mean - expected) <= 1e-10);
  }
}

TEST_CASE("tree pieces: theta derivative envelope is scale covariant") {
  const Grid g(12, 32.0);
  const FrameContext ctx = FrameContext::make(g);
  const auto envelope = [&](const Tile& s, int l) {
    Tree T = Tree::with_top_tile(s, {s});
    T.top_frequency = s.freq.lo();
    const TreePieces tp = tree_decompose(ctx, s, T, l);
    const Interval sup = tp.model().theta_support();
    const double h = 1e-4 * s.freq.length();
    double e = 0.0;
    for (double frac : {0.15, 0.35, 0.5, 0.65, 0.85}) {
      const double th = sup.lo + frac * sup.length();
      const SampledFunction a = tp.main_at(th + h), b = tp.main_at(th - h);
      for (std::size_t n = 0; n < g.size(); ++n) {
        const double d = std::abs(a[n] - b[n]) / (2 * h);
        e = std::max(e, d / (std::sqrt(s.time.length()) * chi_tilde(Interval::of(s.time), g.x(n), 4.0)));
      }
    }
    return e;
  };
  for (int l : {0, 1, 2}) {
    const double c = envelope(Tile::make(0, 16, 2), l);
    CHECK(std::isfinite(c));
    for (const Tile& s : {Tile::make(-1, 33, 4), Tile::make(1, 8, 1), Tile::make(-2, 64, 8)})
      CHECK(envelope(s, l) <= c * 1.05);
  }
}

TEST_CASE("forest selection invariants") {
  const Grid g(10, 16.0);
  std::mt19937_64 rng(21);
  std::normal_distribution<double> nd(0.0, 1.0);
  const Window w = build_window(g);
  for (int trial = 0; trial < 6; ++trial) {
    TileSet S;
    for (const Tile& top : {Tile{{2, 1}, {-2, 2}}, Tile{{2, 2}, {-2, 3}}, Tile{{1, 5}, {-1, 1}}}) {
      const TileSet t = full_tree(top, -1);
      S.insert(t.begin(), t.end());
    }
    REQUIRE(is_convex(S, UniverseBounds::for_grid(g, -1, 2)));
    SampledFunction f(g);
    for (const Tile& s : S)
      if (nd(rng) > 0.5) {
        const SampledFunction p = tile_packet(w, s);
        const double a = nd(rng);
        for (std::size_t n = 0; n < g.size(); ++n) f[n] += a * p[n];
      }
    const ForestDecomposition dec = select_forests(S, f);
    CHECK(dec.all_tiles() == S);
    std::size_t total = 0;
    for (const ForestLevel& lv : dec.levels) {
      const TileSet pn = lv.forest.all_tiles();
      total += pn.size();
      if (lv.n < 52) CHECK(tile_size(pn, f) <= std::ldexp(1.0, -lv.n));
      CHECK(is_convex(pn, UniverseBounds::for_grid(g, -1, 2)));
      std::size_t in_trees = 0;
      for (const Tree& t : lv.forest.trees) {
        in_trees += t.tiles.size();
        REQUIRE(t.top_tile.has_value());
        for (const Tile& s : t.tiles) CHECK(tile_le(s, *t.top_tile));
      }
      CHECK(in_trees == pn.size());
    }
    CHECK(total == S.size());
  }
}

TEST_CASE("forest selection: zero function and a single packet") {
  const Grid g(10, 16.0);
  const Tile top{{2, 1}, {-2, 2}};
  const TileSet S = full_tree(top, -1);
  const ForestDecomposition z = select_forests(S, SampledFunction(g));
  REQUIRE(z.levels.size() == 1);
  CHECK(z.levels[0].n == 52);
  CHECK(z.all_tiles() == S);

  const Window w = build_window(g);
  const Tile s0{{0, 5}, {0, 0}};
  REQUIRE(S.contains(s0));
  const SampledFunction f = tile_packet(w, s0);
  const ForestDecomposition dec = select_forests(S, f);
  const double own = tile_size({s0}, f);
  const int expected_level = static_cast<int>(std::ceil(-std::log2(own)));
  bool found = false;
  for (const ForestLevel& lv : dec.levels)
    for (std::size_t i = 0; i < lv.forest.trees.size(); ++i)
      if (lv.forest.trees[i].tiles.contains(s0)) {
        found = true;
        CHECK(std::abs(lv.n - expected_level) <= 2);
      }
  CHECK(found);
  // the first selected tree holds s0
  REQUIRE_FALSE(dec.levels.empty());
  const ForestLevel* first = nullptr;
  for (const ForestLevel& lv : dec.levels)
    if (!lv.forest.trees.empty()) {
      first = &lv;
      break;
    }
  REQUIRE(first != nullptr);
  CHECK(first->forest.trees.front().tiles.contains(s0));

  std::ostringstream os;
  dec.write(os);
  CHECK(os.str().find('\n') != std::string::npos);
}

TEST_CASE("forest selection rejects non-convex input") {
  const Grid g(10, 16.0);
  const TileSet S{Tile::make(0, 0, 0), Tile{{2, 0}, {-2, 0}}};
  CHECK_THROWS_AS(select_forests(S, SampledFunction(g)), InvalidInput);
}

TEST_CASE("variational tree estimate verifier") {
  const Grid g(10, 16.0);
  const FrameContext ctx = FrameContext::make(g);
  const Tile top{{2, 1}, {-2, 0}};
  Tree T = Tree::with_top_tile(top, full_tree(top, -1));
  T.top_frequency = 0.0;
  CHECK(verify_prop_3_7(ctx, T, SampledFunction(g), 1, 3.0, 2.0).lhs == 0.0);

  // single tile, l = 0: the scale sequence is (0, v, 0), so V^3 = (1 + 2^{1/3}) |v|
  const Tile s = Tile::make(0, 5, 0);
  Tree single = Tree::with_top_tile(s, {s});
  single.top_frequency = 0.5;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd(0.0, 1.0);
  SampledFunction f(g);
  for (auto& v : f.values) v = nd(rng);
  const TreeVariationResult r = verify_prop_3_7(ctx, single, f, 0, 3.0, 2.0);
  const cd coef = inner(f, tile_packet(*ctx.window, s));
  const SampledFunction row = ctx.model(s).at_theta(0.5);
  double acc = 0.0;
  for (std::size_t n = 0; n < g.size(); ++n) acc += std::norm(coef * row[n]) * g.dx();
  CHECK(r.lhs == doctest::Approx((1.0 + std::cbrt(2.0)) * std::sqrt(acc)).epsilon(1e-10));
  CHECK_THROWS_AS(verify_prop_3_7(ctx, T, f, 0, 2.0, 2.0), InvalidParameter);
  CHECK_THROWS_AS(verify_prop_3_7(ctx, T, f, 0, 3.0, 1.0), InvalidParameter);
}

TEST_CASE("variational tree estimate ratio is bounded by one constant across trees and l (M = 0)") {
  const Grid g(10, 16.0);
  const FrameContext ctx = FrameContext::make(g);
  std::mt19937_64 rng(17);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::uniform_int_distribution<long> pos(0, 3);
  std::vector<double> ratios;
  for (int trial = 0; trial < 10; ++trial) {
    const Tile top{{2, pos(rng)}, {-2, 0}};
    Tree T = Tree::with_top_tile(top, full_tree(top, -1));
    T.top_frequency = 0.0;
    SampledFunction f(g);
    for (auto& v : f.values) v = cd(nd(rng), nd(rng));
    for (int l : {0, 1, 2}) {
      const TreeVariationResult r = verify_prop_3_7(ctx, T, f, l, 3.0, 2.0, 0.0);
      ratios.push_back(r.lhs / r.rhs_scale);
    }
  }
  // fitted on the first half, verified on the second
  double c = 0.0;
  for (std::size_t i = 0; i < ratios.size() / 2; ++i) c = std::max(c, ratios[i]);
  for (std::size_t i = ratios.size() / 2; i < ratios.size(); ++i) CHECK(ratios[i] <= 2.0 * c);
}
