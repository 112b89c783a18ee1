#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "rtt/grid_fourier.hpp"

namespace rtt {

/// [m 2^k, (m+1) 2^k).  All endpoints are dyadic rationals, so doubles are exact.
struct DyadicInterval {
  int k = 0;
  long m = 0;

  double length() const;
  double lo() const { return static_cast<double>(m) * length(); }
  double hi() const { return static_cast<double>(m + 1) * length(); }
  double center() const { return (static_cast<double>(m) + 0.5) * length(); }

  bool contains(const DyadicInterval& other) const;
  bool contains(double x) const { return x >= lo() && x < hi(); }
  /// Unique dyadic interval at scale `k_up` >= k containing this one.
  DyadicInterval ancestor(int k_up) const;

  auto operator<=>(const DyadicInterval&) const = default;
};

/// Half-open interval with arbitrary (here always dyadic-rational) endpoints.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  static Interval of(const DyadicInterval& d) { return {d.lo(), d.hi()}; }

  double length() const { return hi - lo; }
  double center() const { return 0.5 * (lo + hi); }
  /// c*I: same center, length scaled by c.
  Interval dilate(double c) const;
  Interval shift(double t) const { return {lo + t, hi + t}; }
  bool intersects(const Interval& o) const { return lo < o.hi && o.lo < hi; }
  bool contains(const Interval& o) const { return lo <= o.lo && o.hi <= hi; }
  bool contains(double x) const { return x >= lo && x < hi; }

  auto operator<=>(const Interval&) const = default;
};

/// Time-frequency tile I x omega with |I| |omega| = 1.
struct Tile {
  DyadicInterval time;
  DyadicInterval freq;

  /// Tile with |I| = 2^k at time position m_time and frequency position m_freq.
  static Tile make(int k, long m_time, long m_freq);

  int scale() const { return time.k; }

  auto operator<=>(const Tile&) const = default;
};

using TileSet = std::set<Tile>;

/// Convex tile collection with top (I_T, xi_T).
struct Tree {
  Interval top_interval;
  double top_frequency = 0.0;
  TileSet tiles;
  std::optional<Tile> top_tile;

  static Tree with_top_tile(const Tile& top, TileSet tiles);
};

struct Forest {
  int level = 0;
  std::vector<Tree> trees;

  TileSet all_tiles() const;
};

/// Finite window on the (infinite) universe of tiles: time scales
/// k_min..k_max, time intervals inside [0, L), frequency intervals inside
/// [freq_lo, freq_hi).
struct UniverseBounds {
  int k_min = 0;
  int k_max = 0;
  double L = 1.0;
  double freq_lo = 0.0;
  double freq_hi = 1.0;

  bool contains(const Tile& t) const;
  static UniverseBounds for_grid(const Grid& g, int k_min, int k_max);
};

std::vector<Tile> enumerate_universe(const UniverseBounds& b);

/// s <= t iff I_s is inside I_t and omega_t is inside omega_s.
bool tile_le(const Tile& s, const Tile& t);

/// Convexity of S relative to the tiles admitted by `bounds`.
bool is_convex(const TileSet& S, const UniverseBounds& bounds);

/// Tiles of P whose frequency interval contains omega_T.
TileSet saturation(const Tree& T, const TileSet& P);

/// Window 2^l I_T + 2^l m |I_T|.
Interval tlm_window(const Interval& top, int l, long m);

/// Partition of G into the trees T_{l,m}; only nonempty m are present.
std::map<long, Tree> partition_tlm(const TileSet& G, const Tree& T, int l);

/// l if |m| <= 1, else l + ceil(log2 |m|).
int alpha(int l, long m);

/// Split into trees with pairwise disjoint top tiles.  A tile under several
/// maximal tiles goes to the one with the lowest frequency left endpoint, then
/// the leftmost time interval.
std::vector<Tree> decompose_top_trees(const Tree& T);

/// One tile per line: k_time m_time k_freq m_freq.
void write_tiles(std::ostream& os, const TileSet& tiles);
TileSet read_tiles(std::istream& is);

/// Time interval inside [0, L), no shorter than dx, and frequency interval in the box.
bool fits_in_grid(const Tile& t, const Grid& g);

}  // namespace rtt
