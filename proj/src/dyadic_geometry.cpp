#include "rtt/dyadic_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace rtt {

namespace {

long floor_div_pow2(long m, int shift) {
  // floor(m / 2^shift) for shift >= 0.
  if (shift <= 0) return m;
  return m >= 0 ? (m >> shift) : -(((-m) + (1L << shift) - 1) >> shift);
}

int ceil_log2(long v) {
  int e = 0;
  long p = 1;
  while (p < v) {
    p <<= 1;
    ++e;
  }
  return e;
}

}  // namespace

double DyadicInterval::length() const { return std::ldexp(1.0, k); }

bool DyadicInterval::contains(const DyadicInterval& o) const {
  if (o.k > k) return false;
  return o.ancestor(k).m == m;
}

DyadicInterval DyadicInterval::ancestor(int k_up) const {
  if (k_up < k) throw InvalidParameter("dyadic ancestor: target scale below interval scale");
  return {k_up, floor_div_pow2(m, k_up - k)};
}

Interval Interval::dilate(double c) const {
  const double half = 0.5 * c * length();
  const double mid = center();
  return {mid - half, mid + half};
}

Tile Tile::make(int k, long m_time, long m_freq) { return Tile{{k, m_time}, {-k, m_freq}}; }

Tree Tree::with_top_tile(const Tile& top, TileSet tiles) {
  Tree t;
  t.top_interval = Interval::of(top.time);
  t.top_frequency = top.freq.center();
  t.tiles = std::move(tiles);
  t.top_tile = top;
  return t;
}

TileSet Forest::all_tiles() const {
  TileSet out;
  for (const auto& t : trees) out.insert(t.tiles.begin(), t.tiles.end());
  return out;
}

bool UniverseBounds::contains(const Tile& t) const {
  if (t.time.k < k_min || t.time.k > k_max) return false;
  if (t.freq.k != -t.time.k) return false;
  return t.time.lo() >= 0.0 && t.time.hi() <= L && t.freq.lo() >= freq_lo && t.freq.hi() <= freq_hi;
}

UniverseBounds UniverseBounds::for_grid(const Grid& g, int k_min, int k_max) {
  return {k_min, k_max, g.L(), g.freq_min(), g.freq_max()};
}

std::vector<Tile> enumerate_universe(const UniverseBounds& b) {
  std::vector<Tile> out;
  for (int k = b.k_min; k <= b.k_max; ++k) {
    const double len = std::ldexp(1.0, k);
    const long nt = static_cast<long>(std::floor(b.L / len));
    const double flen = std::ldexp(1.0, -k);
    const long f0 = static_cast<long>(std::ceil(b.freq_lo / flen));
    const long f1 = static_cast<long>(std::floor(b.freq_hi / flen));
    for (long mt = 0; mt < nt; ++mt)
      for (long mf = f0; mf < f1; ++mf) out.push_back(Tile::make(k, mt, mf));
  }
  return out;
}

bool tile_le(const Tile& s, const Tile& t) { return t.time.contains(s.time) && s.freq.contains(t.freq); }

bool is_convex(const TileSet& S, const UniverseBounds& bounds) {
  // If s <= s'' then for each intermediate scale there is exactly one
  // sandwiched tile: the time ancestor of I_s paired with the frequency
  // ancestor of omega_s''.
  for (const Tile& lower : S) {
    for (const Tile& upper : S) {
      if (upper.time.k <= lower.time.k + 1) continue;
      if (!tile_le(lower, upper)) continue;
      for (int k = lower.time.k + 1; k < upper.time.k; ++k) {
        const Tile mid{lower.time.ancestor(k), upper.freq.ancestor(-k)};
        if (!bounds.contains(mid)) continue;
        if (!S.contains(mid)) return false;
      }
    }
  }
  return true;
}

TileSet saturation(const Tree& T, const TileSet& P) {
  if (!T.top_tile) throw InvalidInput("saturation: tree has no top tile");
  const DyadicInterval& wT = T.top_tile->freq;
  TileSet out;
  for (const Tile& s : P)
    if (s.freq.contains(wT)) out.insert(s);
  return out;
}

Interval tlm_window(const Interval& top, int l, long m) {
  const double scale = std::ldexp(1.0, l);
  return top.dilate(scale).shift(scale * static_cast<double>(m) * top.length());
}

std::map<long, Tree> partition_tlm(const TileSet& G, const Tree& T, int l) {
  if (l < 0) throw InvalidParameter("partition_tlm: l must be nonnegative");
  const Interval& top = T.top_interval;
  const double w = std::ldexp(1.0, l) * top.length();
  const Interval w0 = tlm_window(top, l, 0);

  std::map<long, Tree> out;
  for (const Tile& s : G) {
    const Interval is = Interval::of(s.time);
    if (is.length() > top.length()) throw InvalidInput("partition_tlm: tile longer than the tree top");
    const long guess = static_cast<long>(std::floor((is.lo - w0.lo) / w));
    long best = 0;
    bool found = false;
    for (long m = guess - 1; m <= guess + 2; ++m) {
      if (!tlm_window(top, l, m).intersects(is)) continue;
      if (!found || std::labs(m) < std::labs(best)) best = m;
      found = true;
    }
    if (!found) throw InvalidInput("partition_tlm: tile meets no window");
    auto it = out.find(best);
    if (it == out.end()) {
      Tree t;
      t.top_interval = top.dilate(std::ldexp(1.0, l) + 2.0).shift(w * static_cast<double>(best));
      t.top_frequency = T.top_frequency;
      it = out.emplace(best, std::move(t)).first;
    }
    it->second.tiles.insert(s);
  }
  return out;
}

int alpha(int l, long m) {
  if (l < 0) throw InvalidParameter("alpha: l must be nonnegative");
  const long a = std::labs(m);
  return a <= 1 ? l : l + ceil_log2(a);
}

std::vector<Tree> decompose_top_trees(const Tree& T) {
  std::vector<Tile> maximal;
  for (const Tile& s : T.tiles) {
    bool dominated = false;
    for (const Tile& t : T.tiles) {
      if (!(t == s) && tile_le(s, t)) {
        dominated = true;
        break;
      }
    }
    if (!dominated) maximal.push_back(s);
  }
  std::sort(maximal.begin(), maximal.end(), [](const Tile& a, const Tile& b) {
    if (a.freq.lo() != b.freq.lo()) return a.freq.lo() < b.freq.lo();
    return a.time.lo() < b.time.lo();
  });

  std::vector<Tree> out;
  out.reserve(maximal.size());
  for (const Tile& top : maximal) {
    Tree t = Tree::with_top_tile(top, {});
    if (top.freq.contains(T.top_frequency)) t.top_frequency = T.top_frequency;
    out.push_back(std::move(t));
  }
  for (const Tile& s : T.tiles) {
    for (std::size_t i = 0; i < maximal.size(); ++i) {
      if (tile_le(s, maximal[i])) {
        out[i].tiles.insert(s);
        break;
      }
    }
  }
  return out;
}

void write_tiles(std::ostream& os, const TileSet& tiles) {
  for (const Tile& t : tiles) os << t.time.k << ' ' << t.time.m << ' ' << t.freq.k << ' ' << t.freq.m << '\n';
}

TileSet read_tiles(std::istream& is) {
  TileSet out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    long kt = 0, mt = 0, kf = 0, mf = 0;
    if (!(ss >> kt >> mt >> kf >> mf)) throw InvalidInput("tile file line " + std::to_string(lineno) + ": expected four integers");
    std::string rest;
    if (ss >> rest) throw InvalidInput("tile file line " + std::to_string(lineno) + ": trailing text");
    if (kf != -kt) throw InvalidInput("tile file line " + std::to_string(lineno) + ": tile area is not one");
    out.insert(Tile{{static_cast<int>(kt), mt}, {static_cast<int>(kf), mf}});
  }
  return out;
}

bool fits_in_grid(const Tile& t, const Grid& g) {
  return t.time.lo() >= 0.0 && t.time.hi() <= g.L() && t.time.length() >= g.dx() && t.freq.lo() >= g.freq_min() &&
         t.freq.hi() <= g.freq_max();
}

}  // namespace rtt
