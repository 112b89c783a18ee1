#include "rtt/exceptional_sets.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <random>
#include <string>
#include <thread>

#include "rtt/csv.hpp"
#include "rtt/maximal_multipliers.hpp"

namespace rtt {

namespace {

std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

}  // namespace

ParamEntry params(double p, double q, double eps, double lambda, int n) {
  if (!(q > 1.0 && q < 2.0)) throw InvalidParameter("params: q must lie in (1, 2)");
  if (!(p > 1.0 && p < 2.0)) throw InvalidParameter("params: p must lie in (1, 2)");
  if (!(eps > 0.0)) throw InvalidParameter("params: eps must be positive");
  if (!(lambda > 0.0 && lambda <= 1.0)) throw InvalidParameter("params: lambda must lie in (0, 1]");
  if (n < 0) throw InvalidParameter("params: n must be nonnegative");
  ParamEntry e{};
  e.p = p;
  e.q = q;
  e.eps = eps;
  e.lambda = lambda;
  e.n = n;
  e.Q = 1.0 / q - 0.5 + eps;
  e.b = (1.0 - p * e.Q) / (1.0 - 2.0 * e.Q);
  e.check_exponents = 1.0 / p + 1.0 / q < 1.5;
  e.check_b = e.b > 0.0 && e.b < p;
  e.check_decay = eps + (2.0 + eps) * e.Q < 1.0;
  e.check_Q = e.Q < 1.0 - 1.0 / p;
  if (!e.check_exponents) throw InvalidParameter("params: exponent check fails: 1/p+1/q = " + short_num(1.0 / p + 1.0 / q) + ", need < 3/2");
  if (!e.check_b) throw InvalidParameter("params: b-range check fails: b = " + short_num(e.b) + ", need 0 < b < p");
  if (!e.check_decay)
    throw InvalidParameter("params: decay check fails: eps + (2+eps)Q = " + short_num(eps + (2.0 + eps) * e.Q) + ", need < 1");
  if (!e.check_Q) throw InvalidParameter("params: need Q < 1 - 1/p, Q = " + short_num(e.Q));
  const double dn = n;
  e.sigma = std::exp2(-dn);
  e.beta = std::exp2((2.0 + eps) * dn) * std::pow(lambda, p);
  e.gamma = std::exp2(-dn * ((2.0 + eps) * e.Q + eps)) * std::pow(lambda, 1.0 - e.Q * p - 3.0 * eps);
  return e;
}

double GridSet::measure() const { return static_cast<double>(count()) * grid.dx(); }

std::size_t GridSet::count() const {
  return static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(), [](std::uint8_t v) { return v != 0; }));
}

GridSet& GridSet::operator|=(const GridSet& o) {
  if (o.mask.size() != mask.size()) throw InvalidInput("grid set: size mismatch");
  for (std::size_t n = 0; n < mask.size(); ++n) mask[n] = mask[n] | o.mask[n];
  return *this;
}

bool GridSet::subset_of(const GridSet& o) const {
  for (std::size_t n = 0; n < mask.size(); ++n)
    if (mask[n] && !o.mask[n]) return false;
  return true;
}

GridSet set_of(const SampledFunction& F) {
  GridSet out(F.grid);
  for (std::size_t n = 0; n < F.grid.size(); ++n) out.mask[n] = F[n] != cd(0.0);
  return out;
}

GridSet build_E(const SampledFunction& F, double lambda, double b) {
  if (!(lambda > 0.0 && lambda <= 1.0)) throw InvalidParameter("build_E: lambda must lie in (0, 1]");
  GridSet out(F.grid);
  const std::vector<double> M = hl_maximal(F);
  const double thr = std::pow(lambda, b);
  for (std::size_t n = 0; n < M.size(); ++n) out.mask[n] = M[n] >= thr;
  return out;
}

namespace {

// Grid indices [first, last) of samples in I, clipped to the box.
std::pair<std::size_t, std::size_t> sample_range(const Interval& I, const Grid& g) {
  const double lo = std::max(I.lo, 0.0), hi = std::min(I.hi, g.L());
  if (!(hi > lo)) return {0, 0};
  const auto first = static_cast<std::size_t>(std::ceil(lo / g.dx() - 1e-9));
  auto last = static_cast<std::size_t>(std::ceil(hi / g.dx() - 1e-9));
  last = std::min(last, g.size());
  return {std::min(first, last), last};
}

bool covers_box(const Interval& I, const Grid& g) { return I.lo <= 0.0 && I.hi >= g.L(); }

}  // namespace

bool interval_meets_complement(const Interval& I, const GridSet& E) {
  const auto [a, b] = sample_range(I, E.grid);
  for (std::size_t n = a; n < b; ++n)
    if (!E.mask[n]) return true;
  return false;
}

SplitS split_S(const TileSet& S, const GridSet& E) {
  SplitS out;
  for (const Tile& s : S) (interval_meets_complement(Interval::of(s.time), E) ? out.S1 : out.S2).insert(s);
  return out;
}

KappaSplit split_S2_kappa(const TileSet& S2, const GridSet& E) {
  KappaSplit out;
  for (const Tile& s : S2) {
    const Interval I = Interval::of(s.time);
    int kappa = 1;
    bool found = false;
    for (;; ++kappa) {
      const Interval D = I.dilate(std::ldexp(1.0, kappa));
      if (interval_meets_complement(D, E)) {
        found = true;
        break;
      }
      if (covers_box(D, E.grid)) break;
    }
    if (found)
      out.by_kappa[kappa].insert(s);
    else
      out.unreached.insert(s);
  }
  return out;
}

std::vector<int> e1_counting(const std::vector<Tree>& trees, const Grid& g, int l) {
  std::vector<int> diff(g.size() + 1, 0);
  for (const Tree& T : trees) {
    const auto [a, b] = sample_range(T.top_interval.dilate(std::ldexp(1.0, l)), g);
    if (a >= b) continue;
    ++diff[a];
    --diff[b];
  }
  std::vector<int> out(g.size());
  int run = 0;
  for (std::size_t n = 0; n < g.size(); ++n) out[n] = run += diff[n];
  return out;
}

LevelSet build_E1(const std::vector<Tree>& trees, const Grid& g, double beta, int l_min) {
  if (l_min < 0) throw InvalidParameter("build_E1: l_min must be nonnegative");
  LevelSet out{GridSet(g), l_min - 1};
  const double count = static_cast<double>(trees.size());
  for (int l = l_min; l < 62; ++l) {
    const double thr = beta * std::ldexp(1.0, 2 * l);
    if (thr >= count) break;
    const std::vector<int> c = e1_counting(trees, g, l);
    for (std::size_t n = 0; n < g.size(); ++n)
      if (c[n] > thr) out.set.mask[n] = 1;
    out.l_max = l;
  }
  return out;
}

namespace {

cd coefficient(const std::map<Tile, cd>& a, const Tile& s) {
  auto it = a.find(s);
  return it == a.end() ? cd(0.0) : it->second;
}

}  // namespace

std::vector<double> e2_tree_values(const FrameContext& ctx, const Tree& T, const std::map<Tile, cd>& a, int alpha,
                                   double r) {
  const Grid& g = ctx.grid();
  std::map<int, std::vector<cd>> by_scale;
  for (const Tile& s : T.tiles) {
    const cd c = coefficient(a, s);
    if (c == cd(0.0)) continue;
    auto& acc = by_scale[s.time.k];
    if (acc.empty()) acc.assign(g.size(), 0.0);
    const SampledFunction piece = TreePieces(ctx, s, T.top_frequency, alpha).main_at(T.top_frequency);
    for (std::size_t n = 0; n < g.size(); ++n) acc[n] += c * piece[n];
  }
  return scale_variation(by_scale, g.size(), r);
}

LevelSet build_E2(const FrameContext& ctx, const std::vector<Tree>& forest, const TileSet& P,
                  const std::map<Tile, cd>& a, double gamma, double r, double sigma, int l_min) {
  if (!(r > 2.0)) throw InvalidParameter("build_E2: r must exceed 2");
  if (l_min < 0) throw InvalidParameter("build_E2: l_min must be nonnegative");
  const Grid& g = ctx.grid();
  for (const auto& [s, c] : a)
    if (std::abs(c) > sigma * std::sqrt(s.time.length()) * (1.0 + 1e-12))
      throw InvalidInput("build_E2: coefficients violate sup |a_s| / |I_s|^{1/2} <= sigma");

  LevelSet out{GridSet(g), l_min - 1};
  for (const Tree& T : forest) {
    const TileSet G = saturation(T, P);
    if (G.empty()) continue;
    for (int l = l_min; std::ldexp(T.top_interval.length(), l) <= 2.0 * g.L(); ++l) {
      out.l_max = std::max(out.l_max, l);
      for (const auto& [m, Tlm] : partition_tlm(G, T, l)) {
        const double thr = gamma * std::ldexp(1.0, -10 * l) / std::pow(static_cast<double>(std::labs(m)) + 1.0, 2);
        const std::vector<double> v = e2_tree_values(ctx, Tlm, a, alpha(l, m), r);
        for (std::size_t n = 0; n < g.size(); ++n)
          if (v[n] > thr) out.set.mask[n] = 1;
      }
    }
  }
  return out;
}

namespace {

PointwiseCheck pointwise_from_models(const std::vector<ModelFunction>& models, const std::map<Tile, cd>& a,
                                     std::size_t x_index, const ParamEntry& e, double sigma, double r,
                                     const SearchBudget& budget) {
  PointwiseCheck out;
  out.rhs = std::pow(e.beta, 1.0 / e.q - 1.0 / r + e.eps) * (e.gamma + sigma);
  if (models.empty()) return out;
  const Grid& g = models.front().grid();
  std::map<int, std::vector<cd>> rows;
  for (const ModelFunction& phi : models) {
    const cd c = coefficient(a, phi.tile());
    if (c == cd(0.0)) continue;
    auto& acc = rows[phi.tile().time.k];
    if (acc.empty()) acc.assign(g.size(), 0.0);
    const std::vector<cd> row = phi.theta_row(x_index);
    for (std::size_t j = 0; j < g.size(); ++j) acc[j] += c * row[j];
  }
  if (rows.empty()) return out;
  MultiplierFamily fam{g, {}};
  for (auto& [k, v] : rows) fam.m.push_back(std::move(v));
  out.lhs_lower = mm_norm_lower(fam, e.q, budget);
  return out;
}

}  // namespace

PointwiseCheck check_pointwise_bound(const FrameContext& ctx, std::size_t x_index, const TileSet& P,
                                     const std::map<Tile, cd>& a, const ParamEntry& ledger, double r,
                                     const SearchBudget& budget) {
  if (x_index >= ctx.grid().size()) throw InvalidParameter("check_pointwise_bound: x index outside the grid");
  std::vector<ModelFunction> models;
  for (const Tile& s : P)
    if (coefficient(a, s) != cd(0.0)) models.push_back(ctx.model(s));
  return pointwise_from_models(models, a, x_index, ledger, ledger.sigma, r, budget);
}

double percentile(std::vector<double> v, double pct) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = std::clamp(pct, 0.0, 100.0) / 100.0 * static_cast<double>(v.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  if (i + 1 >= v.size()) return v.back();
  return v[i] + (pos - static_cast<double>(i)) * (v[i + 1] - v[i]);
}

double default_r(double eps) {
  if (!(eps > 0.0 && eps < 0.5)) throw InvalidParameter("default_r: eps must lie in (0, 1/2)");
  return 0.5 * (2.0 + 1.0 / (0.5 - eps));
}

PipelineResult run_pipeline(const PipelineConfig& in) {
  PipelineConfig cfg = in;
  if (cfg.r == 0.0) cfg.r = default_r(cfg.eps);
  if (!(cfg.r > 2.0)) throw InvalidParameter("pipeline: r must exceed 2");
  const ParamEntry base = params(cfg.p, cfg.q, cfg.eps, cfg.lambda, 0);
  if (!(1.0 / cfg.q - 1.0 / cfg.r < base.Q)) throw InvalidParameter("pipeline: need 1/q - 1/r < Q");
  if (cfg.x_samples < 0) throw InvalidParameter("pipeline: x_samples must be nonnegative");

  const Grid g(cfg.J, cfg.L);
  const FrameContext ctx = FrameContext::make(g);
  std::mt19937_64 rng(derive_seed(cfg.seed, 0x5e7));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  SampledFunction F(g);
  const int pieces = 1 + static_cast<int>(unit(rng) * 3.0);
  for (int i = 0; i < pieces; ++i) {
    const double c = g.L() * (0.25 + 0.5 * unit(rng));
    const double len = 1.0 + 3.0 * unit(rng);
    for (std::size_t n = 0; n < g.size(); ++n)
      if (std::abs(g.x(n) - c) < len / 2.0) F[n] = 1.0;
  }

  PipelineResult res;
  res.ledger = base;
  res.r = cfg.r;
  res.measure_F = set_of(F).measure();
  const GridSet E = build_E(F, cfg.lambda, base.b);
  res.measure_E = E.measure();

  const UniverseBounds ub{cfg.k_min, cfg.k_max, cfg.L, cfg.freq_lo, cfg.freq_hi};
  TileSet S;
  for (const Tile& t : enumerate_universe(ub))
    if (fits_in_grid(t, g)) S.insert(t);
  const SplitS split = split_S(S, E);
  res.S1 = split.S1.size();
  res.S2 = split.S2.size();

  SelectOptions opts;
  opts.check_convex = false;  // S1 is convex whenever S is; the universe window is full
  const ForestDecomposition dec = select_forests(split.S1, F, opts);

  std::map<Tile, cd> a;
  for (const Tile& s : split.S1) a.emplace(s, inner(F, tile_packet(*ctx.window, s)));
  // One implicit constant per run: sigma_n = c_sigma 2^{-n} must dominate sup_{P_n} |a_s| / |I_s|^{1/2}.
  for (const ForestLevel& lv : dec.levels)
    for (const Tile& s : lv.forest.all_tiles())
      res.c_sigma = std::max(res.c_sigma, std::abs(a.at(s)) / std::sqrt(s.time.length()) * std::exp2(std::max(lv.n, 0)));

  GridSet Estar(g);
  struct LevelData {
    ParamEntry e;
    double sigma;
    std::vector<ModelFunction> models;
  };
  std::vector<LevelData> checked;
  for (const ForestLevel& lv : dec.levels) {
    const TileSet P = lv.forest.all_tiles();
    bool any = false;
    for (const Tile& s : P) any = any || coefficient(a, s) != cd(0.0);
    const ParamEntry e = params(cfg.p, cfg.q, cfg.eps, cfg.lambda, std::max(lv.n, 0));
    const double sigma = res.c_sigma * e.sigma;
    PipelineLevel row{lv.n, P.size(), lv.forest.trees.size(), sigma, e.beta, e.gamma, 0.0, 0.0, -1, -1};
    if (any) {
      std::map<Tile, cd> aP;
      for (const Tile& s : P) aP.emplace(s, coefficient(a, s));
      const LevelSet E1 = build_E1(lv.forest.trees, g, e.beta);
      const LevelSet E2 = build_E2(ctx, lv.forest.trees, P, aP, e.gamma, cfg.r, sigma);
      row.measure_E1 = E1.set.measure();
      row.measure_E2 = E2.set.measure();
      row.l_max_E1 = E1.l_max;
      row.l_max_E2 = E2.l_max;
      Estar |= E1.set;
      Estar |= E2.set;
      LevelData d{e, sigma, {}};
      for (const Tile& s : P)
        if (coefficient(a, s) != cd(0.0)) d.models.push_back(ctx.model(s));
      checked.push_back(std::move(d));
    }
    res.levels.push_back(row);
  }
  res.measure_Estar = Estar.measure();
  GridSet total = Estar;
  total |= E;
  res.measure_total = total.measure();

  std::vector<std::size_t> outside;
  for (std::size_t n = 0; n < g.size(); ++n)
    if (!Estar.mask[n]) outside.push_back(n);
  std::vector<std::size_t> xs;
  if (!outside.empty())
    for (int i = 0; i < cfg.x_samples; ++i)
      xs.push_back(outside[static_cast<std::size_t>(unit(rng) * static_cast<double>(outside.size()))]);

  // Each sampled x is independent; results are gathered in sample order.
  const unsigned workers = std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
  std::vector<std::vector<double>> per_x(xs.size());
  const auto work = [&](std::size_t begin, std::size_t step) {
    for (std::size_t i = begin; i < xs.size(); i += step)
      for (std::size_t li = 0; li < checked.size(); ++li) {
        SearchBudget b = cfg.budget;
        b.seed = derive_seed(cfg.budget.seed, i, li);
        const PointwiseCheck pc =
            pointwise_from_models(checked[li].models, a, xs[i], checked[li].e, checked[li].sigma, cfg.r, b);
        if (pc.rhs > 0.0) per_x[i].push_back(pc.lhs_lower / pc.rhs);
      }
  };
  std::vector<std::future<void>> jobs;
  for (unsigned w = 0; w < workers; ++w) jobs.push_back(std::async(std::launch::async, work, w, workers));
  for (auto& j : jobs) j.get();
  for (const auto& v : per_x) res.ratios.insert(res.ratios.end(), v.begin(), v.end());
  res.ratio_p95 = res.ratios.empty() ? std::nan("") : percentile(res.ratios, 95.0);
  return res;
}

std::string pipeline_levels_csv(const PipelineResult& r) {
  csv::Table t({"n", "sigma_n", "beta_n", "gamma_n", "measure_E1", "measure_E2", "tiles", "trees", "l_max_E1",
                "l_max_E2", "c_sigma", "measure_F", "measure_E", "measure_Estar", "ratio_p95"});
  for (const PipelineLevel& lv : r.levels)
    t.add({csv::num(lv.n), csv::num(lv.sigma), csv::num(lv.beta), csv::num(lv.gamma), csv::num(lv.measure_E1),
           csv::num(lv.measure_E2), csv::num(lv.tiles), csv::num(lv.trees), csv::num(lv.l_max_E1),
           csv::num(lv.l_max_E2), csv::num(r.c_sigma), csv::num(r.measure_F), csv::num(r.measure_E),
           csv::num(r.measure_Estar), csv::num(r.ratio_p95)});
  return t.str();
}

}  // namespace rtt
