#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <ostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "rtt/csv.hpp"
#include "rtt/dyadic_geometry.hpp"
#include "rtt/ergodic_lab.hpp"
#include "rtt/exceptional_sets.hpp"
#include "rtt/grid_fourier.hpp"
#include "rtt/maximal_multipliers.hpp"
#include "rtt/tree_algorithms.hpp"
#include "rtt/wavepacket_frame.hpp"

namespace rtt::cli {

std::string report_csv(const std::vector<ReportRow>& rows) {
  csv::Table t({"experiment", "parameters", "metric", "value", "fitted"});
  for (const ReportRow& r : rows) t.add({r.experiment, r.parameters, r.metric, csv::num(r.value), r.fitted ? "1" : "0"});
  return t.str();
}

namespace {

/// Flat JSON object -> CLI11 config items for the selected subcommand; arrays become
/// repeated inputs.  Options already given on the command line are left alone by CLI11.
class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(const CLI::App* root) : root_(root) {}

  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const CLI::Option* opt : app->get_options()) {
      if (!opt->get_configurable() || opt->get_lnames().empty()) continue;
      const std::string& name = opt->get_lnames().front();
      if (opt->count() > 0) {
        const auto& res = opt->results();
        if (opt->get_expected_max() > 1) j[name] = res;
        else j[name] = res.back();
      } else if (default_also && !opt->get_default_str().empty()) {
        j[name] = opt->get_default_str();
      }
    }
    return j.dump(2) + "\n";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    nlohmann::json j;
    try {
      input >> j;
    } catch (const nlohmann::json::exception& e) {
      throw CLI::ConversionError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config must be a JSON object");
    const auto subs = root_->get_subcommands();
    if (subs.empty()) throw CLI::ConversionError("--config needs a subcommand");
    std::vector<CLI::ConfigItem> items;
    for (auto it = j.begin(); it != j.end(); ++it) {
      CLI::ConfigItem item;
      item.parents = {subs.front()->get_name()};
      item.name = it.key();
      if (subs.front()->get_option_no_throw("--" + it.key()) == nullptr)
        throw CLI::ConversionError("config key '" + it.key() + "' is not an option of " + subs.front()->get_name());
      if (it->is_array()) {
        for (const auto& v : *it) item.inputs.push_back(scalar(it.key(), v));
      } else {
        item.inputs.push_back(scalar(it.key(), *it));
      }
      items.push_back(std::move(item));
    }
    return items;
  }

 private:
  const CLI::App* root_;

  static std::string scalar(const std::string& key, const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number()) return v.dump();
    throw CLI::ConversionError("config key '" + key + "': expected a number, string, boolean or array of them");
  }
};

struct Artifacts {
  std::string csv;
  std::vector<ReportRow> summary;
  std::string plot;  // two- or three-column whitespace-separated data
  std::vector<std::string> lines;  // human-readable summary
  bool check_failed = false;
};

struct Common {
  std::string out;
  bool plot = false;
  bool quiet = false;
};

std::string params_of(const std::vector<std::pair<std::string, std::string>>& kv) {
  std::string s;
  for (const auto& [k, v] : kv) {
    if (!s.empty()) s += ';';
    s += k + "=" + v;
  }
  return s;
}

/// "re:im" or "re" entries.
std::vector<cd> parse_complex_list(const std::vector<std::string>& items, const std::string& what) {
  std::vector<cd> out;
  for (const std::string& s : items) {
    const auto colon = s.find(':');
    try {
      std::size_t used = 0;
      if (colon == std::string::npos) {
        const double re = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        out.emplace_back(re, 0.0);
      } else {
        const std::string a = s.substr(0, colon), b = s.substr(colon + 1);
        std::size_t ua = 0, ub = 0;
        const double re = std::stod(a, &ua), im = std::stod(b, &ub);
        if (ua != a.size() || ub != b.size()) throw std::invalid_argument(s);
        out.emplace_back(re, im);
      }
    } catch (const std::exception&) {
      throw InvalidParameter(what + ": cannot read coefficient '" + s + "' (use re or re:im)");
    }
  }
  if (out.empty() || out.size() % 2 == 0)
    throw InvalidParameter(what + ": need an odd number of coefficients (degrees -d..d)");
  return out;
}

void check_grid(int J, double L) {
  if (J < 1 || J > 24) throw InvalidParameter("grid: J must lie in [1, 24]");
  if (!(L > 0.0) || std::exp2(std::round(std::log2(L))) != L) throw InvalidParameter("grid: L must be a power of two");
}

// ---------------------------------------------------------------- frame-check

struct FrameCheckCfg {
  int J = 12;
  double L = 16.0;
  std::vector<int> k{-2, -1, 0, 1, 2};
  int trials = 20;
  std::uint64_t seed = 1;
  double smoothness = 1.0;
  double tol = 1e-6;
};

SampledFunction random_indicator_union(const Grid& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(0.0, g.L() - 2.0), len(0.1, 2.0);
  std::uniform_int_distribution<int> pieces(1, 4);
  SampledFunction f(g);
  const int np = pieces(rng);
  for (int p = 0; p < np; ++p) {
    const double a = pos(rng), b = a + len(rng);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (g.x(i) >= a && g.x(i) < b) f[i] = 1.0;
  }
  return f;
}

Artifacts frame_check(const FrameCheckCfg& c) {
  check_grid(c.J, c.L);
  if (c.trials < 1) throw InvalidParameter("frame-check: trials must be positive");
  const Grid g(c.J, c.L);
  const Window w = build_window(g, c.smoothness);
  csv::Table t({"trial", "k", "rel_l2_error", "frame_deviation"});
  double max_err = 0.0, max_dev = 0.0;
  std::map<int, double> worst_by_k;
  for (int trial = 0; trial < c.trials; ++trial) {
    std::mt19937_64 rng(derive_seed(c.seed, static_cast<std::uint64_t>(trial)));
    const SampledFunction F = random_indicator_union(g, rng);
    const double nf2 = std::pow(lp_norm(F, 2.0), 2.0);
    for (int k : c.k) {
      const GaborCoefficients co = gabor_expand(w, F, k);
      const SampledFunction r = gabor_reconstruct(w, co);
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) {
        num += std::norm(r[i] - F[i]);
        den += std::norm(F[i]);
      }
      const double err = std::sqrt(num / den);
      const double dev = std::abs(co.sum_squares() / nf2 - w.frame_constant());
      max_err = std::max(max_err, err);
      max_dev = std::max(max_dev, dev);
      worst_by_k[k] = std::max(worst_by_k[k], err);
      t.add({csv::num(trial), csv::num(k), csv::num(err), csv::num(dev)});
    }
  }
  Artifacts a;
  a.csv = t.str();
  const std::string par = params_of({{"J", csv::num(c.J)}, {"L", csv::num(c.L)}, {"trials", csv::num(c.trials)},
                                     {"seed", csv::num(static_cast<long long>(c.seed))}});
  a.summary = {{"frame-check", par, "max_rel_l2_error", max_err, false},
               {"frame-check", par, "max_frame_deviation", max_dev, false}};
  a.lines = {"max relative L2 error " + csv::num(max_err) + " (tolerance " + csv::num(c.tol) + ")",
             "max frame-constant deviation " + csv::num(max_dev)};
  a.check_failed = !(max_err <= c.tol);
  std::ostringstream plot;
  for (const auto& [k, m] : worst_by_k) plot << k << ' ' << csv::num(m) << '\n';
  a.plot = plot.str();
  return a;
}

// ---------------------------------------------------------------- tree-select

struct TreeSelectCfg {
  std::string tiles;
  int J = 10;
  double L = 16.0;
  std::vector<std::string> f_intervals;  // "a:b"
  double density = 0.3;
  std::uint64_t seed = 1;
  bool no_convex_check = false;
};

Artifacts tree_select(const TreeSelectCfg& c) {
  check_grid(c.J, c.L);
  if (c.tiles.empty()) throw InvalidParameter("tree-select: --tiles is required");
  std::ifstream in(c.tiles);
  if (!in) throw InvalidInput("tree-select: cannot open tile file '" + c.tiles + "'");
  const TileSet S = read_tiles(in);
  const Grid g(c.J, c.L);
  for (const Tile& s : S)
    if (!fits_in_grid(s, g))
      throw InvalidInput("tree-select: tile (" + csv::num(s.time.k) + " " + csv::num(s.time.m) + " " +
                         csv::num(s.freq.k) + " " + csv::num(s.freq.m) + ") does not fit the grid");
  SampledFunction f(g);
  if (!c.f_intervals.empty()) {
    for (const std::string& iv : c.f_intervals) {
      const auto colon = iv.find(':');
      double a = 0.0, b = 0.0;
      try {
        if (colon == std::string::npos) throw std::invalid_argument(iv);
        a = std::stod(iv.substr(0, colon));
        b = std::stod(iv.substr(colon + 1));
      } catch (const std::exception&) {
        throw InvalidParameter("tree-select: cannot read interval '" + iv + "' (use a:b)");
      }
      if (!(a < b)) throw InvalidParameter("tree-select: interval '" + iv + "' is empty");
      for (std::size_t i = 0; i < g.size(); ++i)
        if (g.x(i) >= a && g.x(i) < b) f[i] = 1.0;
    }
  } else {
    if (!(c.density >= 0.0 && c.density <= 1.0)) throw InvalidParameter("tree-select: density must lie in [0, 1]");
    const Window w = build_window(g);
    std::mt19937_64 rng(derive_seed(c.seed, 0x7ee));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> nd(0.0, 1.0);
    for (const Tile& s : S) {
      const bool use = u(rng) < c.density;
      const double amp = nd(rng);
      if (!use) continue;
      const SampledFunction p = tile_packet(w, s);
      for (std::size_t n = 0; n < g.size(); ++n) f[n] += amp * p[n];
    }
  }
  SelectOptions opts;
  opts.check_convex = !c.no_convex_check;
  const ForestDecomposition dec = select_forests(S, f, opts);

  csv::Table t({"level", "tree", "k_time", "m_time", "k_freq", "m_freq", "is_top"});
  Artifacts a;
  const std::string par = params_of({{"tiles", std::filesystem::path(c.tiles).filename().string()},
                                     {"J", csv::num(c.J)},
                                     {"L", csv::num(c.L)},
                                     {"seed", csv::num(static_cast<long long>(c.seed))}});
  std::ostringstream plot;
  std::size_t trees = 0;
  for (const ForestLevel& lv : dec.levels) {
    for (std::size_t i = 0; i < lv.forest.trees.size(); ++i) {
      const Tree& T = lv.forest.trees[i];
      for (const Tile& s : T.tiles)
        t.add({csv::num(lv.n), csv::num(i), csv::num(s.time.k), csv::num(s.time.m), csv::num(s.freq.k),
               csv::num(s.freq.m), T.top_tile && *T.top_tile == s ? "1" : "0"});
    }
    trees += lv.forest.trees.size();
    if (lv.forest.trees.empty()) continue;
    const std::string lp = par + ";n=" + csv::num(lv.n);
    a.summary.push_back({"tree-select", lp, "size", lv.size, false});
    a.summary.push_back({"tree-select", lp, "trees", static_cast<double>(lv.forest.trees.size()), false});
    a.summary.push_back({"tree-select", lp, "top_length_sum", lv.top_length_sum, false});
    plot << lv.n << ' ' << csv::num(lv.top_length_sum) << '\n';
  }
  a.csv = t.str();
  a.plot = plot.str();
  a.lines = {csv::num(S.size()) + " tiles, " + csv::num(dec.levels.size()) + " levels, " + csv::num(trees) + " trees"};
  return a;
}

// ---------------------------------------------------------------- prop37

struct TreeEstimateCfg {
  int J = 10;
  double L = 16.0;
  int top_k = 2;
  long top_m = 1;
  long top_freq = 0;
  int k_min = -1;
  std::vector<int> l{0, 1, 2, 3, 4};
  double r = 3.0;
  double t = 2.0;
  double M = 4.0;
  int trials = 5;
  std::uint64_t seed = 1;
};

Artifacts tree_estimate(const TreeEstimateCfg& c) {
  check_grid(c.J, c.L);
  if (c.trials < 1) throw InvalidParameter("prop37: trials must be positive");
  if (c.k_min > c.top_k) throw InvalidParameter("prop37: k-min must not exceed top-k");
  for (int l : c.l)
    if (l < 0) throw InvalidParameter("prop37: l must be nonnegative");
  const Grid g(c.J, c.L);
  const FrameContext ctx = FrameContext::make(g);
  const Tile top{{c.top_k, c.top_m}, {-c.top_k, c.top_freq}};
  if (!fits_in_grid(top, g)) throw InvalidParameter("prop37: top tile does not fit the grid");
  TileSet tiles;
  for (int k = c.k_min; k <= c.top_k; ++k) {
    const long count = 1L << (c.top_k - k);
    for (long j = 0; j < count; ++j) tiles.insert(Tile{{k, c.top_m * count + j}, top.freq.ancestor(-k)});
  }
  Tree T = Tree::with_top_tile(top, tiles);
  T.top_frequency = top.freq.lo();

  csv::Table tab({"trial", "l", "lhs", "rhs_scale", "ratio"});
  std::map<int, double> worst;
  for (int trial = 0; trial < c.trials; ++trial) {
    std::mt19937_64 rng(derive_seed(c.seed, static_cast<std::uint64_t>(trial)));
    std::normal_distribution<double> nd(0.0, 1.0);
    SampledFunction f(g);
    for (auto& v : f.values) v = cd(nd(rng), nd(rng));
    for (int l : c.l) {
      const TreeVariationResult res = verify_prop_3_7(ctx, T, f, l, c.r, c.t, c.M);
      const double ratio = res.rhs_scale > 0.0 ? res.lhs / res.rhs_scale : 0.0;
      worst[l] = std::max(worst[l], ratio);
      tab.add({csv::num(trial), csv::num(l), csv::num(res.lhs), csv::num(res.rhs_scale), csv::num(ratio)});
    }
  }
  Artifacts a;
  a.csv = tab.str();
  const std::string par = params_of({{"J", csv::num(c.J)}, {"L", csv::num(c.L)}, {"r", csv::num(c.r)},
                                     {"t", csv::num(c.t)}, {"M", csv::num(c.M)},
                                     {"seed", csv::num(static_cast<long long>(c.seed))}});
  std::ostringstream plot;
  for (const auto& [l, v] : worst) {
    a.summary.push_back({"prop37", par + ";l=" + csv::num(l), "max_ratio", v, true});
    plot << l << ' ' << csv::num(v) << '\n';
    a.lines.push_back("l = " + csv::num(l) + ": max lhs / rhs_scale " + csv::num(v));
  }
  a.plot = plot.str();
  return a;
}

// ---------------------------------------------------------------- mm-scan

Artifacts mm_scan(const GrowthScanConfig& c) {
  check_grid(c.J, c.L);
  if (!(c.q > 1.0 && c.q < 2.0)) throw InvalidParameter("mm-scan: q must lie in (1, 2)");
  if (!(c.r > 2.0)) throw InvalidParameter("mm-scan: r must exceed 2");
  if (!(c.eps > 0.0)) throw InvalidParameter("mm-scan: eps must be positive");
  if (c.N_list.empty()) throw InvalidParameter("mm-scan: N list is empty");
  for (int N : c.N_list)
    if (N < 1) throw InvalidParameter("mm-scan: every N must be positive");
  if (c.trials < 1) throw InvalidParameter("mm-scan: trials must be positive");
  GrowthScanConfig cfg = c;
  std::sort(cfg.N_list.begin(), cfg.N_list.end());
  cfg.N_list.erase(std::unique(cfg.N_list.begin(), cfg.N_list.end()), cfg.N_list.end());
  const std::vector<GrowthScanRow> rows = thm41_scan(cfg);
  Artifacts a;
  a.csv = growth_scan_csv(rows);
  const std::string par = params_of({{"q", csv::num(cfg.q)}, {"r", csv::num(cfg.r)}, {"eps", csv::num(cfg.eps)},
                                     {"J", csv::num(cfg.J)}, {"trials", csv::num(cfg.trials)},
                                     {"seed", csv::num(static_cast<long long>(cfg.seed))}});
  std::ostringstream plot;
  double worst = 0.0;
  for (const GrowthScanRow& r : rows) {
    a.summary.push_back({"mm-scan", par + ";N=" + csv::num(r.N), "max_ratio", r.max_ratio, false});
    plot << r.N << ' ' << csv::num(r.max_numerator) << '\n';
    worst = std::max(worst, r.max_ratio);
  }
  const double slope = rows.empty() ? 0.0 : rows.front().fitted_slope;
  const double bound = 1.0 / cfg.q - 1.0 / cfg.r + cfg.eps;
  a.summary.push_back({"mm-scan", par, "fitted_slope", slope, true});
  a.summary.push_back({"mm-scan", par, "exponent_bound", bound, false});
  a.plot = plot.str();
  a.lines = {"fitted growth exponent " + csv::num(slope) + " against 1/q - 1/r + eps = " + csv::num(bound),
             "max normalized ratio " + csv::num(worst)};
  return a;
}

// ---------------------------------------------------------------- exceptional

Artifacts exceptional(const PipelineConfig& c) {
  check_grid(c.J, c.L);
  params(c.p, c.q, c.eps, c.lambda, 0);
  const PipelineResult r = run_pipeline(c);
  Artifacts a;
  a.csv = pipeline_levels_csv(r);
  const std::string par = params_of({{"p", csv::num(c.p)}, {"q", csv::num(c.q)}, {"eps", csv::num(c.eps)},
                                     {"lambda", csv::num(c.lambda)}, {"r", csv::num(r.r)}, {"J", csv::num(c.J)},
                                     {"L", csv::num(c.L)}, {"seed", csv::num(static_cast<long long>(c.seed))}});
  const double normalized = r.measure_F > 0.0 ? r.measure_Estar * std::pow(c.lambda, c.p) / r.measure_F : 0.0;
  a.summary = {{"exceptional", par, "measure_F", r.measure_F, false},
               {"exceptional", par, "measure_E", r.measure_E, false},
               {"exceptional", par, "measure_Estar", r.measure_Estar, false},
               {"exceptional", par, "Estar_lambda_p_over_F", normalized, false},
               {"exceptional", par, "c_sigma", r.c_sigma, true},
               {"exceptional", par, "ratio_p95", r.ratio_p95, false},
               {"exceptional", par, "b", r.ledger.b, false},
               {"exceptional", par, "Q", r.ledger.Q, false}};
  std::ostringstream plot;
  for (const PipelineLevel& lv : r.levels)
    plot << lv.n << ' ' << csv::num(lv.measure_E1) << ' ' << csv::num(lv.measure_E2) << '\n';
  a.plot = plot.str();
  a.lines = {"|F| = " + csv::num(r.measure_F) + ", |E| = " + csv::num(r.measure_E) + ", |E*| = " +
                 csv::num(r.measure_Estar) + " of " + csv::num(r.measure_total),
             "|E*| lambda^p / |F| = " + csv::num(normalized) + ", c_sigma = " + csv::num(r.c_sigma),
             "pointwise samples " + csv::num(r.ratios.size()) + ", p95 lhs/rhs " + csv::num(r.ratio_p95)};
  return a;
}

// ---------------------------------------------------------------- rtt-sim

struct RttSimCfg {
  std::vector<std::string> f{"0.2:0.1", "-0.3", "0.7", "0.25:-0.1", "0:0.15"};
  std::vector<std::string> g{"0.1", "0.05:0.2", "0.1", "0.4", "0.6", "-0.2:0.1", "0.3"};
  double alpha = 0.6180339887498949;
  double beta = 0.4142135623730951;
  std::string sigma_kind = "rotation";
  std::vector<double> iet_lengths{0.2, 0.3, 0.5};
  std::vector<int> iet_perm{2, 0, 1};
  double x0 = 0.1, y0 = 0.37;
  int k_min = 0, k_max = 16;
  std::vector<std::uint64_t> N_extra{100000};
  double r = 3.0;
};

Artifacts rtt_sim(const RttSimCfg& c) {
  const TrigPolynomial f{parse_complex_list(c.f, "rtt-sim f")}, g{parse_complex_list(c.g, "rtt-sim g")};
  if (!(c.r >= 1.0)) throw InvalidParameter("rtt-sim: r must be at least 1");
  if (c.k_min < 0 || c.k_max > 40 || c.k_min > c.k_max) throw InvalidParameter("rtt-sim: need 0 <= k-min <= k-max <= 40");
  const DynamicalSystem tau = DynamicalSystem::rotation(c.alpha);
  DynamicalSystem sigma = DynamicalSystem::rotation(c.beta);
  if (c.sigma_kind == "iet") sigma = DynamicalSystem::interval_exchange(c.iet_lengths, c.iet_perm);
  else if (c.sigma_kind != "rotation") throw InvalidParameter("rtt-sim: sigma-kind must be rotation or iet");
  std::vector<std::uint64_t> N = dyadic_list(c.k_min, c.k_max);
  N.insert(N.end(), c.N_extra.begin(), c.N_extra.end());
  std::sort(N.begin(), N.end());
  N.erase(std::unique(N.begin(), N.end()), N.end());
  if (N.front() == 0) throw InvalidParameter("rtt-sim: N must be positive");
  const AverageSeries s = return_times_average(f.observable(), tau, TorusPoint::from(c.x0), g.observable(), sigma,
                                               TorusPoint::from(c.y0), N);
  const ConvergenceDiagnostic d = convergence_diagnostic(s, c.r);
  const cd limit = f.mean() * g.mean();
  const double err = std::abs(s.A.back() - limit);
  Artifacts a;
  a.csv = series_csv(s, c.r);
  const std::string par = params_of({{"alpha", csv::num(c.alpha)}, {"beta", csv::num(c.beta)},
                                     {"sigma", c.sigma_kind}, {"x0", csv::num(c.x0)}, {"y0", csv::num(c.y0)},
                                     {"N_max", csv::num(static_cast<long long>(N.back()))}});
  a.summary = {{"rtt-sim", par, "final_abs_error", err, false},
               {"rtt-sim", par, "oscillation", d.oscillation, false},
               {"rtt-sim", par, "vr", d.vr, false},
               {"rtt-sim", par, "limit_re", limit.real(), false},
               {"rtt-sim", par, "limit_im", limit.imag(), false}};
  std::ostringstream plot;
  for (std::size_t i = 0; i < N.size(); ++i) plot << N[i] << ' ' << csv::num(std::abs(s.A[i] - limit)) << '\n';
  a.plot = plot.str();
  a.lines = {s.descriptor, "|A_N - int f int g| at N = " + csv::num(static_cast<long long>(N.back())) + ": " +
                               csv::num(err),
             "oscillation " + csv::num(d.oscillation) + ", V^r " + csv::num(d.vr)};
  return a;
}

// ---------------------------------------------------------------- blowup

Artifacts blowup(const BlowupConfig& c) {
  if (!(c.p >= 1.0 && c.q >= 1.0)) throw InvalidParameter("blowup: p and q must be at least 1");
  if (c.J_list.empty()) throw InvalidParameter("blowup: J list is empty");
  for (int J : c.J_list) check_grid(J, c.L);
  const std::vector<BlowupRow> rows = single_scale_blowup(c);
  Artifacts a;
  a.csv = blowup_csv(rows, c.p, c.q);
  const std::string par = params_of({{"p", csv::num(c.p)}, {"q", csv::num(c.q)}, {"L", csv::num(c.L)}});
  std::ostringstream plot;
  for (const BlowupRow& r : rows) {
    a.summary.push_back({"blowup", par + ";J=" + csv::num(r.J), "proxy", r.proxy, false});
    if (!std::isnan(r.growth)) a.summary.push_back({"blowup", par + ";J=" + csv::num(r.J), "growth", r.growth, false});
    plot << r.J << ' ' << csv::num(r.proxy) << '\n';
    a.lines.push_back("J = " + csv::num(r.J) + ": proxy " + csv::num(r.proxy) +
                      (std::isnan(r.growth) ? std::string() : ", growth " + csv::num(r.growth)));
  }
  a.plot = plot.str();
  return a;
}

// ---------------------------------------------------------------- tails

Artifacts tails(const TailsConfig& c) {
  if (c.sharpness.empty()) throw InvalidParameter("tails: sharpness list is empty");
  for (double h : c.sharpness)
    if (!(h > 0.0 && h < 1.0)) throw InvalidParameter("tails: sharpness must lie in (0, 1)");
  if (c.samples < 1) throw InvalidParameter("tails: samples must be positive");
  if (c.n_max < 1) throw InvalidParameter("tails: n-max must be positive");
  if (c.J < 4 || c.J > 20) throw InvalidParameter("tails: J must lie in [4, 20]");
  const std::vector<TailsRow> rows = tails_sweep(c);
  Artifacts a;
  a.csv = tails_csv(rows);
  const std::string par = params_of({{"alpha", csv::num(c.alpha)}, {"beta", csv::num(c.beta)},
                                     {"samples", csv::num(c.samples)},
                                     {"n_max", csv::num(static_cast<long long>(c.n_max))},
                                     {"seed", csv::num(static_cast<long long>(c.seed))}});
  std::ostringstream plot;
  for (const TailsRow& r : rows) {
    a.summary.push_back({"tails", par + ";h=" + csv::num(r.h), "T1", r.T1, false});
    a.summary.push_back({"tails", par + ";h=" + csv::num(r.h), "T2", r.T2, false});
    plot << csv::num(r.h) << ' ' << csv::num(r.T1) << ' ' << csv::num(r.T2) << '\n';
    a.lines.push_back("h = " + csv::num(r.h) + ": T1 " + csv::num(r.T1) + ", T2 " + csv::num(r.T2));
  }
  a.plot = plot.str();
  return a;
}

// ---------------------------------------------------------------- wiring

void add_common(CLI::App* sub, Common& common) {
  sub->add_option("--out", common.out, std::string("Output directory (default: $") + kOutDirEnv + " or ./results)");
  sub->add_flag("--plot", common.plot, "Also write plot-ready <command>.dat");
  sub->add_flag("--quiet", common.quiet, "Only print written paths");
}

bool write_file(const std::filesystem::path& p, const std::string& content, std::ostream& err) {
  std::ofstream os(p, std::ios::binary | std::ios::trunc);
  if (!os) {
    err << "error: cannot write " << p.string() << "\n";
    return false;
  }
  os << content;
  return static_cast<bool>(os);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Time-frequency and return-times experiment runner", args.empty() ? "rtt" : args.front()};
  app.require_subcommand(1);
  app.fallthrough();
  app.config_formatter(std::make_shared<JsonConfig>(&app));
  app.set_config("--config", "", "JSON object keyed by the subcommand's long flag names (flags win)");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.option_defaults()->always_capture_default();
  app.footer("Every CSV starts with a header row; fields are RFC 4180 quoted. The same config and seed give "
             "byte-identical files.\nSummary files <command>_summary.csv: experiment,parameters,metric,value,fitted.");

  Common common;
  std::function<Artifacts()> job;
  std::string command;

  FrameCheckCfg fc;
  auto* s_fc = app.add_subcommand("frame-check", "Gabor reconstruction and frame-constant check on random indicators");
  s_fc->add_option("--J", fc.J, "Grid has 2^J samples");
  s_fc->add_option("--L", fc.L, "Period (power of two)");
  s_fc->add_option("--k", fc.k, "Scales k")->delimiter(',');
  s_fc->add_option("--trials", fc.trials, "Random indicator unions");
  s_fc->add_option("--seed", fc.seed);
  s_fc->add_option("--smoothness", fc.smoothness, "Window smoothness");
  s_fc->add_option("--tol", fc.tol, "Exit 1 when the max relative error exceeds this");
  s_fc->footer("Columns: trial,k,rel_l2_error,frame_deviation. Plot: k, max error.");
  add_common(s_fc, common);
  s_fc->callback([&] { command = "frame-check"; job = [&] { return frame_check(fc); }; });

  TreeSelectCfg ts;
  auto* s_ts = app.add_subcommand("tree-select", "Forest selection on a tile file");
  s_ts->add_option("--tiles", ts.tiles, "Tile file: lines 'k_time m_time k_freq m_freq', '#' comments");
  s_ts->add_option("--J", ts.J);
  s_ts->add_option("--L", ts.L);
  s_ts->add_option("--f-intervals", ts.f_intervals, "f as a union of indicators a:b (default: random packets)")
      ->delimiter(',');
  s_ts->add_option("--density", ts.density, "Fraction of tiles carrying a random packet in the default f");
  s_ts->add_option("--seed", ts.seed);
  s_ts->add_flag("--no-convex-check", ts.no_convex_check, "Skip the convexity precondition");
  s_ts->footer("Columns: level,tree,k_time,m_time,k_freq,m_freq,is_top. Plot: level, sum of |I_T|.");
  add_common(s_ts, common);
  s_ts->callback([&] { command = "tree-select"; job = [&] { return tree_select(ts); }; });

  TreeEstimateCfg p37;
  auto* s_p = app.add_subcommand("prop37", "Variational tree estimate on a full lacunary tree");
  s_p->add_option("--J", p37.J);
  s_p->add_option("--L", p37.L);
  s_p->add_option("--top-k", p37.top_k, "Top tile scale");
  s_p->add_option("--top-m", p37.top_m, "Top tile time position");
  s_p->add_option("--top-freq", p37.top_freq, "Top tile frequency position");
  s_p->add_option("--k-min", p37.k_min, "Smallest tile scale in the tree");
  s_p->add_option("--l", p37.l, "Decomposition levels")->delimiter(',');
  s_p->add_option("--r", p37.r);
  s_p->add_option("--t", p37.t, "Outer L^t exponent");
  s_p->add_option("--M", p37.M, "Decay exponent in the scale factor");
  s_p->add_option("--trials", p37.trials);
  s_p->add_option("--seed", p37.seed);
  s_p->footer("Columns: trial,l,lhs,rhs_scale,ratio. Plot: l, max ratio.");
  add_common(s_p, common);
  s_p->callback([&] { command = "prop37"; job = [&] { return tree_estimate(p37); }; });

  GrowthScanConfig mm;
  mm.N_list = {2, 4, 8, 16, 32};
  auto* s_mm = app.add_subcommand("mm-scan", "Maximal multiplier growth in the number of frequencies");
  s_mm->add_option("--q", mm.q);
  s_mm->add_option("--r", mm.r);
  s_mm->add_option("--eps", mm.eps);
  s_mm->add_option("--N", mm.N_list, "Frequency counts")->delimiter(',');
  s_mm->add_option("--trials", mm.trials, "Trials per N");
  s_mm->add_option("--seed", mm.seed);
  s_mm->add_option("--J", mm.J);
  s_mm->add_option("--L", mm.L);
  s_mm->add_option("--k-min", mm.k_min);
  s_mm->add_option("--k-max", mm.k_max);
  s_mm->add_option("--C", mm.C, "Multiplier constant (0: adapted-bump constant)");
  s_mm->footer("Columns: q,r,eps,N,trial_count,max_ratio,max_numerator,fitted_slope. Plot: N, max numerator.");
  add_common(s_mm, common);
  s_mm->callback([&] { command = "mm-scan"; job = [&] { return mm_scan(mm); }; });

  PipelineConfig pc;
  auto* s_ex = app.add_subcommand("exceptional", "Exceptional-set pipeline and pointwise bound check");
  s_ex->add_option("--J", pc.J);
  s_ex->add_option("--L", pc.L);
  s_ex->add_option("--p", pc.p);
  s_ex->add_option("--q", pc.q);
  s_ex->add_option("--eps", pc.eps);
  s_ex->add_option("--r", pc.r, "0 selects the midpoint of (2, 1/(1/2 - eps))");
  s_ex->add_option("--lambda", pc.lambda);
  s_ex->add_option("--k-min", pc.k_min);
  s_ex->add_option("--k-max", pc.k_max);
  s_ex->add_option("--freq-lo", pc.freq_lo);
  s_ex->add_option("--freq-hi", pc.freq_hi);
  s_ex->add_option("--x-samples", pc.x_samples);
  s_ex->add_option("--seed", pc.seed);
  s_ex->footer("Columns: n,sigma_n,beta_n,gamma_n,measure_E1,measure_E2,tiles,trees,l_max_E1,l_max_E2,c_sigma,measure_F,"
               "measure_E,measure_Estar,ratio_p95. Plot: n, |E1|, |E2|.");
  add_common(s_ex, common);
  s_ex->callback([&] { command = "exceptional"; job = [&] { return exceptional(pc); }; });

  RttSimCfg rs;
  auto* s_rs = app.add_subcommand("rtt-sim", "Return-times averages for trigonometric polynomials");
  s_rs->add_option("--f", rs.f, "Coefficients of f, degrees -d..d, each re or re:im")->delimiter(',');
  s_rs->add_option("--g", rs.g, "Coefficients of g")->delimiter(',');
  s_rs->add_option("--alpha", rs.alpha, "Rotation number of tau");
  s_rs->add_option("--beta", rs.beta, "Rotation number of sigma");
  s_rs->add_option("--sigma-kind", rs.sigma_kind, "rotation or iet");
  s_rs->add_option("--iet-lengths", rs.iet_lengths)->delimiter(',');
  s_rs->add_option("--iet-perm", rs.iet_perm)->delimiter(',');
  s_rs->add_option("--x0", rs.x0);
  s_rs->add_option("--y0", rs.y0);
  s_rs->add_option("--k-min", rs.k_min, "Dyadic N from 2^k-min");
  s_rs->add_option("--k-max", rs.k_max, "to 2^k-max");
  s_rs->add_option("--N-extra", rs.N_extra, "Additional N")->delimiter(',');
  s_rs->add_option("--r", rs.r, "Variation exponent of the diagnostic");
  s_rs->footer("Columns: N,re_A,im_A,abs_A,block_oscillation,oscillation,vr. Plot: N, |A_N - limit|.");
  add_common(s_rs, common);
  s_rs->callback([&] { command = "rtt-sim"; job = [&] { return rtt_sim(rs); }; });

  BlowupConfig bc;
  auto* s_b = app.add_subcommand("blowup", "Single-scale model restricted-norm proxy under refinement");
  s_b->add_option("--p", bc.p);
  s_b->add_option("--q", bc.q);
  s_b->add_option("--J", bc.J_list, "Refinements")->delimiter(',');
  s_b->add_option("--L", bc.L);
  s_b->footer("Columns: p,q,J,proxy,growth,f_lo,f_len,g_lo,g_len. Plot: J, proxy.");
  add_common(s_b, common);
  s_b->callback([&] { command = "blowup"; job = [&] { return blowup(bc); }; });

  TailsConfig tc;
  auto* s_t = app.add_subcommand("tails", "Tail operators T1 and T2 on sharpening spikes");
  s_t->add_option("--sharpness", tc.sharpness, "Spike widths h")->delimiter(',');
  s_t->add_option("--alpha", tc.alpha);
  s_t->add_option("--beta", tc.beta);
  s_t->add_option("--u0", tc.u0);
  s_t->add_option("--v0", tc.v0);
  s_t->add_option("--samples", tc.samples);
  s_t->add_option("--n-max", tc.n_max);
  s_t->add_option("--seed", tc.seed);
  s_t->add_option("--J", tc.J, "Grid on [0, 1) for T1");
  s_t->footer("Columns: h,T1,T2. Plot: h, T1, T2.");
  add_common(s_t, common);
  s_t->callback([&] { command = "tails"; job = [&] { return tails(tc); }; });

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    // help requests exit 0; everything else is a configuration error
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kOk : kInvalidConfig;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kInvalidConfig;
  }
  // parse() only returns normally after a subcommand callback ran
  if (!job) {
    err << "error: no subcommand\n";
    return kInvalidConfig;
  }

  Artifacts a;
  try {
    a = job();
  } catch (const std::invalid_argument& e) {  // InvalidParameter, InvalidInput
    err << "error: " << e.what() << "\n";
    return kInvalidConfig;
  }

  std::filesystem::path dir = common.out;
  if (dir.empty()) {
    const char* env = std::getenv(kOutDirEnv);
    dir = (env && *env) ? env : "results";
  }
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    err << "error: cannot create " << dir.string() << ": " << ec.message() << "\n";
    return kIoError;
  }
  std::vector<std::filesystem::path> written{dir / (command + ".csv"), dir / (command + "_summary.csv")};
  if (!write_file(written[0], a.csv, err) || !write_file(written[1], report_csv(a.summary), err)) return kIoError;
  if (common.plot) {
    written.push_back(dir / (command + ".dat"));
    if (!write_file(written.back(), a.plot, err)) return kIoError;
  }
  if (!common.quiet)
    for (const std::string& line : a.lines) out << line << "\n";
  for (const auto& p : written) out << "wrote " << p.string() << "\n";
  if (a.check_failed) {
    err << "check failed: tolerance exceeded\n";
    return kCheckFailed;
  }
  return kOk;
}

}  // namespace rtt::cli
