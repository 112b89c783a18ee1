#include "rtt/maximal_multipliers.hpp"

#include <algorithm>
#include <cmath>

#include "rtt/csv.hpp"

namespace rtt {

FrequencySet::FrequencySet(std::vector<double> lambdas) : lambdas_(std::move(lambdas)) {
  for (double l : lambdas_)
    if (!std::isfinite(l)) throw InvalidParameter("frequency set: non-finite frequency");
  std::sort(lambdas_.begin(), lambdas_.end());
  if (std::adjacent_find(lambdas_.begin(), lambdas_.end()) != lambdas_.end())
    throw InvalidParameter("frequency set: frequencies must be distinct");
}

std::vector<DyadicInterval> build_Rk(const FrequencySet& lambdas, int k) {
  std::vector<DyadicInterval> out;
  const double len = std::ldexp(1.0, k);
  for (double l : lambdas.lambdas()) {
    const DyadicInterval w{k, static_cast<long>(std::floor(l / len))};
    if (out.empty() || !(out.back() == w)) out.push_back(w);
  }
  return out;
}

const ScaleMultipliers& LambdaFamily::at(int k) const {
  for (const auto& s : scales)
    if (s.k == k) return s;
  throw InvalidParameter("multiplier family: scale not present");
}

std::vector<cd> LambdaFamily::samples(const Grid& g, int k) const {
  std::vector<cd> out(g.size(), 0.0);
  for (const ScaleEntry& e : at(k).entries) {
    const std::vector<cd> b = e.bump.samples(g);
    for (std::size_t i = 0; i < g.size(); ++i) out[i] += e.coefficient * b[i];
  }
  return out;
}

MultiplierFamily LambdaFamily::as_multiplier_family(const Grid& g) const {
  MultiplierFamily m{g, {}};
  for (const auto& s : scales) m.m.push_back(samples(g, s.k));
  return m;
}

namespace {

LambdaFamily make_family(const FrequencySet& lambdas, int k_min, int k_max, double C,
                         const std::function<cd()>& coefficient) {
  if (k_min > k_max) throw InvalidParameter("multiplier family: empty scale range");
  if (C == 0.0) C = AdaptedBump::family_constant();
  LambdaFamily fam{lambdas, C, {}};
  for (int k = k_min; k <= k_max; ++k) {
    ScaleMultipliers s{k, {}};
    for (const DyadicInterval& w : build_Rk(lambdas, k))
      s.entries.push_back({w, AdaptedBump(Interval::of(w), C, 0), coefficient()});
    fam.scales.push_back(std::move(s));
  }
  return fam;
}

}  // namespace

LambdaFamily random_family(const FrequencySet& lambdas, int k_min, int k_max, double C, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> mag(0.5, 1.0), phase(0.0, kTwoPi);
  return make_family(lambdas, k_min, k_max, C, [&] {
    const double a = mag(rng);
    return std::polar(a, phase(rng));
  });
}

LambdaFamily flat_family(const FrequencySet& lambdas, int k_min, int k_max, double C) {
  return make_family(lambdas, k_min, k_max, C, [] { return cd(1.0); });
}

SampledFunction delta_k(const LambdaFamily& fam, const SampledFunction& f, int k) {
  return apply_multiplier(dft(f), fam.samples(f.grid, k));
}

std::vector<double> sup_delta(const LambdaFamily& fam, const SampledFunction& f) {
  const Spectrum fh = dft(f);
  std::vector<double> sup(f.size(), 0.0);
  for (const auto& s : fam.scales) {
    const SampledFunction d = apply_multiplier(fh, fam.samples(f.grid, s.k));
    for (std::size_t i = 0; i < f.size(); ++i) sup[i] = std::max(sup[i], std::abs(d[i]));
  }
  return sup;
}

double vr_star(const LambdaFamily& fam, double r) {
  double best = 0.0;
  for (double lam : fam.lambdas.lambdas()) {
    std::vector<cd> seq;
    for (const auto& s : fam.scales) {
      const DyadicInterval w{s.k, static_cast<long>(std::floor(lam / std::ldexp(1.0, s.k)))};
      for (const ScaleEntry& e : s.entries)
        if (e.omega == w) seq.push_back(e(lam));
    }
    if (!seq.empty()) best = std::max(best, variational_norm(seq, r).value);
  }
  return best;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = seed ^ (a * 0x9E3779B97F4A7C15ULL) ^ (b * 0xC2B2AE3D27D4EB4FULL);
  for (int i = 0; i < 2; ++i) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    z ^= z >> 31;
  }
  return z;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidInput("loglog_slope: need two or more matching points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = std::log(x[i]), b = std::log(y[i]);
    sx += a;
    sy += b;
    sxx += a * a;
    sxy += a * b;
  }
  const double den = n * sxx - sx * sx;
  if (den == 0.0) throw InvalidInput("loglog_slope: x values coincide");
  return (n * sxy - sx * sy) / den;
}

namespace {

// Sum of modulated Gaussians at each lambda, random widths, centers and coefficients.
SampledFunction random_signal(const Grid& g, const FrequencySet& lambdas, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> center(0.0, g.L()), phase(0.0, kTwoPi), mag(0.25, 1.0);
  std::uniform_int_distribution<int> width(0, 2);
  SampledFunction f(g);
  for (double lam : lambdas.lambdas()) {
    const double c = center(rng), s = std::ldexp(1.0, width(rng));
    const cd a = std::polar(mag(rng), phase(rng));
    for (std::size_t n = 0; n < g.size(); ++n) {
      double d = std::abs(g.x(n) - c);
      d = std::min(d, g.L() - d);
      f[n] += a * std::exp(-kPi * (d / s) * (d / s)) * std::polar(1.0, kTwoPi * lam * g.x(n));
    }
  }
  return f;
}

}  // namespace

std::vector<GrowthScanRow> thm41_scan(const GrowthScanConfig& cfg) {
  if (!(cfg.q > 1.0 && cfg.q < 2.0)) throw InvalidParameter("thm41_scan: q must lie in (1, 2)");
  if (!(cfg.r >= 1.0)) throw InvalidParameter("thm41_scan: r must be >= 1");
  if (!(cfg.eps > 0.0)) throw InvalidParameter("thm41_scan: eps must be positive");
  if (cfg.trials < 1) throw InvalidParameter("thm41_scan: trials must be positive");
  if (cfg.N_list.empty() || !std::is_sorted(cfg.N_list.begin(), cfg.N_list.end()) || cfg.N_list.front() < 1 ||
      std::adjacent_find(cfg.N_list.begin(), cfg.N_list.end()) != cfg.N_list.end())
    throw InvalidParameter("thm41_scan: N_list must be strictly increasing and positive");
  const Grid g(cfg.J, cfg.L);
  const double exponent = 1.0 / cfg.q - 1.0 / cfg.r + cfg.eps;
  // keep the lambdas one widest interval away from the box edges so every bump fits
  const double margin = std::ldexp(1.0, cfg.k_max);
  if (g.freq_max() - margin <= g.freq_min() + margin) throw InvalidParameter("thm41_scan: grid box too small for k_max");

  std::vector<GrowthScanRow> rows;
  for (int N : cfg.N_list) {
    GrowthScanRow row{cfg.q, cfg.r, cfg.eps, N, cfg.trials, 0.0, 0.0, 0.0};
    for (int t = 0; t < cfg.trials; ++t) {
      std::mt19937_64 rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(N), static_cast<std::uint64_t>(t)));
      std::uniform_int_distribution<long> slot(static_cast<long>(std::ceil((g.freq_min() + margin) * g.L())),
                                               static_cast<long>(std::floor((g.freq_max() - margin) * g.L())) - 1);
      std::vector<double> lam;
      while (static_cast<int>(lam.size()) < N) {
        const double v = static_cast<double>(slot(rng)) / g.L();
        if (std::find(lam.begin(), lam.end(), v) == lam.end()) lam.push_back(v);
      }
      const FrequencySet fs(lam);
      const LambdaFamily fam = random_family(fs, cfg.k_min, cfg.k_max, cfg.C, rng);
      const SampledFunction f = random_signal(g, fs, rng);
      const double fq = lp_norm(f, cfg.q);
      const double num = lp_norm(sup_delta(fam, f), g.dx(), cfg.q) / fq;
      row.max_numerator = std::max(row.max_numerator, num);
      row.max_ratio = std::max(row.max_ratio, num / (std::pow(N, exponent) * (fam.C + vr_star(fam, cfg.r))));
    }
    rows.push_back(row);
  }
  if (rows.size() >= 2) {
    std::vector<double> xs, ys;
    for (const auto& r : rows) {
      xs.push_back(r.N);
      ys.push_back(r.max_numerator);
    }
    const double slope = loglog_slope(xs, ys);
    for (auto& r : rows) r.fitted_slope = slope;
  }
  return rows;
}

std::string growth_scan_csv(const std::vector<GrowthScanRow>& rows) {
  csv::Table t({"q", "r", "eps", "N", "trial_count", "max_ratio", "max_numerator", "fitted_slope"});
  for (const auto& r : rows)
    t.add({csv::num(r.q), csv::num(r.r), csv::num(r.eps), csv::num(r.N), csv::num(r.trial_count), csv::num(r.max_ratio),
           csv::num(r.max_numerator), csv::num(r.fitted_slope)});
  return t.str();
}

}  // namespace rtt
