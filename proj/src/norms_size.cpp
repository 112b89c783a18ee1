#include "rtt/norms_size.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

namespace rtt {

namespace {

template <typename T>
VariationResult variation_impl(std::span<const T> x, double r) {
  if (!(r >= 1.0)) throw InvalidParameter("variational_norm: r must be >= 1");
  if (x.empty()) throw InvalidInput("variational_norm: empty sequence");
  const std::size_t n = x.size();
  VariationResult out;
  for (const T& v : x) out.sup_part = std::max(out.sup_part, static_cast<double>(std::abs(v)));

  // best[j]: largest sum of r-th powers of increments over subsequences ending at j.
  std::vector<double> best(n, 0.0);
  std::vector<std::size_t> prev(n, n);
  for (std::size_t j = 1; j < n; ++j)
    for (std::size_t i = 0; i < j; ++i) {
      const double cand = best[i] + std::pow(static_cast<double>(std::abs(x[j] - x[i])), r);
      if (cand > best[j]) {
        best[j] = cand;
        prev[j] = i;
      }
    }
  std::size_t end = 0;
  for (std::size_t j = 1; j < n; ++j)
    if (best[j] > best[end]) end = j;
  for (std::size_t j = end; j != n; j = prev[j]) out.best_subsequence.push_back(j);
  std::reverse(out.best_subsequence.begin(), out.best_subsequence.end());
  out.variation = std::pow(best[end], 1.0 / r);
  out.value = out.sup_part + out.variation;
  return out;
}

double profile(double u) {
  if (std::abs(u) >= 0.5) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - 4.0 * u * u));
}

double profile_derivative(double u) {
  if (std::abs(u) >= 0.5) return 0.0;
  const double d = 1.0 - 4.0 * u * u;
  return profile(u) * (-8.0 * u / (d * d));
}

struct Variant {
  double center_frac;  // center as a fraction of |omega| from omega.lo
  double width_frac;   // support width as a fraction of |omega|
  bool modulated;
};

Variant variant(int index) {
  if (index < 0 || index >= AdaptedBump::kFamilySize) throw InvalidParameter("adapted bump: index out of range");
  static constexpr std::array<std::pair<double, double>, 4> kTrans{{{0.5, 1.0}, {0.25, 0.5}, {0.5, 0.5}, {0.75, 0.5}}};
  const auto [c, w] = kTrans[index % 4];
  return {c, w, index >= 4};
}

}  // namespace

VariationResult variational_norm(std::span<const cd> x, double r) { return variation_impl(x, r); }
VariationResult variational_norm(std::span<const double> x, double r) { return variation_impl(x, r); }

double chi_tilde(const Interval& I, double x, double M) {
  if (!(I.length() > 0.0)) throw InvalidParameter("chi_tilde: interval must have positive length");
  return std::pow(1.0 + std::abs(x - I.center()) / I.length(), -M);
}

double AdaptedBump::required_constant(int index) {
  static const std::array<double, kFamilySize> table = [] {
    std::array<double, kFamilySize> t{};
    for (int v = 0; v < kFamilySize; ++v) {
      const Variant var = variant(v);
      // |omega| * max |m'| on the unit interval; u runs over the bump's own support.
      double d = 0.0;
      const int n = 200000;
      for (int i = 1; i < n; ++i) {
        const double u = -0.5 + static_cast<double>(i) / n;
        const double b = profile_derivative(u) / var.width_frac;
        const double ph = var.modulated ? profile(u) * kTwoPi : 0.0;
        d = std::max(d, std::hypot(b, ph));
      }
      t[v] = std::max(1.0, d);
    }
    return t;
  }();
  if (index < 0 || index >= kFamilySize) throw InvalidParameter("adapted bump: index out of range");
  return table[index];
}

double AdaptedBump::family_constant() {
  double c = 0.0;
  for (int v = 0; v < kFamilySize; ++v) c = std::max(c, required_constant(v));
  return c;
}

AdaptedBump::AdaptedBump(const Interval& omega, double C, int index) : omega_(omega), C_(C), index_(index) {
  if (!(omega.length() > 0.0)) throw InvalidParameter("adapted bump: empty interval");
  const Variant v = variant(index);
  if (C < required_constant(index)) throw InvalidParameter("adapted bump: constant C too small for a smooth transition");
  center_ = omega.lo + v.center_frac * omega.length();
  width_ = v.width_frac * omega.length();
  modulated_ = v.modulated;
}

cd AdaptedBump::operator()(double xi) const {
  const double u = (xi - center_) / width_;
  const double b = profile(u);
  if (b == 0.0) return 0.0;
  if (!modulated_) return b;
  return std::polar(b, -kTwoPi * (xi - center_) / omega_.length());
}

std::vector<cd> AdaptedBump::samples(const Grid& g) const {
  std::vector<cd> out(g.size(), 0.0);
  const long j0 = static_cast<long>(std::floor(omega_.lo * g.L()));
  const long j1 = static_cast<long>(std::ceil(omega_.hi * g.L()));
  for (long j = std::max(j0, static_cast<long>(std::ceil(g.freq_min() * g.L())));
       j <= std::min(j1, static_cast<long>(std::floor(g.freq_max() * g.L())) - 1); ++j)
    out[g.slot_of(j)] = (*this)(static_cast<double>(j) / g.L());
  return out;
}

AdaptedBump make_adapted_bump(const Interval& omega, double C, int index) { return AdaptedBump(omega, C, index); }

SizeEstimator::SizeEstimator(const SampledFunction& f, int family_size) : fhat_(dft(f)), family_size_(family_size) {
  if (family_size < 1 || family_size > AdaptedBump::kFamilySize)
    throw InvalidParameter("size: family size must lie in [1, 8]");
  zero_ = std::all_of(f.values.begin(), f.values.end(), [](const cd& v) { return v == cd(0.0); });
}

const std::vector<std::vector<double>>& SizeEstimator::filtered(const DyadicInterval& omega) {
  auto it = cache_.find(omega);
  if (it != cache_.end()) return it->second;
  const Grid& g = grid();
  Interval w10 = Interval::of(omega).dilate(10.0);
  w10.lo = std::max(w10.lo, g.freq_min());
  w10.hi = std::min(w10.hi, g.freq_max());
  const double C = AdaptedBump::family_constant();
  std::vector<std::vector<double>> out;
  for (int v = 0; v < family_size_; ++v) {
    const std::vector<cd> m = AdaptedBump(w10, C, v).samples(g);
    const SampledFunction tf = apply_multiplier(fhat_, m);
    std::vector<double> sq(g.size());
    for (std::size_t n = 0; n < g.size(); ++n) sq[n] = std::norm(tf[n]);
    out.push_back(std::move(sq));
  }
  return cache_.emplace(omega, std::move(out)).first->second;
}

double SizeEstimator::tile(const Tile& s) {
  if (!fits_in_grid(s, grid())) throw InvalidParameter("size: tile does not fit in the grid box");
  if (zero_) return 0.0;
  auto it = tile_cache_.find(s);
  if (it != tile_cache_.end()) return it->second;
  const Grid& g = grid();
  const Interval I = Interval::of(s.time);
  std::vector<double> w(g.size());
  for (std::size_t n = 0; n < g.size(); ++n) {
    const double t = 1.0 / (1.0 + std::abs(g.x(n) - I.center()) / I.length());
    const double t5 = t * t * t * t * t;
    w[n] = t5 * t5 * t5 * t5;  // chi~^{20} = (chi~^{10})^2
  }
  double best = 0.0;
  for (const auto& sq : filtered(s.freq)) {
    double acc = 0.0;
    for (std::size_t n = 0; n < g.size(); ++n) acc += sq[n] * w[n];
    best = std::max(best, std::sqrt(acc * g.dx() / I.length()));
  }
  tile_cache_.emplace(s, best);
  return best;
}

double SizeEstimator::set(const TileSet& S) { return range(S.begin(), S.end()); }

double tile_size(const TileSet& S, const SampledFunction& f, int family_size) {
  SizeEstimator est(f, family_size);
  return est.set(S);
}

namespace {

double ratio_of_spectrum(const MultiplierFamily& fam, const Spectrum& G, double g_norm, double q) {
  if (g_norm == 0.0) return 0.0;
  const std::size_t n = fam.grid.size();
  std::vector<double> sup(n, 0.0);
  Spectrum work(fam.grid);
  for (const auto& m : fam.m) {
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
      work[i] = m[i] * G[i];
      any = any || work[i] != cd(0.0);
    }
    if (!any) continue;
    const SampledFunction t = idft(work);
    for (std::size_t i = 0; i < n; ++i) sup[i] = std::max(sup[i], std::abs(t[i]));
  }
  return lp_norm(sup, fam.grid.dx(), q) / g_norm;
}

void check_family(const MultiplierFamily& fam) {
  for (const auto& m : fam.m)
    if (m.size() != fam.grid.size()) throw InvalidInput("multiplier family: sample count does not match grid");
}

// Modulated Gaussian e^{-pi ((x - c)/s)^2} e^{2 pi i xi x}, periodized over one neighbour.
std::vector<cd> gaussian_packet(const Grid& g, double c, double s, double xi) {
  std::vector<cd> out(g.size());
  for (std::size_t n = 0; n < g.size(); ++n) {
    const double x = g.x(n);
    double a = 0.0;
    for (int w = -1; w <= 1; ++w) {
      const double u = (x - c + w * g.L()) / s;
      a += std::exp(-kPi * u * u);
    }
    out[n] = std::polar(a, kTwoPi * xi * x);
  }
  return out;
}

}  // namespace

double maximal_multiplier_ratio(const MultiplierFamily& fam, const SampledFunction& g, double q) {
  check_family(fam);
  return ratio_of_spectrum(fam, dft(g), lp_norm(g, q), q);
}

MmLowerResult mm_norm_lower_search(const MultiplierFamily& fam, double q, const SearchBudget& budget) {
  check_family(fam);
  if (!(q >= 1.0)) throw InvalidParameter("mm_norm_lower: q must be >= 1");
  const Grid& g = fam.grid;
  MmLowerResult res;
  res.best.assign(g.size(), 0.0);

  const auto evaluate = [&](const std::vector<cd>& v) {
    SampledFunction f(g, v);
    return ratio_of_spectrum(fam, dft(f), lp_norm(f, q), q);
  };
  const auto consider = [&](const std::vector<cd>& v) {
    const double r = evaluate(v);
    if (r > res.value) {
      res.value = r;
      res.best = v;
    }
    return r;
  };

  // Frequencies where the multipliers live.
  std::vector<double> freqs{0.0};
  for (const auto& m : fam.m) {
    std::size_t arg = 0;
    double mass = 0.0, moment = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (std::abs(m[i]) > std::abs(m[arg])) arg = i;
      mass += std::abs(m[i]);
      moment += std::abs(m[i]) * g.frequency(i);
    }
    if (mass == 0.0) continue;
    freqs.push_back(g.frequency(arg));
    freqs.push_back(std::round(moment / mass * g.L()) / g.L());
  }
  std::sort(freqs.begin(), freqs.end());
  freqs.erase(std::unique(freqs.begin(), freqs.end()), freqs.end());

  std::vector<double> widths;
  for (double s = 2.0 * g.dx(); s <= g.L() / 8.0; s *= 2.0) widths.push_back(s);

  for (double xi : freqs) {
    std::vector<cd> plane(g.size());
    for (std::size_t n = 0; n < g.size(); ++n) plane[n] = std::polar(1.0, kTwoPi * xi * g.x(n));
    consider(plane);
    for (double s : widths) consider(gaussian_packet(g, g.L() / 2.0, s, xi));
  }

  std::mt19937_64 rng(budget.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int nb = std::max(1, budget.basis_size);
  for (int restart = 0; restart < budget.restarts; ++restart) {
    std::vector<std::vector<cd>> basis;
    std::vector<cd> coef;
    if (restart == 0) {
      basis.push_back(res.best);
      coef.push_back(1.0);
    }
    while (static_cast<int>(basis.size()) < nb) {
      const double c = unit(rng) * g.L();
      const double s = widths.empty() ? g.dx() : widths[static_cast<std::size_t>(unit(rng) * widths.size())];
      const double xi = freqs[static_cast<std::size_t>(unit(rng) * freqs.size())] +
                        std::round(normal(rng) * 2.0) / g.L();
      basis.push_back(gaussian_packet(g, c, s, xi));
      coef.push_back(restart == 0 ? cd(0.05 * normal(rng), 0.05 * normal(rng)) : cd(normal(rng), normal(rng)));
    }
    const auto combine = [&](const std::vector<cd>& cf) {
      std::vector<cd> v(g.size(), 0.0);
      for (std::size_t b = 0; b < basis.size(); ++b)
        if (cf[b] != cd(0.0))
          for (std::size_t n = 0; n < g.size(); ++n) v[n] += cf[b] * basis[b][n];
      return v;
    };
    double cur = consider(combine(coef));
    double step = 0.5;
    for (int it = 0; it < budget.iterations; ++it) {
      const std::size_t b = static_cast<std::size_t>(it) % basis.size();
      double scale = 0.0;
      for (const cd& c : coef) scale = std::max(scale, std::abs(c));
      std::vector<cd> trial = coef;
      trial[b] += step * scale * cd(normal(rng), normal(rng));
      const double r = consider(combine(trial));
      if (r > cur) {
        cur = r;
        coef = std::move(trial);
        step = std::min(2.0, step * 1.3);
      } else {
        step = std::max(1e-3, step * 0.8);
      }
    }
  }
  return res;
}

double mm_norm_lower(const MultiplierFamily& fam, double q, const SearchBudget& budget) {
  return mm_norm_lower_search(fam, q, budget).value;
}

}  // namespace rtt
