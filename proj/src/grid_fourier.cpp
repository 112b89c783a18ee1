#include "rtt/grid_fourier.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>

namespace rtt {

namespace {

bool is_power_of_two(double v) {
  if (!(v > 0.0) || !std::isfinite(v)) return false;
  int e = 0;
  return std::frexp(v, &e) == 0.5;
}

// FFTW plans are cached per (size, direction).  FFTW_ESTIMATE keeps the
// chosen algorithm independent of timing, so repeated runs are bit-identical.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  void execute(std::size_t n, int sign, const cd* in, cd* out) {
    fftw_plan plan = nullptr;
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto key = std::make_pair(n, sign);
      auto it = plans_.find(key);
      if (it == plans_.end()) {
        std::vector<cd> a(n), b(n);
        plan = fftw_plan_dft_1d(static_cast<int>(n), reinterpret_cast<fftw_complex*>(a.data()),
                                reinterpret_cast<fftw_complex*>(b.data()), sign, FFTW_ESTIMATE);
        plans_.emplace(key, plan);
      } else {
        plan = it->second;
      }
    }
    fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(const_cast<cd*>(in)),
                     reinterpret_cast<fftw_complex*>(out));
  }

  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

 private:
  std::mutex mu_;
  std::map<std::pair<std::size_t, int>, fftw_plan> plans_;
};

}  // namespace

Grid::Grid(int J, double L) : J_(J), L_(L) {
  if (J < 1 || J > 24) throw InvalidParameter("grid: J must lie in [1, 24]");
  if (!is_power_of_two(L)) throw InvalidParameter("grid: L must be a positive power of two");
  n_ = std::size_t{1} << J;
  dx_ = L / static_cast<double>(n_);
}

long Grid::freq_index(std::size_t i) const {
  const long n = static_cast<long>(n_);
  const long li = static_cast<long>(i);
  return li < n / 2 ? li : li - n;
}

std::size_t Grid::slot_of(long j) const {
  const long n = static_cast<long>(n_);
  long r = j % n;
  if (r < 0) r += n;
  return static_cast<std::size_t>(r);
}

std::size_t Grid::index_of(double x) const {
  const double r = std::round(x / dx_);
  if (r <= 0.0) return 0;
  if (r >= static_cast<double>(n_ - 1)) return n_ - 1;
  return static_cast<std::size_t>(r);
}

SampledFunction::SampledFunction(const Grid& g, std::vector<cd> v) : grid(g), values(std::move(v)) {
  if (values.size() != grid.size()) throw InvalidInput("sampled function: length does not match grid");
}

SampledFunction SampledFunction::from(const Grid& g, const std::function<cd(double)>& fn) {
  SampledFunction f(g);
  for (std::size_t n = 0; n < g.size(); ++n) f.values[n] = fn(g.x(n));
  return f;
}

SampledFunction SampledFunction::indicator(const Grid& g, double a, double b) {
  SampledFunction f(g);
  for (std::size_t n = 0; n < g.size(); ++n) {
    const double x = g.x(n);
    f.values[n] = (x >= a && x < b) ? 1.0 : 0.0;
  }
  return f;
}

Spectrum::Spectrum(const Grid& g, std::vector<cd> v) : grid(g), values(std::move(v)) {
  if (values.size() != grid.size()) throw InvalidInput("spectrum: length does not match grid");
}

Spectrum dft(const SampledFunction& f) {
  Spectrum out(f.grid);
  PlanCache::instance().execute(f.size(), FFTW_FORWARD, f.values.data(), out.values.data());
  const double dx = f.grid.dx();
  for (auto& v : out.values) v *= dx;
  return out;
}

SampledFunction idft(const Spectrum& fh) {
  SampledFunction out(fh.grid);
  PlanCache::instance().execute(fh.size(), FFTW_BACKWARD, fh.values.data(), out.values.data());
  const double scale = 1.0 / fh.grid.L();
  for (auto& v : out.values) v *= scale;
  return out;
}

SampledFunction apply_multiplier(const Spectrum& fh, std::span<const cd> multiplier) {
  if (multiplier.size() != fh.size()) throw InvalidInput("apply_multiplier: length mismatch");
  Spectrum g(fh.grid);
  for (std::size_t i = 0; i < fh.size(); ++i) g.values[i] = fh.values[i] * multiplier[i];
  return idft(g);
}

SampledFunction apply_multiplier(const Spectrum& fh, const std::function<cd(double)>& multiplier) {
  Spectrum g(fh.grid);
  for (std::size_t i = 0; i < fh.size(); ++i) g.values[i] = fh.values[i] * multiplier(fh.grid.frequency(i));
  return idft(g);
}

namespace {

template <typename Abs>
double lp_impl(std::size_t n, double dx, double p, Abs abs_at) {
  if (!(p >= 1.0)) throw InvalidParameter("lp_norm: p must be >= 1");
  if (std::isinf(p)) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, abs_at(i));
    return m;
  }
  // Scale by the maximum to avoid overflow for large p.
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, abs_at(i));
  if (m == 0.0) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::pow(abs_at(i) / m, p);
  return m * std::pow(s * dx, 1.0 / p);
}

}  // namespace

double lp_norm(std::span<const cd> values, double dx, double p) {
  return lp_impl(values.size(), dx, p, [&](std::size_t i) { return std::abs(values[i]); });
}

double lp_norm(std::span<const double> values, double dx, double p) {
  return lp_impl(values.size(), dx, p, [&](std::size_t i) { return std::abs(values[i]); });
}

double lp_norm(const SampledFunction& f, double p) { return lp_norm(std::span<const cd>(f.values), f.grid.dx(), p); }

std::vector<double> hl_maximal(std::span<const double> a) {
  const std::size_t n = a.size();
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + std::abs(a[i]);

  std::vector<double> mf(n, 0.0);
  std::vector<double> suffix_best(n + 2, 0.0);
  // For each left end a, suffix_best[b] = max over b' >= b of avg(a, b').
  // Point i in [a, N) is covered by every [a, b) with b > i.
  for (std::size_t left = 0; left < n; ++left) {
    suffix_best[n + 1] = 0.0;
    for (std::size_t b = n; b > left; --b) {
      const double avg = (prefix[b] - prefix[left]) / static_cast<double>(b - left);
      suffix_best[b] = std::max(avg, suffix_best[b + 1]);
    }
    for (std::size_t i = left; i < n; ++i) mf[i] = std::max(mf[i], suffix_best[i + 1]);
  }
  return mf;
}

std::vector<double> hl_maximal(const SampledFunction& f) {
  std::vector<double> a(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) a[i] = std::abs(f.values[i]);
  return hl_maximal(a);
}

cd inner(const SampledFunction& f, const SampledFunction& g) {
  if (!(f.grid == g.grid)) throw InvalidInput("inner: grids differ");
  cd s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += f.values[i] * std::conj(g.values[i]);
  return s * f.grid.dx();
}

}  // namespace rtt
