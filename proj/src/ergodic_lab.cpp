#include "rtt/ergodic_lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "rtt/csv.hpp"
#include "rtt/norms_size.hpp"

namespace rtt {

namespace {

constexpr double kTwo64 = 18446744073709551616.0;

// Neumaier compensated sum.
struct CompensatedSum {
  double sum = 0.0, comp = 0.0;
  void add(double v) {
    const double t = sum + v;
    comp += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};

struct ComplexSum {
  CompensatedSum re, im;
  void add(cd v) {
    re.add(v.real());
    im.add(v.imag());
  }
  cd value() const { return {re.value(), im.value()}; }
};

std::size_t wrap(long long i, std::size_t n) {
  const long long m = static_cast<long long>(n);
  return static_cast<std::size_t>(((i % m) + m) % m);
}

}  // namespace

std::uint64_t to_fixed(double u) {
  if (!std::isfinite(u)) throw InvalidParameter("fixed point: non-finite coordinate");
  const double frac = u - std::floor(u);
  const double scaled = std::ldexp(frac, 64);
  if (scaled >= kTwo64) return std::numeric_limits<std::uint64_t>::max();
  return static_cast<std::uint64_t>(scaled);
}

double from_fixed(std::uint64_t r) { return std::ldexp(static_cast<double>(r), -64); }

double TorusPoint::coord(int i) const { return from_fixed(raw[static_cast<std::size_t>(i)]); }

TorusPoint TorusPoint::from(double u, double v) { return TorusPoint{{to_fixed(u), to_fixed(v)}}; }

DynamicalSystem DynamicalSystem::rotation(double alpha) {
  DynamicalSystem s;
  s.kind_ = SystemKind::CircleRotation;
  s.shift_ = {to_fixed(alpha), 0};
  return s;
}

DynamicalSystem DynamicalSystem::torus_product(double alpha, double beta) {
  DynamicalSystem s;
  s.kind_ = SystemKind::TorusProduct;
  s.shift_ = {to_fixed(alpha), to_fixed(beta)};
  return s;
}

DynamicalSystem DynamicalSystem::interval_exchange(const std::vector<double>& lengths, const std::vector<int>& perm) {
  const std::size_t n = lengths.size();
  if (n < 2 || perm.size() != n) throw InvalidParameter("interval exchange: need >= 2 lengths and a matching permutation");
  std::vector<int> check(perm);
  std::sort(check.begin(), check.end());
  for (std::size_t i = 0; i < n; ++i)
    if (check[i] != static_cast<int>(i)) throw InvalidParameter("interval exchange: perm is not a permutation");
  double total = 0.0;
  for (double l : lengths) {
    if (!(l > 0.0)) throw InvalidParameter("interval exchange: lengths must be positive");
    total += l;
  }
  std::vector<std::uint64_t> len(n);
  std::uint64_t used = 0;
  for (std::size_t i = 0; i + 1 < n; ++i) used += len[i] = to_fixed(lengths[i] / total);
  len[n - 1] = std::uint64_t{0} - used;  // remainder of 2^64
  DynamicalSystem s;
  s.kind_ = SystemKind::IntervalExchange;
  s.src_start_.assign(n, 0);
  s.dst_start_.assign(n, 0);
  for (std::size_t i = 1; i < n; ++i) s.src_start_[i] = s.src_start_[i - 1] + len[i - 1];
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (perm[j] < perm[i]) s.dst_start_[i] += len[j];
  return s;
}

std::string DynamicalSystem::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind_) {
    case SystemKind::CircleRotation:
      os << "rotation(" << from_fixed(shift_[0]) << ")";
      break;
    case SystemKind::TorusProduct:
      os << "torus(" << from_fixed(shift_[0]) << "," << from_fixed(shift_[1]) << ")";
      break;
    case SystemKind::IntervalExchange:
      os << "iet(" << src_start_.size() << ")";
      break;
  }
  return os.str();
}

namespace {

// Index of the interval containing x among sorted starts (first start is 0).
std::size_t locate(const std::vector<std::uint64_t>& starts, std::uint64_t x) {
  return static_cast<std::size_t>(std::upper_bound(starts.begin(), starts.end(), x) - starts.begin()) - 1;
}

}  // namespace

TorusPoint DynamicalSystem::step(const TorusPoint& p) const {
  TorusPoint q = p;
  if (kind_ == SystemKind::IntervalExchange) {
    const std::size_t i = locate(src_start_, p.raw[0]);
    q.raw[0] = p.raw[0] - src_start_[i] + dst_start_[i];
    return q;
  }
  q.raw[0] += shift_[0];
  q.raw[1] += shift_[1];
  return q;
}

TorusPoint DynamicalSystem::inverse_step(const TorusPoint& p) const {
  TorusPoint q = p;
  if (kind_ == SystemKind::IntervalExchange) {
    std::vector<std::size_t> order(dst_start_.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dst_start_[a] < dst_start_[b]; });
    std::vector<std::uint64_t> sorted(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) sorted[i] = dst_start_[order[i]];
    const std::size_t i = order[locate(sorted, p.raw[0])];
    q.raw[0] = p.raw[0] - dst_start_[i] + src_start_[i];
    return q;
  }
  q.raw[0] -= shift_[0];
  q.raw[1] -= shift_[1];
  return q;
}

TorusPoint DynamicalSystem::iterate(TorusPoint p, std::uint64_t n) const {
  if (kind_ != SystemKind::IntervalExchange) {
    p.raw[0] += shift_[0] * n;
    p.raw[1] += shift_[1] * n;
    return p;
  }
  for (std::uint64_t i = 0; i < n; ++i) p = step(p);
  return p;
}

namespace {

// Wilson-Hilferty approximation of the chi-square quantile.
double chi_square_quantile(double dof, double z) {
  const double c = 2.0 / (9.0 * dof);
  return dof * std::pow(1.0 - c + z * std::sqrt(c), 3);
}

}  // namespace

ChiSquareReport measure_preservation_check(const DynamicalSystem& s, int samples, int bins, int steps,
                                           std::uint64_t seed) {
  if (samples <= 0 || bins <= 1 || steps < 0) throw InvalidParameter("chi-square check: bad sample, bin or step count");
  const int dim = s.dimension();
  const int cells = dim == 2 ? bins * bins : bins;
  std::vector<double> hist(static_cast<std::size_t>(cells), 0.0);
  std::mt19937_64 rng(seed);
  for (int i = 0; i < samples; ++i) {
    TorusPoint p{{rng(), rng()}};
    p = s.iterate(p, static_cast<std::uint64_t>(steps));
    const auto b0 = static_cast<int>(std::min<double>(bins - 1, std::floor(p.coord(0) * bins)));
    int cell = b0;
    if (dim == 2) cell += bins * static_cast<int>(std::min<double>(bins - 1, std::floor(p.coord(1) * bins)));
    hist[static_cast<std::size_t>(cell)] += 1.0;
  }
  ChiSquareReport r;
  r.bins = cells;
  const double expect = static_cast<double>(samples) / cells;
  for (double h : hist) r.statistic += (h - expect) * (h - expect) / expect;
  r.threshold = chi_square_quantile(cells - 1.0, 3.090232306167813);
  r.passed = r.statistic <= r.threshold;
  return r;
}

cd TrigPolynomial::operator()(double u) const {
  if (coeffs.empty() || coeffs.size() % 2 == 0) throw InvalidParameter("trig polynomial: need 2 deg + 1 coefficients");
  const long deg = static_cast<long>(coeffs.size() / 2);
  const cd w = std::polar(1.0, kTwoPi * u);
  const cd winv = std::conj(w);
  cd acc = coeffs[static_cast<std::size_t>(deg)];
  cd up = 1.0, down = 1.0;
  for (long j = 1; j <= deg; ++j) {
    up *= w;
    down *= winv;
    acc += coeffs[static_cast<std::size_t>(deg + j)] * up + coeffs[static_cast<std::size_t>(deg - j)] * down;
  }
  return acc;
}

Observable TrigPolynomial::observable(int axis) const {
  TrigPolynomial copy = *this;
  return [copy, axis](const TorusPoint& p) { return copy(p.coord(axis)); };
}

namespace {

void check_N_list(const std::vector<std::uint64_t>& N) {
  if (N.empty()) throw InvalidParameter("average: empty N list");
  for (std::size_t i = 0; i < N.size(); ++i)
    if (N[i] == 0 || (i > 0 && N[i] <= N[i - 1])) throw InvalidParameter("average: N list must be positive and increasing");
}

template <typename Term>
AverageSeries run_average(const std::vector<std::uint64_t>& N_list, Term term) {
  check_N_list(N_list);
  AverageSeries s;
  s.N = N_list;
  ComplexSum acc;
  std::size_t next = 0;
  double block = 0.0;
  cd anchor = 0.0;
  for (std::uint64_t n = 1; n <= N_list.back(); ++n) {
    acc.add(term());
    const cd A = acc.value() / static_cast<double>(n);
    if (next > 0) block = std::max(block, std::abs(A - anchor));
    if (n == N_list[next]) {
      if (next > 0) s.block_oscillation.push_back(block);
      s.A.push_back(A);
      anchor = A;
      block = 0.0;
      ++next;
    }
  }
  return s;
}

}  // namespace

AverageSeries return_times_average(const Observable& f, const DynamicalSystem& tau, const TorusPoint& x,
                                   const Observable& g, const DynamicalSystem& sigma, const TorusPoint& y,
                                   const std::vector<std::uint64_t>& N_list) {
  TorusPoint px = x, py = y;
  AverageSeries s = run_average(N_list, [&] {
    px = tau.step(px);
    py = sigma.step(py);
    return f(px) * g(py);
  });
  s.descriptor = tau.describe() + " x " + sigma.describe();
  return s;
}

AverageSeries birkhoff_average(const Observable& f, const DynamicalSystem& tau, const TorusPoint& x,
                               const std::vector<std::uint64_t>& N_list) {
  TorusPoint px = x;
  AverageSeries s = run_average(N_list, [&] {
    px = tau.step(px);
    return f(px);
  });
  s.descriptor = tau.describe();
  return s;
}

std::vector<std::uint64_t> dyadic_list(int k_min, int k_max) {
  if (k_min < 0 || k_max < k_min || k_max > 62) throw InvalidParameter("dyadic list: need 0 <= k_min <= k_max <= 62");
  std::vector<std::uint64_t> out;
  for (int k = k_min; k <= k_max; ++k) out.push_back(std::uint64_t{1} << k);
  return out;
}

ConvergenceDiagnostic convergence_diagnostic(const AverageSeries& s, double r) {
  ConvergenceDiagnostic d;
  if (s.A.empty()) return d;
  for (std::size_t i = 0; i < s.A.size(); ++i)
    for (std::size_t j = i + 1; j < s.A.size(); ++j) d.oscillation = std::max(d.oscillation, std::abs(s.A[i] - s.A[j]));
  d.vr = variational_norm(s.A, r).value;
  return d;
}

std::string series_csv(const AverageSeries& s, double r) {
  csv::Table t({"N", "re_A", "im_A", "abs_A", "block_oscillation", "oscillation", "vr"});
  const ConvergenceDiagnostic d = convergence_diagnostic(s, r);
  for (std::size_t i = 0; i < s.N.size(); ++i)
    t.add({csv::num(s.N[i]), csv::num(s.A[i].real()), csv::num(s.A[i].imag()), csv::num(std::abs(s.A[i])),
           i == 0 ? std::string() : csv::num(s.block_oscillation[i - 1]), csv::num(d.oscillation), csv::num(d.vr)});
  return t.str();
}

double box_kernel(double u) {
  const double a = std::abs(u);
  if (a < 1.0) return 0.5;
  if (a == 1.0) return 0.25;
  return 0.0;
}

double averaging_R(const SampledFunction& f, const SampledFunction& g, const KernelFn& K, std::size_t x_index,
                   std::size_t z_index, int k) {
  const Grid& gr = f.grid;
  const std::size_t N = gr.size();
  const double s = std::ldexp(1.0, k);
  ComplexSum acc;
  for (long long j = -static_cast<long long>(N / 2); j < static_cast<long long>(N / 2); ++j) {
    const double w = K(static_cast<double>(j) * gr.dx() / s);
    if (w == 0.0) continue;
    acc.add(f[wrap(static_cast<long long>(x_index) + j, N)] * g[wrap(static_cast<long long>(z_index) + j, N)] * w);
  }
  return std::abs(acc.value()) * gr.dx() / s;
}

double averaging_R_max(const SampledFunction& f, const SampledFunction& g, const KernelFn& K, std::size_t x_index,
                       std::size_t z_index, int k_min, int k_max) {
  double best = 0.0;
  for (int k = k_min; k <= k_max; ++k) best = std::max(best, averaging_R(f, g, K, x_index, z_index, k));
  return best;
}

double R_proxy_ratio(const SampledFunction& f, const std::vector<SampledFunction>& g_family, const KernelFn& K,
                     double p, double q, int k_min, int k_max, std::size_t x_stride) {
  if (g_family.empty()) throw InvalidInput("R proxy: empty g family");
  if (x_stride == 0) throw InvalidParameter("R proxy: stride must be positive");
  const Grid& gr = f.grid;
  const std::size_t N = gr.size();
  std::vector<Spectrum> ghat;
  for (const SampledFunction& g : g_family) {
    const double nq = lp_norm(g, q);
    if (nq == 0.0) throw InvalidInput("R proxy: zero function in g family");
    SampledFunction gn = g;
    for (auto& v : gn.values) v /= nq;
    ghat.push_back(dft(gn));
  }
  std::vector<std::vector<double>> kvals;
  for (int k = k_min; k <= k_max; ++k) {
    const double s = std::ldexp(1.0, k);
    std::vector<double> v(N);
    for (std::size_t j = 0; j < N; ++j) {
      const long long jj = j < N / 2 ? static_cast<long long>(j) : static_cast<long long>(j) - static_cast<long long>(N);
      v[j] = K(static_cast<double>(jj) * gr.dx() / s) / s;
    }
    kvals.push_back(std::move(v));
  }
  std::vector<double> Rx;
  for (std::size_t x = 0; x < N; x += x_stride) {
    std::vector<std::vector<double>> sup(g_family.size(), std::vector<double>(N, 0.0));
    for (const auto& kv : kvals) {
      // C(z) = dx sum_y h(y) g(z + y) = (h' * g)(z), h'(u) = h(-u), h(y) = f(x + y) K(y / s) / s
      SampledFunction hr(gr);
      for (std::size_t j = 0; j < N; ++j) hr[wrap(-static_cast<long long>(j), N)] = f[(x + j) % N] * kv[j];
      const Spectrum hh = dft(hr);
      for (std::size_t gi = 0; gi < ghat.size(); ++gi) {
        Spectrum prod(gr);
        for (std::size_t i = 0; i < N; ++i) prod[i] = hh[i] * ghat[gi][i];
        const SampledFunction c = idft(prod);
        for (std::size_t z = 0; z < N; ++z) sup[gi][z] = std::max(sup[gi][z], std::abs(c[z]));
      }
    }
    double best = 0.0;
    for (const auto& sv : sup) best = std::max(best, lp_norm(sv, gr.dx(), q));
    Rx.push_back(best);
  }
  const double fn = lp_norm(f, p);
  if (fn == 0.0) return 0.0;
  return lp_norm(Rx, gr.dx() * static_cast<double>(x_stride), p) / fn;
}

double bilinear_max(const SampledFunction& f, const SampledFunction& g, std::size_t x_index,
                    const std::vector<double>& t_list) {
  const Grid& gr = f.grid;
  const std::size_t N = gr.size();
  double best = 0.0;
  for (double t : t_list) {
    if (!(t > 0.0)) throw InvalidParameter("bilinear_max: t must be positive");
    const auto n = static_cast<long long>(std::ceil(t / gr.dx()));
    ComplexSum acc;
    for (long long j = -n; j <= n; ++j) {
      const double w = box_kernel(static_cast<double>(j) * gr.dx() / t);
      if (w == 0.0) continue;
      acc.add(f[wrap(static_cast<long long>(x_index) + j, N)] * g[wrap(static_cast<long long>(x_index) - j, N)] * w);
    }
    best = std::max(best, std::abs(acc.value()) * gr.dx() / t);
  }
  return best;
}

std::vector<double> dyadic_t_grid(const Grid& grid, double t_min, double t_max) {
  std::vector<double> out;
  for (double t = grid.dx(); t <= t_max; t *= 2.0)
    if (t >= t_min) out.push_back(t);
  return out;
}

double tail_T1(const SampledFunction& f, const SampledFunction& g, std::size_t x_index,
               const std::vector<double>& t_list) {
  const Grid& gr = f.grid;
  const std::size_t N = gr.size();
  const auto n = static_cast<long long>(std::llround(1.0 / gr.dx()));
  double best = 0.0;
  for (double t : t_list) {
    if (!(t > 1.0)) continue;
    const auto j0 = static_cast<long long>(std::llround(t / gr.dx()));
    ComplexSum acc;
    for (long long j = j0; j <= j0 + n; ++j) {
      const double w = (j == j0 || j == j0 + n) ? 0.5 : 1.0;
      acc.add(f[wrap(static_cast<long long>(x_index) + j, N)] * g[wrap(static_cast<long long>(x_index) - j, N)] * w);
    }
    best = std::max(best, std::abs(acc.value()) * gr.dx() / (2.0 * t));
  }
  return best;
}

double tail_T2(const Observable& f, const DynamicalSystem& tau, const TorusPoint& x, const Observable& g,
               const DynamicalSystem& sigma, const TorusPoint& y, std::uint64_t n_max) {
  TorusPoint px = x, py = y;
  double best = 0.0;
  for (std::uint64_t n = 1; n <= n_max; ++n) {
    px = tau.step(px);
    py = sigma.step(py);
    best = std::max(best, std::abs(f(px) * g(py)) / static_cast<double>(n));
  }
  return best;
}

Spike::Spike(double u0_, double h_, double a_) : u0(u0_), h(h_), a(a_) {
  if (!(a > 0.0 && a < 1.0)) throw InvalidParameter("spike: exponent must lie in (0, 1)");
  if (!(h > 0.0 && h < std::min(u0, 1.0 - u0))) throw InvalidParameter("spike: need 0 < h < dist(u0, {0, 1})");
  const auto tail = [&](double d) { return (std::pow(d, 1.0 - a) - std::pow(h, 1.0 - a)) / (1.0 - a); };
  const double mass = 2.0 * h * std::pow(h, -a) + tail(u0) + tail(1.0 - u0);
  c = 1.0 / mass;
}

double Spike::operator()(double u) const { return c * std::pow(std::max(std::abs(u - u0), h), -a); }

std::vector<TailsRow> tails_sweep(const TailsConfig& cfg) {
  if (cfg.samples <= 0) throw InvalidParameter("tails: samples must be positive");
  const DynamicalSystem tau = DynamicalSystem::rotation(cfg.alpha), sigma = DynamicalSystem::rotation(cfg.beta);
  const Grid gr(cfg.J, 1.0);
  std::mt19937_64 rng(cfg.seed);
  // Sample 0 is the preimage pair of the spike centres, so tau x = u0 and sigma y = v0.
  std::vector<TorusPoint> xs{tau.inverse_step(TorusPoint::from(cfg.u0))}, ys{sigma.inverse_step(TorusPoint::from(cfg.v0))};
  for (int i = 1; i < cfg.samples; ++i) {
    xs.push_back(TorusPoint{{rng(), 0}});
    ys.push_back(TorusPoint{{rng(), 0}});
  }
  std::vector<double> t_list;
  for (double t = 1.0 + gr.dx(); t <= 8.0; t = t < 2.0 ? 2.0 : 2.0 * t) t_list.push_back(t);
  std::vector<TailsRow> rows;
  for (double h : cfg.sharpness) {
    const Spike fs(cfg.u0, h), gs(cfg.v0, h);
    const Observable f = [fs](const TorusPoint& p) { return cd(fs(p.coord(0))); };
    const Observable g = [gs](const TorusPoint& p) { return cd(gs(p.coord(0))); };
    SampledFunction F(gr), G(gr);
    for (std::size_t n = 0; n < gr.size(); ++n) {
      F[n] = fs(gr.x(n));
      G[n] = gs(gr.x(n));
    }
    TailsRow row{h, 0.0, 0.0};
    for (int i = 0; i < cfg.samples; ++i) {
      row.T2 = std::max(row.T2, tail_T2(f, tau, xs[static_cast<std::size_t>(i)], g, sigma,
                                        ys[static_cast<std::size_t>(i)], cfg.n_max));
      row.T1 = std::max(row.T1, tail_T1(F, G, gr.index_of(xs[static_cast<std::size_t>(i)].coord(0)), t_list));
    }
    rows.push_back(row);
  }
  return rows;
}

std::string tails_csv(const std::vector<TailsRow>& rows) {
  csv::Table t({"h", "T1", "T2"});
  for (const TailsRow& r : rows) t.add({csv::num(r.h), csv::num(r.T1), csv::num(r.T2)});
  return t.str();
}

namespace {

// A_l at the coarse points x_i = i * stride * dx: sum_m |c_{m,l}|^2 |phi(x_i - m)|^2.
std::vector<std::vector<double>> local_energy(const Window& w, const SampledFunction& f, std::size_t stride) {
  const Grid& gr = w.grid();
  const GaborCoefficients c = gabor_expand(w, f, 0);
  const std::size_t N = gr.size();
  const auto per_unit = static_cast<std::size_t>(std::llround(1.0 / gr.dx()));
  const std::size_t coarse = N / stride;
  std::vector<double> phi2(N);
  for (std::size_t n = 0; n < N; ++n) phi2[n] = std::norm(w.phi()[n]);
  std::vector<std::vector<double>> out;
  for (long l2 = c.l2_min(); l2 < c.l2_min() + c.l2_count(); ++l2) {
    std::vector<double> a(coarse, 0.0);
    bool any = false;
    for (long m = 0; m < c.m_count(); ++m) {
      const double e = std::norm(c.at(m, l2));
      if (e == 0.0) continue;
      any = true;
      const std::size_t shift = static_cast<std::size_t>(m) * per_unit;
      for (std::size_t i = 0; i < coarse; ++i) a[i] += e * phi2[(i * stride + N - shift % N) % N];
    }
    if (any) out.push_back(std::move(a));
  }
  return out;
}

double model_norm_from_energy(const std::vector<std::vector<double>>& A, const std::vector<std::vector<double>>& B,
                              double h, double p, double q) {
  const std::size_t nl = std::min(A.size(), B.size());
  if (nl == 0) return 0.0;
  const std::size_t n = A.front().size();
  std::vector<double> inner_norm(n);
  std::vector<double> row(n);
  for (std::size_t x = 0; x < n; ++x) {
    std::fill(row.begin(), row.end(), 0.0);
    for (std::size_t l = 0; l < nl; ++l) {
      const double a = A[l][x];
      if (a == 0.0) continue;
      const auto& b = B[l];
      for (std::size_t z = 0; z < n; ++z) row[z] += a * b[z];
    }
    double acc = 0.0;
    for (double v : row) acc += std::pow(v, q / 2.0);
    inner_norm[x] = std::pow(acc * h, 1.0 / q);
  }
  return lp_norm(inner_norm, h, p);
}

}  // namespace

double single_scale_model_norm(const SampledFunction& f, const SampledFunction& g, const Window& w, double p,
                               double q, std::size_t stride) {
  if (stride == 0 || w.grid().size() % stride != 0) throw InvalidParameter("single-scale model: stride must divide the grid size");
  return model_norm_from_energy(local_energy(w, f, stride), local_energy(w, g, stride),
                                w.grid().dx() * static_cast<double>(stride), p, q);
}

namespace {

std::size_t model_stride(const Grid& gr) {
  // coarse spacing 1/16: the energies vary on unit scale
  const auto per_unit = static_cast<std::size_t>(std::llround(1.0 / gr.dx()));
  return std::max<std::size_t>(1, per_unit / 16);
}

SampledFunction indicator(const Grid& gr, double lo, double len) {
  SampledFunction f(gr);
  for (std::size_t n = 0; n < gr.size(); ++n)
    if (gr.x(n) >= lo - 1e-12 && gr.x(n) < lo + len - 1e-12) f[n] = 1.0;
  return f;
}

}  // namespace

IndicatorPair best_indicator_pair(const Grid& gr, const Window& w, double p, double q) {
  const std::size_t stride = model_stride(gr);
  const double h = gr.dx() * static_cast<double>(stride);
  std::vector<double> lens;
  for (double len = gr.dx(); len <= 0.25 + 1e-12; len *= 2.0) lens.push_back(len);
  const std::vector<double> offsets{0.0, 0.375};
  struct Cand {
    double lo, len, measure;
    std::vector<std::vector<double>> energy;
  };
  std::vector<Cand> cands;
  for (double len : lens)
    for (double off : offsets) {
      const double lo = std::floor(gr.L() / 2.0) + off;
      const SampledFunction f = indicator(gr, lo, len);
      double measure = 0.0;
      for (const cd& v : f.values) measure += std::abs(v) * gr.dx();
      cands.push_back({lo, len, measure, local_energy(w, f, stride)});
    }
  IndicatorPair best{0, 0, 0, 0, -1.0};
  for (const Cand& a : cands)
    for (const Cand& b : cands) {
      const double out = model_norm_from_energy(a.energy, b.energy, h, p, q);
      const double ratio = out / (std::pow(a.measure, 1.0 / p) * std::pow(b.measure, 1.0 / q));
      if (ratio > best.ratio) best = {a.lo, a.len, b.lo, b.len, ratio};
    }
  return best;
}

std::vector<BlowupRow> single_scale_blowup(const BlowupConfig& cfg) {
  if (!(cfg.p >= 1.0 && cfg.q >= 1.0)) throw InvalidParameter("blowup: p and q must be >= 1");
  if (cfg.J_list.empty()) throw InvalidParameter("blowup: empty J list");
  std::vector<BlowupRow> rows;
  for (int J : cfg.J_list) {
    const Grid gr(J, cfg.L);
    const Window w(gr, 1.0);
    const IndicatorPair best = best_indicator_pair(gr, w, cfg.p, cfg.q);
    const double growth = rows.empty() ? std::nan("") : best.ratio / rows.back().proxy;
    rows.push_back({J, best.ratio, growth, best});
  }
  return rows;
}

std::string blowup_csv(const std::vector<BlowupRow>& rows, double p, double q) {
  csv::Table t({"p", "q", "J", "proxy", "growth", "f_lo", "f_len", "g_lo", "g_len"});
  for (const BlowupRow& r : rows)
    t.add({csv::num(p), csv::num(q), csv::num(r.J), csv::num(r.proxy), csv::num(r.growth), csv::num(r.best.f_lo),
           csv::num(r.best.f_len), csv::num(r.best.g_lo), csv::num(r.best.g_len)});
  return t.str();
}

}  // namespace rtt
