#include "rtt/wavepacket_frame.hpp"

#include <algorithm>
#include <cmath>

#include "rtt/csv.hpp"

namespace rtt {

namespace {

constexpr int kEtaNodes = 4096;  // quadrature nodes on [-1/2, 1/2]

// e^{2 pi i t} with t reduced mod 1 first; t is a dyadic rational in all uses.
cd unit_phase(double t) {
  const double r = t - std::floor(t);
  return std::polar(1.0, kTwoPi * r);
}

void check_packet_in_box(const Grid& g, int k, long m, double l) {
  const double len = std::ldexp(1.0, k);
  const double t0 = static_cast<double>(m) * len;
  const double f0 = l / len;
  if (t0 < 0.0 || t0 + len > g.L()) throw InvalidParameter("wave packet: time interval leaves [0, L)");
  if (f0 < g.freq_min() || f0 + 1.0 / len > g.freq_max())
    throw InvalidParameter("wave packet: frequency interval leaves the grid's frequency box");
}

}  // namespace

double smooth_step(double t, double s) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  // e^{-s/t} / (e^{-s/t} + e^{-s/(1-t)})
  const double d = s / t - s / (1.0 - t);
  if (d > 700.0) return 0.0;
  if (d < -700.0) return 1.0;
  return 1.0 / (1.0 + std::exp(d));
}

Window::Window(const Grid& grid, double smoothness) : grid_(grid), smoothness_(smoothness), phi_(grid) {
  if (!(smoothness > 0.0)) throw InvalidParameter("window: smoothness must be positive");
  if (grid.L() < 8.0) throw InvalidParameter("window: need at least 8 frequency samples across [0, 1] (L >= 8)");
  if (grid.dx() > 0.25) throw InvalidParameter("window: frequency box must contain [-2, 2] (dx <= 1/4)");
  Spectrum ph(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) ph.values[i] = phi_hat(grid.frequency(i));
  phi_ = idft(ph);
}

double Window::bump(double xi) const {
  if (xi <= 0.0 || xi >= 1.0) return 0.0;
  if (xi <= 0.5) return smooth_step(2.0 * xi, smoothness_);
  return 1.0 - smooth_step(2.0 * xi - 1.0, smoothness_);
}

double Window::phi_hat(double xi) const { return std::sqrt(bump(xi)); }

Window build_window(const Grid& grid, double smoothness) { return Window(grid, smoothness); }

Spectrum wave_packet_spectrum(const Window& w, int k, long m, long l2) {
  const Grid& g = w.grid();
  const double l = 0.5 * static_cast<double>(l2);
  check_packet_in_box(g, k, m, l);
  const double len = std::ldexp(1.0, k);
  const double amp = std::sqrt(len);
  // e^{2 pi i m l} = (-1)^{m * l2}
  const double sign = ((m * l2) % 2 == 0) ? 1.0 : -1.0;
  Spectrum out(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double xi = g.frequency(i);
    const double ph = w.phi_hat(len * xi - l);
    if (ph == 0.0) continue;
    out.values[i] = sign * amp * ph * unit_phase(-static_cast<double>(m) * len * xi);
  }
  return out;
}

SampledFunction wave_packet(const Window& w, int k, long m, long l2) { return idft(wave_packet_spectrum(w, k, m, l2)); }

GaborCoefficients::GaborCoefficients(int k, long m_count, long l2_min, long l2_count)
    : k_(k), m_count_(m_count), l2_min_(l2_min), l2_count_(l2_count),
      data_(static_cast<std::size_t>(m_count * l2_count)) {}

std::size_t GaborCoefficients::index(long m, long l2) const {
  if (m < 0 || m >= m_count_ || l2 < l2_min_ || l2 >= l2_min_ + l2_count_)
    throw InvalidInput("gabor coefficients: index out of range");
  return static_cast<std::size_t>((l2 - l2_min_) * m_count_ + m);
}

double GaborCoefficients::sum_squares() const {
  double s = 0.0;
  for (const cd& c : data_) s += std::norm(c);
  return s;
}

std::string GaborCoefficients::to_csv() const {
  csv::Table t({"k", "2m", "2l", "re", "im"});
  for (long l2 = l2_min_; l2 < l2_min_ + l2_count_; ++l2)
    for (long m = 0; m < m_count_; ++m) {
      const cd c = at(m, l2);
      t.add({csv::num(k_), csv::num(2 * m), csv::num(l2), csv::num(c.real()), csv::num(c.imag())});
    }
  return t.str();
}

namespace {

struct GaborLayout {
  long M;       // translations per period
  long l2_min;  // first doubled modulation index
  long l2_max;  // last (inclusive)
};

GaborLayout gabor_layout(const Grid& g, int k) {
  const double len = std::ldexp(1.0, k);
  if (len > g.L()) throw InvalidParameter("gabor: scale 2^k exceeds the period L");
  if (len < g.dx()) throw InvalidParameter("gabor: scale 2^k is finer than the grid spacing");
  GaborLayout lay{};
  lay.M = static_cast<long>(std::llround(g.L() / len));
  const double step = 0.5 / len;  // modulation step l/2 * 2^{-k}
  // band (l2*step, l2*step + 2*step) must meet [freq_min, freq_max)
  lay.l2_min = static_cast<long>(std::floor(g.freq_min() / step - 2.0)) + 1;
  lay.l2_max = static_cast<long>(std::ceil(g.freq_max() / step)) - 1;
  return lay;
}

// Grid frequency indices j strictly inside the band of packet l2, clipped to the box.
std::pair<long, long> band_indices(const Grid& g, int k, long l2) {
  const double len = std::ldexp(1.0, k);
  const double a = 0.5 * static_cast<double>(l2) / len;
  const double b = a + 1.0 / len;
  const long n = static_cast<long>(g.size());
  long j0 = static_cast<long>(std::floor(a * g.L())) + 1;
  long j1 = static_cast<long>(std::ceil(b * g.L())) - 1;
  j0 = std::max(j0, -n / 2);
  j1 = std::min(j1, n / 2 - 1);
  return {j0, j1};
}

}  // namespace

GaborCoefficients gabor_expand(const Window& w, const SampledFunction& f, int k) {
  const Grid& g = w.grid();
  if (!(f.grid == g)) throw InvalidInput("gabor_expand: function and window grids differ");
  const GaborLayout lay = gabor_layout(g, k);
  const Spectrum fh = dft(f);
  const double len = std::ldexp(1.0, k);
  const double amp = std::sqrt(len);
  const long M = lay.M;

  std::vector<cd> roots(static_cast<std::size_t>(M));
  for (long r = 0; r < M; ++r) roots[r] = std::polar(1.0, kTwoPi * static_cast<double>(r) / static_cast<double>(M));

  GaborCoefficients out(k, M, lay.l2_min, lay.l2_max - lay.l2_min + 1);
  std::vector<cd> weighted;
  std::vector<long> js;
  for (long l2 = lay.l2_min; l2 <= lay.l2_max; ++l2) {
    const double l = 0.5 * static_cast<double>(l2);
    const auto [j0, j1] = band_indices(g, k, l2);
    weighted.clear();
    js.clear();
    for (long j = j0; j <= j1; ++j) {
      const double xi = static_cast<double>(j) / g.L();
      const double gh = amp * w.phi_hat(len * xi - l);
      if (gh == 0.0) continue;
      weighted.push_back(fh.values[g.slot_of(j)] * gh);
      js.push_back(j);
    }
    for (long m = 0; m < M; ++m) {
      cd s = 0.0;
      for (std::size_t t = 0; t < js.size(); ++t) {
        long r = (m * js[t]) % M;
        if (r < 0) r += M;
        s += weighted[t] * roots[r];
      }
      const double sign = ((m * l2) % 2 == 0) ? 1.0 : -1.0;
      out.at(m, l2) = sign * s / g.L();
    }
  }
  return out;
}

SampledFunction gabor_reconstruct(const Window& w, const GaborCoefficients& coeffs) {
  const Grid& g = w.grid();
  const int k = coeffs.k();
  const GaborLayout lay = gabor_layout(g, k);
  if (lay.M != coeffs.m_count() || lay.l2_min != coeffs.l2_min() || lay.l2_max - lay.l2_min + 1 != coeffs.l2_count())
    throw InvalidInput("gabor_reconstruct: coefficients do not match this window and scale");
  const double len = std::ldexp(1.0, k);
  const double amp = std::sqrt(len);
  const long M = lay.M;

  std::vector<cd> roots(static_cast<std::size_t>(M));
  for (long r = 0; r < M; ++r) roots[r] = std::polar(1.0, -kTwoPi * static_cast<double>(r) / static_cast<double>(M));

  Spectrum out(g);
  std::vector<cd> signed_c(static_cast<std::size_t>(M));
  for (long l2 = lay.l2_min; l2 <= lay.l2_max; ++l2) {
    const double l = 0.5 * static_cast<double>(l2);
    for (long m = 0; m < M; ++m) {
      const double sign = ((m * l2) % 2 == 0) ? 1.0 : -1.0;
      signed_c[m] = sign * coeffs.at(m, l2);
    }
    const auto [j0, j1] = band_indices(g, k, l2);
    for (long j = j0; j <= j1; ++j) {
      const double xi = static_cast<double>(j) / g.L();
      const double gh = amp * w.phi_hat(len * xi - l);
      if (gh == 0.0) continue;
      cd s = 0.0;
      for (long m = 0; m < M; ++m) {
        long r = (m * j) % M;
        if (r < 0) r += M;
        s += signed_c[m] * roots[r];
      }
      out.values[g.slot_of(j)] += gh * s;
    }
  }
  return idft(out);
}

EtaSpec canonical_eta() {
  return {"bump", [](double u) {
            const double t = 2.0 * u;
            if (t <= -1.0 || t >= 1.0) return 0.0;
            return std::exp(1.0 - 1.0 / (1.0 - t * t));
          }};
}

Kernel::Kernel(const Grid& grid, EtaSpec eta) : grid_(grid), eta_(std::move(eta)), eta_samples_(grid), K_(grid) {
  if (grid.freq_max() < 1.0) throw InvalidParameter("kernel: frequency box must contain [-1, 1]");
  // eta must vanish outside [-1/2, 1/2]
  for (int i = 0; i <= 4000; ++i) {
    const double u = -2.0 + 4.0 * i / 4000.0;
    if (std::abs(u) > 0.5 && eta_.eta(u) != 0.0)
      throw InvalidParameter("kernel: eta is not supported in [-1/2, 1/2]");
  }
  quad_nodes_.resize(kEtaNodes + 1);
  quad_eta_.resize(kEtaNodes + 1);
  double integral = 0.0;
  for (int i = 0; i <= kEtaNodes; ++i) {
    quad_nodes_[i] = -0.5 + static_cast<double>(i) / kEtaNodes;
    quad_eta_[i] = eta_.eta(quad_nodes_[i]);
    integral += quad_eta_[i];
  }
  integral /= kEtaNodes;
  if (std::abs(integral) < 1e-14) throw InvalidParameter("kernel: eta must have nonzero integral");

  // Autocorrelation of eta on the node lattice: hat_table_[t] = K^(t/Q - 1).
  const int Q = kEtaNodes;
  hat_table_.assign(2 * Q + 1, 0.0);
  for (int shift = -Q; shift <= Q; ++shift) {
    double s = 0.0;
    for (int i = std::max(0, shift); i <= std::min(Q, Q + shift); ++i) s += quad_eta_[i] * quad_eta_[i - shift];
    hat_table_[shift + Q] = s / Q;
  }

  Spectrum es(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double v = eta_.eta(grid.frequency(i));
    eta_samples_.values[i] = v;
    es.values[i] = v;
  }
  const SampledFunction check = idft(es);
  for (std::size_t n = 0; n < grid.size(); ++n) K_.values[n] = std::norm(check.values[n]);
}

double Kernel::hat(double zeta) const {
  if (zeta <= -1.0 || zeta >= 1.0) return 0.0;
  const int Q = kEtaNodes;
  const double pos = (zeta + 1.0) * Q;
  const long base = static_cast<long>(std::floor(pos));
  const double t = pos - static_cast<double>(base);
  auto at = [&](long i) { return (i < 0 || i > 2 * Q) ? 0.0 : hat_table_[static_cast<std::size_t>(i)]; };
  // cubic Lagrange through base-1 .. base+2
  const double p0 = at(base - 1), p1 = at(base), p2 = at(base + 1), p3 = at(base + 2);
  const double l0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
  const double l1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
  const double l2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
  const double l3 = (t + 1.0) * t * (t - 1.0) / 6.0;
  return l0 * p0 + l1 * p1 + l2 * p2 + l3 * p3;
}

double Kernel::value(double y) const {
  // Trapezoid on every 8th node; eta is flat at +-1/2 so this is spectrally accurate.
  constexpr int stride = 8;
  cd s = 0.0;
  for (int i = 0; i <= kEtaNodes; i += stride) s += quad_eta_[i] * unit_phase(quad_nodes_[i] * y);
  s *= static_cast<double>(stride) / kEtaNodes;
  return std::norm(s);
}

Kernel build_kernel(const Grid& grid, EtaSpec eta) { return Kernel(grid, std::move(eta)); }

SparseSpectrum tile_packet_spectrum(const Window& w, const Tile& s) {
  const Grid& g = w.grid();
  if (!fits_in_grid(s, g)) throw InvalidParameter("tile packet: tile does not fit in the grid box");
  const int k = s.time.k;
  const double len = std::ldexp(1.0, k);
  const double amp = std::sqrt(len);
  const double l = static_cast<double>(s.freq.m);
  const long j0 = static_cast<long>(std::floor(s.freq.lo() * g.L())) + 1;
  const long j1 = static_cast<long>(std::ceil(s.freq.hi() * g.L())) - 1;
  SparseSpectrum out;
  for (long j = j0; j <= j1; ++j) {
    const double xi = static_cast<double>(j) / g.L();
    const double ph = w.phi_hat(len * xi - l);
    if (ph == 0.0) continue;
    out.slots.push_back(g.slot_of(j));
    out.freqs.push_back(xi);
    out.values.push_back(amp * ph * unit_phase(-static_cast<double>(s.time.m) * len * xi));
  }
  return out;
}

SampledFunction tile_packet(const Window& w, const Tile& s) {
  const SparseSpectrum sp = tile_packet_spectrum(w, s);
  Spectrum full(w.grid());
  for (std::size_t t = 0; t < sp.slots.size(); ++t) full.values[sp.slots[t]] = sp.values[t];
  return idft(full);
}

ModelFunction::ModelFunction(std::shared_ptr<const Window> w, std::shared_ptr<const Kernel> ker, const Tile& s)
    : w_(std::move(w)), ker_(std::move(ker)), tile_(s), spec_(tile_packet_spectrum(*w_, s)) {}

Interval ModelFunction::theta_support() const {
  const double len = tile_.freq.length();
  return {tile_.freq.lo() - len, tile_.freq.hi() + len};
}

Spectrum ModelFunction::spectrum_at_theta(double theta) const {
  const double scale = tile_.time.length();
  Spectrum out(grid());
  for (std::size_t t = 0; t < spec_.slots.size(); ++t)
    out.values[spec_.slots[t]] = spec_.values[t] * ker_->hat(scale * (theta - spec_.freqs[t]));
  return out;
}

SampledFunction ModelFunction::at_theta(double theta) const { return idft(spectrum_at_theta(theta)); }

cd ModelFunction::value(std::size_t x_index, double theta) const {
  const Grid& g = grid();
  const double scale = tile_.time.length();
  const long n = static_cast<long>(g.size());
  cd s = 0.0;
  for (std::size_t t = 0; t < spec_.slots.size(); ++t) {
    const long j = g.freq_index(spec_.slots[t]);
    long r = (j * static_cast<long>(x_index)) % n;
    if (r < 0) r += n;
    s += spec_.values[t] * ker_->hat(scale * (theta - spec_.freqs[t])) *
         std::polar(1.0, kTwoPi * static_cast<double>(r) / static_cast<double>(n));
  }
  return s / g.L();
}

std::vector<cd> ModelFunction::theta_row(std::size_t x_index) const {
  const Grid& g = grid();
  const double scale = tile_.time.length();
  const long n = static_cast<long>(g.size());
  std::vector<cd> phased(spec_.slots.size());
  for (std::size_t t = 0; t < spec_.slots.size(); ++t) {
    const long j = g.freq_index(spec_.slots[t]);
    long r = (j * static_cast<long>(x_index)) % n;
    if (r < 0) r += n;
    phased[t] = spec_.values[t] * std::polar(1.0, kTwoPi * static_cast<double>(r) / static_cast<double>(n)) / g.L();
  }
  std::vector<cd> row(g.size());
  const Interval sup = theta_support();
  const long j0 = static_cast<long>(std::floor(sup.lo * g.L())) + 1;
  const long j1 = static_cast<long>(std::ceil(sup.hi * g.L())) - 1;
  for (long j = std::max(j0, -n / 2); j <= std::min(j1, n / 2 - 1); ++j) {
    const double theta = static_cast<double>(j) / g.L();
    cd s = 0.0;
    for (std::size_t t = 0; t < phased.size(); ++t) s += phased[t] * ker_->hat(scale * (theta - spec_.freqs[t]));
    row[g.slot_of(j)] = s;
  }
  return row;
}

FrameContext FrameContext::make(const Grid& g, double smoothness) {
  FrameContext ctx;
  ctx.window = std::make_shared<const Window>(g, smoothness);
  ctx.kernel = std::make_shared<const Kernel>(g, canonical_eta());
  return ctx;
}

ModelFunction model_phi_s(const FrameContext& ctx, const Tile& s) { return ctx.model(s); }

}  // namespace rtt
