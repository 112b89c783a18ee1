#include <cmath>
#include <random>

#include "doctest.h"
#include "rtt/wavepacket_frame.hpp"

using namespace rtt;

namespace {

double periodic_distance(double x, double c, double L) {
  double d = std::fmod(std::abs(x - c), L);
  return std::min(d, L - d);
}

double rel_l2_error(const SampledFunction& a, const SampledFunction& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::norm(a[i] - b[i]);
    den += std::norm(b[i]);
  }
  return std::sqrt(num / den);
}

SampledFunction random_union(const Grid& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(0.0, g.L() - 2.0), len(0.1, 2.0);
  SampledFunction f(g);
  std::uniform_int_distribution<int> pieces(1, 4);
  const int np = pieces(rng);
  for (int p = 0; p < np; ++p) {
    const double a = pos(rng), b = a + len(rng);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (g.x(i) >= a && g.x(i) < b) f[i] = 1.0;
  }
  return f;
}

}  // namespace

TEST_CASE("window frame constant and support") {
  const Grid g(12, 16.0);
  const Window w = build_window(g);
  double dev = 0.0;
  for (int i = -4000; i <= 4000; ++i) {
    const double xi = i / 1000.0 + 0.000123;
    double s = 0.0;
    for (int l = -20; l <= 20; ++l) s += std::pow(w.phi_hat(xi - 0.5 * l), 2);
    dev = std::max(dev, std::abs(s - w.frame_constant()));
  }
  CHECK(dev <= 1e-8);

  const Spectrum ph = dft(w.phi());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double xi = g.frequency(i);
    if (xi <= 0.0 || xi >= 1.0) CHECK(std::abs(ph[i]) < 1e-12);
  }
  CHECK_THROWS_AS(build_window(Grid(6, 4.0)), InvalidParameter);
}

TEST_CASE("window decays like (1+|x|)^-4") {
  // envelope constant fitted on one period, verified on a four times longer one
  const auto envelope = [](const Grid& g) {
    const Window w = build_window(g);
    double c = 0.0;
    for (std::size_t n = 0; n < g.size(); ++n) {
      const double d = periodic_distance(g.x(n), 0.0, g.L());
      c = std::max(c, std::abs(w.phi()[n]) * std::pow(1.0 + d, 4));
    }
    return c;
  };
  const double c = envelope(Grid(12, 16.0));
  CHECK(c < 100.0);
  CHECK(envelope(Grid(14, 64.0)) <= c);
}

TEST_CASE("wave packets") {
  const Grid g(12, 16.0);
  const Window w = build_window(g);
  const SampledFunction p0 = wave_packet(w, 0, 0, 0);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(p0[i] - w.phi()[i]) < 1e-15);

  const double n0 = lp_norm(w.phi(), 2.0);
  for (int k : {-2, -1, 0, 1, 2})
    for (long m : {0L, 1L, 2L})
      for (long l2 : {-3L, 0L, 1L, 4L}) {
        const SampledFunction p = wave_packet(w, k, m, l2);
        CHECK(lp_norm(p, 2.0) == doctest::Approx(n0).epsilon(1e-12));
      }

  const Spectrum s = wave_packet_spectrum(w, 2, 1, 6);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double xi = g.frequency(i);
    if (xi < 0.75 || xi > 1.0) CHECK(std::abs(s[i]) < 1e-12);
  }
  const Spectrum s2 = dft(wave_packet(w, 2, 1, 6));
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double xi = g.frequency(i);
    if (xi < 0.75 || xi > 1.0) CHECK(std::abs(s2[i]) < 1e-12);
  }
  CHECK_THROWS_AS(wave_packet(w, 2, 4, 0), InvalidParameter);
  CHECK_THROWS_AS(wave_packet(w, 0, 0, 2 * 200), InvalidParameter);
}

TEST_CASE("gabor coefficients agree with grid inner products") {
  const Grid g(10, 16.0);
  const Window w = build_window(g);
  const auto f = SampledFunction::indicator(g, 3.0, 4.5);
  for (int k : {-1, 0, 1}) {
    const GaborCoefficients c = gabor_expand(w, f, k);
    for (long m : {0L, 3L, 5L})
      for (long l2 : {-5L, 0L, 3L}) {
        const cd direct = inner(f, wave_packet(w, k, m, l2));
        CHECK(std::abs(c.at(m, l2) - direct) < 1e-12);
      }
  }
}

TEST_CASE("gabor expansion of the empty set and zero coefficients") {
  const Grid g(10, 16.0);
  const Window w = build_window(g);
  const SampledFunction zero(g);
  const GaborCoefficients c = gabor_expand(w, zero, 0);
  for (const cd& v : c.raw()) CHECK(v == cd(0.0));
  const SampledFunction r = gabor_reconstruct(w, c);
  for (const cd& v : r.values) CHECK(v == cd(0.0));
}

TEST_CASE("gabor expansion is a tight frame and reconstructs indicators") {
  const Grid g(12, 16.0);
  const Window w = build_window(g);
  const auto f = SampledFunction::indicator(g, 0.0, 1.0);
  const SampledFunction r0 = gabor_reconstruct(w, gabor_expand(w, f, 0));
  CHECK(rel_l2_error(r0, f) <= 1e-6);
  const SampledFunction r2 = gabor_reconstruct(w, gabor_expand(w, f, 2));
  CHECK(rel_l2_error(r2, r0) <= 1e-6);

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 4; ++trial) {
    const SampledFunction F = random_union(g, rng);
    const double nf = lp_norm(F, 2.0);
    for (int k : {-2, 0, 2}) {
      const GaborCoefficients c = gabor_expand(w, F, k);
      CHECK(c.sum_squares() == doctest::Approx(w.frame_constant() * nf * nf).epsilon(1e-6));
    }
  }
}

TEST_CASE("gabor coefficients of an interval decay in m") {
  const auto envelope = [](const Grid& g) {
    const Window w = build_window(g);
    const auto f = SampledFunction::indicator(g, 0.0, 1.0);
    const GaborCoefficients c = gabor_expand(w, f, 0);
    double fit = 0.0;
    for (long l2 = c.l2_min(); l2 < c.l2_min() + c.l2_count(); ++l2)
      for (long m = 0; m < c.m_count(); ++m) {
        const double d = periodic_distance(static_cast<double>(m), 0.0, g.L());
        fit = std::max(fit, std::abs(c.at(m, l2)) * std::pow(1.0 + d, 3));
      }
    return fit;
  };
  const double c = envelope(Grid(10, 16.0));
  CHECK(c < 100.0);
  CHECK(envelope(Grid(12, 64.0)) <= c * 1.001);
}

TEST_CASE("kernel") {
  // the grid kernel is periodic; a long period keeps the wrapped tails negligible
  const Grid g(14, 64.0);
  const Kernel ker = build_kernel(g);
  for (const cd& v : ker.K().values) {
    CHECK(std::abs(v.imag()) < 1e-15);
    CHECK(v.real() >= -1e-12);
  }
  CHECK(ker.K()[0].real() > 0.0);
  const Spectrum kh = dft(ker.K());
  for (std::size_t i = 0; i < g.size(); ++i)
    if (std::abs(g.frequency(i)) > 1.0) CHECK(std::abs(kh[i]) < 1e-12);
  // K^(0) two ways: grid sum of K and int eta^2 over frequency
  double eta_sq = 0.0;
  const int q = 20000;
  for (int i = 0; i <= q; ++i) {
    const double u = -0.5 + static_cast<double>(i) / q;
    eta_sq += std::pow(ker.eta().eta(u), 2);
  }
  eta_sq /= q;
  CHECK(std::abs(kh[0].real() - eta_sq) < 1e-8);
  CHECK(std::abs(ker.integral() - eta_sq) < 1e-8);
  // K(y) = |int eta(u) e^{2 pi i u y} du|^2 by an independent fine quadrature
  for (double y : {0.0, 0.375, 1.75}) {
    cd acc = 0.0;
    for (int i = 0; i <= q; ++i) {
      const double u = -0.5 + static_cast<double>(i) / q;
      acc += ker.eta().eta(u) * std::polar(1.0, kTwoPi * u * y);
    }
    acc /= q;
    CHECK(std::abs(ker.value(y) - std::norm(acc)) < 1e-10);
    // the periodic grid kernel agrees up to its wrapped tails
    CHECK(ker.value(y) == doctest::Approx(ker.K()[g.index_of(y)].real()).epsilon(1e-5));
  }
  EtaSpec wide{"wide", [](double u) { return std::abs(u) < 0.7 ? 1.0 - u * u : 0.0; }};
  CHECK_THROWS_AS(build_kernel(g, wide), InvalidParameter);
  EtaSpec odd{"odd", [](double u) { return std::abs(u) < 0.5 ? std::sin(kTwoPi * u) : 0.0; }};
  CHECK_THROWS_AS(build_kernel(g, odd), InvalidParameter);
}

TEST_CASE("kernel transform interpolation matches direct quadrature") {
  const Grid g(10, 16.0);
  const Kernel ker = build_kernel(g);
  for (double z : {-0.9, -0.3337, 0.0, 0.123456, 0.77}) {
    double s = 0.0;
    const int q = 40000;
    for (int i = 0; i <= q; ++i) {
      const double u = -0.5 + static_cast<double>(i) / q;
      s += ker.eta().eta(u) * ker.eta().eta(u - z);
    }
    s /= q;
    CHECK(std::abs(ker.hat(z) - s) < 1e-9);
  }
  CHECK(ker.hat(1.0) == 0.0);
  CHECK(ker.hat(-1.5) == 0.0);
}

TEST_CASE("model functions: theta support, x decay, and theta integral") {
  const Grid g(11, 16.0);
  const FrameContext ctx = FrameContext::make(g);
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> kd(-2, 1);

  struct Sample {
    double ratio;
  };
  double fit = 0.0;
  std::vector<std::pair<Tile, std::vector<double>>> envelopes;
  for (int t = 0; t < 20; ++t) {
    const int k = kd(rng);
    const double len = std::ldexp(1.0, k);
    std::uniform_int_distribution<long> md(0, static_cast<long>(g.L() / len) - 1);
    std::uniform_int_distribution<long> fd(static_cast<long>(-8 * len), static_cast<long>(8 * len) - 1);
    const Tile s = Tile::make(k, md(rng), fd(rng));
    const ModelFunction phi = ctx.model(s);

    const Interval sup = phi.theta_support();
    // theta outside the enlarged interval carries no mass
    for (double th : {sup.lo - 0.01, sup.hi + 0.01, sup.lo - 1.0})
      CHECK(lp_norm(phi.at_theta(th), 2.0) < 1e-10);

    std::vector<double> ratios(g.size(), 0.0);
    for (double frac : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      const double th = sup.lo + frac * sup.length();
      const SampledFunction v = phi.at_theta(th);
      for (std::size_t n = 0; n < g.size(); ++n) {
        const double d = periodic_distance(g.x(n), s.time.center(), g.L());
        const double chi = 1.0 / (1.0 + d / len);
        ratios[n] = std::max(ratios[n], std::abs(v[n]) * std::sqrt(len) / std::pow(chi, 4));
      }
    }
    for (std::size_t n = 0; n < g.size(); ++n) {
      const double d = periodic_distance(g.x(n), s.time.center(), g.L());
      if (d <= 2.0 * len) fit = std::max(fit, ratios[n]);
    }
    envelopes.emplace_back(s, std::move(ratios));
  }
  // one constant, fitted near the tiles, bounds every tile everywhere
  for (const auto& [s, ratios] : envelopes)
    for (double r : ratios) CHECK(r <= fit * 1.0001);
}

TEST_CASE("theta integral of a model function equals 2^-k K(0) times the packet") {
  const Grid g(10, 16.0);
  const FrameContext ctx = FrameContext::make(g);
  const Tile s = Tile::make(0, 5, 2);
  const ModelFunction phi = ctx.model(s);
  const SampledFunction packet = tile_packet(*ctx.window, s);
  const Interval sup = phi.theta_support();
  const int q = 3000;
  for (std::size_t n : {std::size_t{5 * 64 + 10}, std::size_t{5 * 64 + 40}, std::size_t{7 * 64}}) {
    cd integral = 0.0;
    for (int i = 0; i <= q; ++i) {
      const double th = sup.lo + sup.length() * i / q;
      integral += phi.value(n, th) * ((i == 0 || i == q) ? 0.5 : 1.0);
    }
    integral *= sup.length() / q;
    const cd expected = packet[n] * ctx.kernel->value(0.0) / s.time.length();
    CHECK(std::abs(integral - expected) < 1e-8);
  }
  // value() and at_theta() agree
  const SampledFunction row = phi.at_theta(2.3);
  CHECK(std::abs(row[333] - phi.value(333, 2.3)) < 1e-13);
  const auto trow = phi.theta_row(333);
  const std::size_t slot = g.slot_of(static_cast<long>(std::llround(2.3125 * g.L())));
  CHECK(std::abs(trow[slot] - phi.value(333, 2.3125)) < 1e-13);
}
