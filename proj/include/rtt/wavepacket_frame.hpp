#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "rtt/dyadic_geometry.hpp"
#include "rtt/grid_fourier.hpp"

namespace rtt {

/// Smooth transition: 0 for t <= 0, 1 for t >= 1, and h(t) + h(1 - t) = 1.
/// `sharpness` s enters as exp(-s/t); larger s steepens the middle.
double smooth_step(double t, double sharpness);

/// Window phi with phi^ = sqrt(b), b a smooth bump on [0, 1] whose half-integer
/// translates sum to one, so sum_l |phi^(xi - l/2)|^2 = C = 1.
class Window {
 public:
  Window(const Grid& grid, double smoothness);

  const Grid& grid() const { return grid_; }
  double smoothness() const { return smoothness_; }
  double frame_constant() const { return 1.0; }
  const SampledFunction& phi() const { return phi_; }

  double bump(double xi) const;
  double phi_hat(double xi) const;

 private:
  Grid grid_;
  double smoothness_;
  SampledFunction phi_;
};

Window build_window(const Grid& grid, double smoothness = 1.0);

/// Spectrum of phi_{k,m,l}: 2^{k/2} phi^(2^k xi - l) e^{-2 pi i m 2^k xi} e^{2 pi i m l},
/// with l = l2 / 2.
Spectrum wave_packet_spectrum(const Window& w, int k, long m, long l2);
/// phi_{k,m,l}(x) = 2^{-k/2} phi(2^{-k} x - m) e^{2 pi i 2^{-k} x l}, l = l2 / 2.
SampledFunction wave_packet(const Window& w, int k, long m, long l2);

/// <f, phi_{k,m,l2/2}> for 0 <= m < L/2^k and every l2 whose packet band meets
/// the frequency box.
class GaborCoefficients {
 public:
  GaborCoefficients(int k, long m_count, long l2_min, long l2_count);

  int k() const { return k_; }
  long m_count() const { return m_count_; }
  long l2_min() const { return l2_min_; }
  long l2_count() const { return l2_count_; }

  cd& at(long m, long l2) { return data_[index(m, l2)]; }
  const cd& at(long m, long l2) const { return data_[index(m, l2)]; }
  const std::vector<cd>& raw() const { return data_; }

  double sum_squares() const;
  /// CSV rows: k, 2m, 2l, re, im.
  std::string to_csv() const;

 private:
  std::size_t index(long m, long l2) const;

  int k_;
  long m_count_;
  long l2_min_;
  long l2_count_;
  std::vector<cd> data_;
};

GaborCoefficients gabor_expand(const Window& w, const SampledFunction& f, int k);
SampledFunction gabor_reconstruct(const Window& w, const GaborCoefficients& coeffs);

/// Real cutoff eta supported in [-1/2, 1/2] with nonzero integral.
struct EtaSpec {
  std::string name;
  std::function<double(double)> eta;
};

EtaSpec canonical_eta();

/// K = |inverse transform of eta|^2, so K^ = eta * eta~ is supported in [-1, 1].
class Kernel {
 public:
  Kernel(const Grid& grid, EtaSpec eta);

  const SampledFunction& K() const { return K_; }
  const SampledFunction& eta_samples() const { return eta_samples_; }
  const EtaSpec& eta() const { return eta_; }

  /// K^(zeta) = int eta(u) eta(u - zeta) du, tabulated on [-1, 1].
  double hat(double zeta) const;
  /// K(y) by quadrature of the inverse transform of eta.
  double value(double y) const;
  /// int K = K^(0) = int eta^2.
  double integral() const { return hat(0.0); }

 private:
  Grid grid_;
  EtaSpec eta_;
  SampledFunction eta_samples_;
  SampledFunction K_;
  std::vector<double> hat_table_;
  std::vector<double> quad_nodes_;
  std::vector<double> quad_eta_;
};

Kernel build_kernel(const Grid& grid, EtaSpec eta = canonical_eta());

/// Sparse spectrum of the tile packet phi_s (frequency support omega_s).
struct SparseSpectrum {
  std::vector<std::size_t> slots;
  std::vector<double> freqs;
  std::vector<cd> values;
};

SparseSpectrum tile_packet_spectrum(const Window& w, const Tile& s);
SampledFunction tile_packet(const Window& w, const Tile& s);

/// phi_s(x, theta) = int phi_s^(xi) K^(2^k (theta - xi)) e^{2 pi i xi x} d xi,
/// the Fourier transform in y of phi_s(x + y) 2^{-k} K(y / 2^k).
class ModelFunction {
 public:
  ModelFunction(std::shared_ptr<const Window> w, std::shared_ptr<const Kernel> ker, const Tile& s);

  const Tile& tile() const { return tile_; }
  const Grid& grid() const { return w_->grid(); }
  /// omega_s enlarged by 2^{-k} on both sides.
  Interval theta_support() const;
  const SparseSpectrum& spectrum() const { return spec_; }

  /// x -> phi_s(x, theta) on the whole grid.
  SampledFunction at_theta(double theta) const;
  /// Spectrum in x of phi_s(., theta).
  Spectrum spectrum_at_theta(double theta) const;
  cd value(std::size_t x_index, double theta) const;
  /// theta -> phi_s(x_n, theta) at each grid frequency (slot order).
  std::vector<cd> theta_row(std::size_t x_index) const;

 private:
  std::shared_ptr<const Window> w_;
  std::shared_ptr<const Kernel> ker_;
  Tile tile_;
  SparseSpectrum spec_;
};

/// Shared frame context used by the tree and exceptional-set modules.
struct FrameContext {
  std::shared_ptr<const Window> window;
  std::shared_ptr<const Kernel> kernel;

  static FrameContext make(const Grid& g, double smoothness = 1.0);
  const Grid& grid() const { return window->grid(); }
  ModelFunction model(const Tile& s) const { return ModelFunction(window, kernel, s); }
};

ModelFunction model_phi_s(const FrameContext& ctx, const Tile& s);

}  // namespace rtt
