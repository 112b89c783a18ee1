#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rtt/grid_fourier.hpp"
#include "rtt/wavepacket_frame.hpp"

namespace rtt {

/// Point of [0,1)^2 in 64-bit fixed point (value = raw / 2^64); one-dimensional
/// systems use the first coordinate only.
struct TorusPoint {
  std::array<std::uint64_t, 2> raw{0, 0};
  double coord(int i) const;
  static TorusPoint from(double u, double v = 0.0);
};

std::uint64_t to_fixed(double u);
double from_fixed(std::uint64_t r);

enum class SystemKind { CircleRotation, TorusProduct, IntervalExchange };

/// Invertible measure-preserving map on [0,1) or [0,1)^2.
class DynamicalSystem {
 public:
  static DynamicalSystem rotation(double alpha);
  static DynamicalSystem torus_product(double alpha, double beta);
  /// Lengths (positive, normalized to sum 1) and permutation: interval i lands in slot perm[i].
  static DynamicalSystem interval_exchange(const std::vector<double>& lengths, const std::vector<int>& perm);

  SystemKind kind() const { return kind_; }
  int dimension() const { return kind_ == SystemKind::TorusProduct ? 2 : 1; }
  bool invertible() const { return true; }
  std::string describe() const;

  TorusPoint step(const TorusPoint& p) const;
  TorusPoint inverse_step(const TorusPoint& p) const;
  TorusPoint iterate(TorusPoint p, std::uint64_t n) const;

 private:
  SystemKind kind_ = SystemKind::CircleRotation;
  std::array<std::uint64_t, 2> shift_{0, 0};
  std::vector<std::uint64_t> src_start_, dst_start_;  // interval exchange, fixed point
};

struct ChiSquareReport {
  double statistic = 0.0;
  double threshold = 0.0;
  int bins = 0;
  bool passed = false;
};

/// Push `samples` uniform points through `steps` iterates and compare the histogram
/// (bins per axis) with the uniform one; threshold is the 0.999 chi-square quantile.
ChiSquareReport measure_preservation_check(const DynamicalSystem& s, int samples, int bins, int steps,
                                           std::uint64_t seed);

using Observable = std::function<cd(const TorusPoint&)>;

/// sum_j c_j e^{2 pi i j u} on the first coordinate, j = -deg..deg (index j + deg).
struct TrigPolynomial {
  std::vector<cd> coeffs;
  cd operator()(double u) const;
  cd mean() const { return coeffs[coeffs.size() / 2]; }
  Observable observable(int axis = 0) const;
};

struct AverageSeries {
  std::vector<std::uint64_t> N;
  std::vector<cd> A;
  /// max |A_M - A_{N_i}| over N_i < M <= N_{i+1}, one entry per consecutive pair.
  std::vector<double> block_oscillation;
  std::string descriptor;
};

/// A_N = (1/N) sum_{n=1}^N f(tau^n x) g(sigma^n y) at each N of the increasing list,
/// with compensated summation.
AverageSeries return_times_average(const Observable& f, const DynamicalSystem& tau, const TorusPoint& x,
                                   const Observable& g, const DynamicalSystem& sigma, const TorusPoint& y,
                                   const std::vector<std::uint64_t>& N_list);

/// (1/N) sum_{n=1}^N f(tau^n x), a separate code path.
AverageSeries birkhoff_average(const Observable& f, const DynamicalSystem& tau, const TorusPoint& x,
                               const std::vector<std::uint64_t>& N_list);

std::vector<std::uint64_t> dyadic_list(int k_min, int k_max);

struct ConvergenceDiagnostic {
  double oscillation = 0.0;  // max |A_{N_i} - A_{N_j}| over the list
  double vr = 0.0;           // V^r norm of the series
};
ConvergenceDiagnostic convergence_diagnostic(const AverageSeries& s, double r);

std::string series_csv(const AverageSeries& s, double r);

using KernelFn = std::function<double(double)>;

/// Trapezoid box: 1/2 on (-1, 1), 1/4 at +-1, 0 outside.
double box_kernel(double u);

/// (1/s) | dx sum_y f(x + y) g(z + y) K(y / s) |, s = 2^k, periodic grid, y over one period.
double averaging_R(const SampledFunction& f, const SampledFunction& g, const KernelFn& K, std::size_t x_index,
                   std::size_t z_index, int k);
/// sup over k in [k_min, k_max].
double averaging_R_max(const SampledFunction& f, const SampledFunction& g, const KernelFn& K, std::size_t x_index,
                       std::size_t z_index, int k_min, int k_max);

/// ||R f||_{L^p} / ||f||_p with the sup over g restricted to the normalized family,
/// the z-norm in L^q on the grid and x on every x_stride-th sample.
double R_proxy_ratio(const SampledFunction& f, const std::vector<SampledFunction>& g_family, const KernelFn& K,
                     double p, double q, int k_min, int k_max, std::size_t x_stride);

/// max over t in t_list (positive multiples of dx) of |(1/t) dx sum_y f(x + y) g(x - y) box(y / t)|.
double bilinear_max(const SampledFunction& f, const SampledFunction& g, std::size_t x_index,
                    const std::vector<double>& t_list);
std::vector<double> dyadic_t_grid(const Grid& grid, double t_min, double t_max);

/// sup over t in t_list, t > 1, of |(1/2t) int_t^{t+1} f(x + y) g(x - y) dy| (trapezoid on the grid).
double tail_T1(const SampledFunction& f, const SampledFunction& g, std::size_t x_index,
               const std::vector<double>& t_list);
/// max_{1 <= n <= n_max} |f(tau^n x) g(sigma^n y)| / n.
double tail_T2(const Observable& f, const DynamicalSystem& tau, const TorusPoint& x, const Observable& g,
               const DynamicalSystem& sigma, const TorusPoint& y, std::uint64_t n_max);

/// c_h max(|u - u0|, h)^{-a} on [0,1), with c_h chosen so that the L^1 norm is 1.
struct Spike {
  double u0, h, a;
  double c;
  Spike(double u0, double h, double a = 0.9);
  double operator()(double u) const;
};

struct TailsRow {
  double h;
  double T1, T2;  // maxima over the sample points; the first sample pair maps onto the spike centres
};

struct TailsConfig {
  std::vector<double> sharpness{1e-1, 1e-2, 1e-3, 1e-4};
  double alpha = 0.6180339887498949;
  double beta = 0.4142135623730951;
  double u0 = 0.3, v0 = 0.7;
  int samples = 64;
  std::uint64_t n_max = 10000;
  std::uint64_t seed = 1;
  int J = 12;  // grid on [0, 1) for T1, periodized
};

std::vector<TailsRow> tails_sweep(const TailsConfig& cfg);
std::string tails_csv(const std::vector<TailsRow>& rows);

/// Single-scale phase-randomized model: with c_{m,l}(f) the scale-0 Gabor coefficients,
/// A_l(x) = sum_m |c_{m,l}(f)|^2 |phi(x - m)|^2 and B_l likewise for g, the mean square
/// over random signs of sum_s eps_s <f, phi_s> phi_s(x) <g, phi_s> phi_s(z) is
/// sum_l A_l(x) B_l(z).  Output is || || (sum_l A_l B_l)^{1/2} ||_{L^q_z} ||_{L^p_x}.
double single_scale_model_norm(const SampledFunction& f, const SampledFunction& g, const Window& w, double p,
                               double q, std::size_t stride);

struct IndicatorPair {
  double f_lo, f_len, g_lo, g_len;
  double ratio;  // output / (|F|^{1/p} |G|^{1/q})
};

struct BlowupRow {
  int J;
  double proxy;
  double growth;  // proxy(J) / proxy(previous J), NaN for the first
  IndicatorPair best;
};

struct BlowupConfig {
  double p = 1.25, q = 1.25;
  std::vector<int> J_list{8, 10, 12};
  double L = 8.0;
};

/// Restricted-norm proxy of the single-scale model over indicator pairs at each refinement.
std::vector<BlowupRow> single_scale_blowup(const BlowupConfig& cfg);
IndicatorPair best_indicator_pair(const Grid& g, const Window& w, double p, double q);
std::string blowup_csv(const std::vector<BlowupRow>& rows, double p, double q);

}  // namespace rtt
