#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rtt {

using cd = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Raised when a numeric parameter is outside the documented range.
class InvalidParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when structured input (tile sets, coefficient maps) violates a precondition.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Uniform periodic grid on [0, L) with N = 2^J samples.
///
/// Sample n sits at x_n = n*dx.  Frequencies are j/L for -N/2 <= j < N/2 and
/// are stored in FFT order: slot i holds j = i for i < N/2 and j = i - N otherwise.
class Grid {
 public:
  Grid(int J, double L);

  int J() const { return J_; }
  double L() const { return L_; }
  double dx() const { return dx_; }
  std::size_t size() const { return n_; }

  double x(std::size_t n) const { return static_cast<double>(n) * dx_; }
  /// Signed frequency index j stored at slot i.
  long freq_index(std::size_t i) const;
  double frequency(std::size_t i) const { return static_cast<double>(freq_index(i)) / L_; }
  /// Slot holding signed frequency index j (taken modulo N).
  std::size_t slot_of(long j) const;
  /// Half-open frequency box [-N/(2L), N/(2L)).
  double freq_min() const { return -0.5 / dx_; }
  double freq_max() const { return 0.5 / dx_; }
  double df() const { return 1.0 / L_; }

  /// Nearest sample index to x, clamped into [0, N).
  std::size_t index_of(double x) const;

  bool operator==(const Grid& o) const { return J_ == o.J_ && L_ == o.L_; }

 private:
  int J_;
  double L_;
  double dx_;
  std::size_t n_;
};

/// Complex samples of a function on a Grid.
struct SampledFunction {
  Grid grid;
  std::vector<cd> values;

  explicit SampledFunction(const Grid& g) : grid(g), values(g.size()) {}
  SampledFunction(const Grid& g, std::vector<cd> v);

  static SampledFunction from(const Grid& g, const std::function<cd(double)>& fn);
  static SampledFunction indicator(const Grid& g, double a, double b);

  std::size_t size() const { return values.size(); }
  cd& operator[](std::size_t i) { return values[i]; }
  const cd& operator[](std::size_t i) const { return values[i]; }
};

/// Continuum-normalized transform samples f^(xi_j), FFT slot order.
struct Spectrum {
  Grid grid;
  std::vector<cd> values;

  explicit Spectrum(const Grid& g) : grid(g), values(g.size()) {}
  Spectrum(const Grid& g, std::vector<cd> v);

  std::size_t size() const { return values.size(); }
  cd& operator[](std::size_t i) { return values[i]; }
  const cd& operator[](std::size_t i) const { return values[i]; }
};

/// f^(xi_j) = dx * sum_n f(x_n) exp(-2 pi i xi_j x_n).
Spectrum dft(const SampledFunction& f);
/// f(x_n) = (1/L) * sum_j f^(xi_j) exp(2 pi i xi_j x_n).
SampledFunction idft(const Spectrum& fh);

/// T_m f with multiplier samples m(xi_j) in slot order.
SampledFunction apply_multiplier(const Spectrum& fh, std::span<const cd> multiplier);
SampledFunction apply_multiplier(const Spectrum& fh, const std::function<cd(double)>& multiplier);

/// (sum |f|^p dx)^(1/p); p = infinity gives max |f|.
double lp_norm(const SampledFunction& f, double p);
double lp_norm(std::span<const cd> values, double dx, double p);
double lp_norm(std::span<const double> values, double dx, double p);

/// Uncentered Hardy-Littlewood maximal function over grid intervals [a, b) with
/// 0 <= a <= n < b <= N; intervals do not wrap.
std::vector<double> hl_maximal(const SampledFunction& f);
std::vector<double> hl_maximal(std::span<const double> abs_values);

/// Grid inner product dx * sum f conj(g).
cd inner(const SampledFunction& f, const SampledFunction& g);

}  // namespace rtt
