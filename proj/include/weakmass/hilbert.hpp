#pragma once

// State representation: the internal qubit, external wavefunctions on a pair
// of conjugate 1D grids, Gaussian packets and observable expectations.
//
// Units: hbar = m = 1 throughout. A position grid with spacing dx is paired
// with a momentum grid of spacing dp = 2 pi / (n dx), both centred on zero:
// value(i) = (i - n/2) * spacing.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "weakmass/errors.hpp"
#include "weakmass/fft.hpp"
#include "weakmass/format.hpp"

namespace weakmass {

using complex = std::complex<double>;
using namespace std::complex_literals;

// Two-level internal state alpha|g> + beta|e>, always normalized.
class QubitState {
 public:
  QubitState(complex amp_g, complex amp_e) {
    const double norm = std::sqrt(std::norm(amp_g) + std::norm(amp_e));
    if (!(norm > 0.0) || !std::isfinite(norm)) throw DomainError("qubit state has zero or non-finite norm");
    amp_g_ = amp_g / norm;
    amp_e_ = amp_e / norm;
  }

  static QubitState ground() { return {1.0, 0.0}; }
  static QubitState excited() { return {0.0, 1.0}; }

  complex amp_g() const { return amp_g_; }
  complex amp_e() const { return amp_e_; }

 private:
  complex amp_g_;
  complex amp_e_;
};

enum class AxisKind { position, momentum };

inline const char* to_string(AxisKind kind) {
  return kind == AxisKind::position ? "position" : "momentum";
}

class Grid1D {
 public:
  Grid1D(std::size_t n_points, double spacing, AxisKind axis)
      : n_points_(n_points), spacing_(spacing), axis_(axis) {
    if (n_points < 16 || (n_points & (n_points - 1)) != 0) {
      throw GridError("n_points must be a power of two >= 16, got " + std::to_string(n_points));
    }
    if (!(spacing > 0.0) || !std::isfinite(spacing)) throw GridError("spacing must be positive");
  }

  static Grid1D position(std::size_t n_points, double spacing) {
    return {n_points, spacing, AxisKind::position};
  }
  static Grid1D momentum(std::size_t n_points, double spacing) {
    return {n_points, spacing, AxisKind::momentum};
  }

  std::size_t n_points() const { return n_points_; }
  double spacing() const { return spacing_; }
  double extent() const { return spacing_ * static_cast<double>(n_points_); }
  AxisKind axis() const { return axis_; }

  double value(std::size_t i) const {
    return (static_cast<double>(i) - static_cast<double>(n_points_ / 2)) * spacing_;
  }
  double min_value() const { return value(0); }
  double max_value() const { return value(n_points_ - 1); }

  // The grid of the other representation: dp * dx = 2 pi / n.
  Grid1D conjugate() const {
    const double dual = 2.0 * std::numbers::pi / (spacing_ * static_cast<double>(n_points_));
    return {n_points_, dual, axis_ == AxisKind::position ? AxisKind::momentum : AxisKind::position};
  }

  friend bool operator==(const Grid1D&, const Grid1D&) = default;

 private:
  std::size_t n_points_;
  double spacing_;
  AxisKind axis_;
};

class WavePacket {
 public:
  WavePacket(Grid1D grid, std::vector<complex> amplitudes) : grid_(grid), amplitudes_(std::move(amplitudes)) {
    if (amplitudes_.size() != grid_.n_points()) throw GridError("amplitude count does not match grid");
  }

  static WavePacket zero(const Grid1D& grid) { return {grid, std::vector<complex>(grid.n_points())}; }

  const Grid1D& grid() const { return grid_; }
  std::span<const complex> amplitudes() const { return amplitudes_; }
  complex operator[](std::size_t i) const { return amplitudes_[i]; }

  double norm2() const {
    double sum = 0.0;
    for (const auto& a : amplitudes_) sum += std::norm(a);
    return sum * grid_.spacing();
  }

  WavePacket scaled(complex factor) const {
    auto out = amplitudes_;
    for (auto& a : out) a *= factor;
    return {grid_, std::move(out)};
  }

  WavePacket normalized() const {
    const double n2 = norm2();
    if (!(n2 > 0.0)) throw DomainError("cannot normalize a zero packet");
    return scaled(1.0 / std::sqrt(n2));
  }

  // Pointwise multiplication by f(grid value).
  template <typename F>
  WavePacket pointwise(F&& f) const {
    auto out = amplitudes_;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= f(grid_.value(i));
    return {grid_, std::move(out)};
  }

 private:
  Grid1D grid_;
  std::vector<complex> amplitudes_;
};

inline void require_same_grid(const WavePacket& a, const WavePacket& b) {
  if (!(a.grid() == b.grid())) throw GridError("packets live on different grids");
}

inline WavePacket operator+(const WavePacket& a, const WavePacket& b) {
  require_same_grid(a, b);
  std::vector<complex> out(a.amplitudes().begin(), a.amplitudes().end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return {a.grid(), std::move(out)};
}

inline WavePacket operator-(const WavePacket& a, const WavePacket& b) { return a + b.scaled(-1.0); }

// <a|b> with the grid measure.
inline complex inner_product(const WavePacket& a, const WavePacket& b) {
  require_same_grid(a, b);
  complex sum = 0.0;
  for (std::size_t i = 0; i < a.amplitudes().size(); ++i) sum += std::conj(a[i]) * b[i];
  return sum * a.grid().spacing();
}

inline double l2_distance(const WavePacket& a, const WavePacket& b) { return std::sqrt((a - b).norm2()); }

// Internal-resolved external state: comp_g pairs with |g>, comp_e with |e>.
class JointState {
 public:
  JointState(WavePacket comp_g, WavePacket comp_e) : comp_g_(std::move(comp_g)), comp_e_(std::move(comp_e)) {
    require_same_grid(comp_g_, comp_e_);
  }

  static JointState product(const QubitState& internal, const WavePacket& external) {
    return {external.scaled(internal.amp_g()), external.scaled(internal.amp_e())};
  }

  const WavePacket& comp_g() const { return comp_g_; }
  const WavePacket& comp_e() const { return comp_e_; }
  const Grid1D& grid() const { return comp_g_.grid(); }
  double norm2() const { return comp_g_.norm2() + comp_e_.norm2(); }

 private:
  WavePacket comp_g_;
  WavePacket comp_e_;
};

inline double l2_distance(const JointState& a, const JointState& b) {
  const double dg = l2_distance(a.comp_g(), b.comp_g());
  const double de = l2_distance(a.comp_e(), b.comp_e());
  return std::sqrt(dg * dg + de * de);
}

// Unitary change of representation. With centred grids and n divisible by 4
// the continuous transform phi(p) = (2 pi)^{-1/2} int psi(x) e^{-ipx} dx maps to
// phi_k = dx/sqrt(2 pi) (-1)^k sum_j (-1)^j psi_j e^{-2 pi i jk/n}.
inline WavePacket to_momentum(const WavePacket& packet) {
  const Grid1D& grid = packet.grid();
  if (grid.axis() != AxisKind::position) throw GridError("to_momentum expects a position-space packet");
  const std::size_t n = grid.n_points();
  std::vector<complex> work(packet.amplitudes().begin(), packet.amplitudes().end());
  for (std::size_t j = 1; j < n; j += 2) work[j] = -work[j];
  auto out = detail::dft(work, FFTW_FORWARD);
  const double scale = grid.spacing() / std::sqrt(2.0 * std::numbers::pi);
  for (std::size_t k = 0; k < n; ++k) out[k] *= (k % 2 == 0 ? scale : -scale);
  return {grid.conjugate(), std::move(out)};
}

inline WavePacket to_position(const WavePacket& packet) {
  const Grid1D& grid = packet.grid();
  if (grid.axis() != AxisKind::momentum) throw GridError("to_position expects a momentum-space packet");
  const std::size_t n = grid.n_points();
  std::vector<complex> work(packet.amplitudes().begin(), packet.amplitudes().end());
  for (std::size_t k = 1; k < n; k += 2) work[k] = -work[k];
  auto out = detail::dft(work, FFTW_BACKWARD);
  const double scale = grid.spacing() / std::sqrt(2.0 * std::numbers::pi);
  for (std::size_t j = 0; j < n; ++j) out[j] *= (j % 2 == 0 ? scale : -scale);
  return {grid.conjugate(), std::move(out)};
}

inline WavePacket in_momentum(const WavePacket& packet) {
  return packet.grid().axis() == AxisKind::momentum ? packet : to_momentum(packet);
}
inline WavePacket in_position(const WavePacket& packet) {
  return packet.grid().axis() == AxisKind::position ? packet : to_position(packet);
}
inline JointState in_momentum(const JointState& s) { return {in_momentum(s.comp_g()), in_momentum(s.comp_e())}; }
inline JointState in_position(const JointState& s) { return {in_position(s.comp_g()), in_position(s.comp_e())}; }

// Weight of |psi|^2 lying in the outer `fraction` of the grid on either side.
inline double edge_weight(const WavePacket& packet, double fraction = 1.0 / 32.0) {
  const std::size_t n = packet.grid().n_points();
  const auto band = std::max<std::size_t>(1, static_cast<std::size_t>(fraction * static_cast<double>(n)));
  double sum = 0.0;
  for (std::size_t i = 0; i < band; ++i) sum += std::norm(packet[i]) + std::norm(packet[n - 1 - i]);
  return sum * packet.grid().spacing();
}

inline constexpr double kClipTolerance = 1e-8;

// Minimum-uncertainty Gaussian with position width delta (momentum width
// sigma = 1/(2 delta)), centred at (center_x, center_p). Works on either axis.
inline WavePacket make_gaussian(const Grid1D& grid, double width_delta, double center_x, double center_p) {
  if (!(width_delta > 0.0)) throw DomainError("Gaussian width must be positive");
  const bool on_position = grid.axis() == AxisKind::position;
  const double width = on_position ? width_delta : 1.0 / (2.0 * width_delta);
  const double center = on_position ? center_x : center_p;
  if (!(grid.spacing() < width / 4.0)) throw GridError("grid too coarse for Gaussian width");
  if (!(grid.extent() > 8.0 * width)) throw GridError("grid extent smaller than 8 Gaussian widths");

  // Fraction of |psi|^2 (variance width^2) outside [min, max] on this axis and on the conjugate one.
  auto tail = [](double lo, double hi, double mu, double sd) {
    return 0.5 * std::erfc((hi - mu) / (std::sqrt(2.0) * sd)) + 0.5 * std::erfc((mu - lo) / (std::sqrt(2.0) * sd));
  };
  const Grid1D dual = grid.conjugate();
  const double dual_width = on_position ? 1.0 / (2.0 * width_delta) : width_delta;
  const double dual_center = on_position ? center_p : center_x;
  const double clipped = tail(grid.min_value(), grid.max_value(), center, width) +
                         tail(dual.min_value(), dual.max_value(), dual_center, dual_width);
  if (clipped > kClipTolerance) {
    throw GridError("Gaussian packet clipped by grid edges (tail weight " + format_real(clipped) + ")");
  }

  std::vector<complex> amps(grid.n_points());
  for (std::size_t i = 0; i < amps.size(); ++i) {
    const double v = grid.value(i);
    const double envelope = std::exp(-(v - center) * (v - center) / (4.0 * width * width));
    // Position: e^{i p0 x}. Momentum: e^{-i (p - p0) x0}.
    const double phase = on_position ? center_p * v : -(v - center_p) * center_x;
    amps[i] = envelope * std::polar(1.0, phase);
  }
  return WavePacket(grid, std::move(amps)).normalized();
}

enum class Observable { p, p2, x, x2 };

inline constexpr double kNormTolerance = 1e-9;

inline double expectation(const WavePacket& packet, Observable observable) {
  if (std::abs(packet.norm2() - 1.0) > kNormTolerance) {
    throw DomainError("expectation requires a normalized packet (norm^2 = " + format_real(packet.norm2()) + ")");
  }
  const bool momentum_obs = observable == Observable::p || observable == Observable::p2;
  const WavePacket rep = momentum_obs ? in_momentum(packet) : in_position(packet);
  const bool squared = observable == Observable::p2 || observable == Observable::x2;
  double sum = 0.0;
  for (std::size_t i = 0; i < rep.grid().n_points(); ++i) {
    const double v = rep.grid().value(i);
    sum += std::norm(rep[i]) * (squared ? v * v : v);
  }
  return sum * rep.grid().spacing();
}

// CSV with columns grid_value,re,im; LF line endings.
inline void write_csv(std::ostream& out, const WavePacket& packet) {
  out << "grid_value,re,im\n";
  for (std::size_t i = 0; i < packet.grid().n_points(); ++i) {
    out << format_real(packet.grid().value(i)) << ',' << format_real(packet[i].real()) << ','
        << format_real(packet[i].imag()) << '\n';
  }
}

}  // namespace weakmass
