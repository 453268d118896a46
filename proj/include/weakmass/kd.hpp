#pragma once

// Kapitza-Dirac scattering in the Raman-Nath regime: the standing-wave phase
// e^{i eta cos(2kx)}, its Bessel decomposition into momentum classes 2nk,
// free-flight separation of the classes and the second moment sum n^2 J_n^2.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

#include "weakmass/bessel.hpp"
#include "weakmass/errors.hpp"
#include "weakmass/hilbert.hpp"

namespace weakmass {

inline constexpr double kBesselTailTolerance = 1e-12;

// Smallest n_max with sum_{|n| > n_max} J_n(eta)^2 < 1e-12.
inline int default_n_max(double eta) {
  const double a = std::abs(eta);
  const int probe = static_cast<int>(std::ceil(a)) + 60;
  const auto j = bessel_j_sequence(probe, a);
  // Accumulate the two-sided tail from the top so tiny terms are not lost.
  double tail = 0.0;
  for (int n = probe; n >= 0; --n) {
    const double next_tail = tail + 2.0 * j[static_cast<std::size_t>(n)] * j[static_cast<std::size_t>(n)];
    if (next_tail >= kBesselTailTolerance) return n;
    tail = next_tail;
  }
  return 0;
}

struct KDParams {
  double eta = 0.0;      // pulse area Omega tau / 2
  double k_light = 1.0;  // light wavenumber
  int n_max = -1;        // series truncation; negative selects default_n_max(eta)
  // Kinetic time tau during the pulse. Raman-Nath drops it (0); a positive
  // value applies exp(-i p^2 tau / 2) after the phase for sensitivity studies.
  double pulse_kinetic_time = 0.0;

  int resolved_n_max() const { return n_max >= 0 ? n_max : default_n_max(eta); }
};

class KDSpectrum {
 public:
  KDSpectrum(int n_max, std::vector<complex> coeffs) : n_max_(n_max), coeffs_(std::move(coeffs)) {
    if (coeffs_.size() != static_cast<std::size_t>(2 * n_max_ + 1)) throw DomainError("KD spectrum size mismatch");
  }

  int n_max() const { return n_max_; }

  // phi(n) = i^n J_n(eta); zero outside the truncation.
  complex coeff(int n) const {
    if (std::abs(n) > n_max_) return 0.0;
    return coeffs_[static_cast<std::size_t>(n + n_max_)];
  }
  double weight(int n) const { return std::norm(coeff(n)); }

  double total_weight() const {
    double sum = 0.0;
    for (int n = n_max_; n >= 1; --n) sum += weight(n) + weight(-n);
    return sum + weight(0);
  }

 private:
  int n_max_;
  std::vector<complex> coeffs_;
};

inline KDSpectrum bessel_spectrum(const KDParams& params) {
  if (params.eta < 0.0) throw DomainError("pulse area eta must be non-negative");
  const int n_max = params.resolved_n_max();
  const auto j = bessel_j_sequence(n_max, params.eta);
  std::vector<complex> coeffs(static_cast<std::size_t>(2 * n_max + 1));
  static constexpr complex kPowersOfI[4] = {{1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}, {0.0, -1.0}};
  for (int n = -n_max; n <= n_max; ++n) {
    const double jn = (n < 0 && (-n) % 2 != 0) ? -j[static_cast<std::size_t>(-n)] : j[static_cast<std::size_t>(std::abs(n))];
    coeffs[static_cast<std::size_t>(n + n_max)] = kPowersOfI[((n % 4) + 4) % 4] * jn;
  }
  return {n_max, std::move(coeffs)};
}

// Sum over the truncated spectrum of n^2 J_n^2 (equals eta^2 / 2).
inline double theta_moment(const KDParams& params) {
  const KDSpectrum spectrum = bessel_spectrum(params);
  double sum = 0.0;
  for (int n = spectrum.n_max(); n >= 1; --n) {
    sum += static_cast<double>(n) * n * (spectrum.weight(n) + spectrum.weight(-n));
  }
  return sum;
}

inline WavePacket apply_kd_phase(const WavePacket& packet, const KDParams& params) {
  const Grid1D& grid = packet.grid();
  if (grid.axis() != AxisKind::position) throw GridError("KD phase acts on a position-space packet");
  const double k = params.k_light;
  if (!(k > 0.0)) throw DomainError("light wavenumber must be positive");
  if (!(grid.spacing() < std::numbers::pi / (4.0 * k))) throw GridError("grid too coarse to resolve the standing wave");
  const double p_half_range = std::numbers::pi / grid.spacing();
  if (!(p_half_range > 2.0 * k * params.resolved_n_max())) {
    throw GridError("momentum range cannot hold the KD spectrum up to n_max");
  }
  WavePacket out = packet.pointwise([&](double x) { return std::polar(1.0, params.eta * std::cos(2.0 * k * x)); });
  if (params.pulse_kinetic_time > 0.0) {
    const double tau = params.pulse_kinetic_time;
    out = to_position(to_momentum(out).pointwise([tau](double p) { return std::polar(1.0, -0.5 * p * p * tau); }));
  }
  return out;
}

struct SeparationReport {
  double displacement = 0.0;  // D_n, class centre shift after free flight
  double spread = 0.0;        // sqrt(delta^2 + delta_d^2)
  bool resolvable = false;
};

inline constexpr double kDefaultSeparationRatio = 5.0;

// Class n after free flight t0: centre moves by D_n = 2 n k t0 (= 4 n pi t0 / lambda),
// width grows to sqrt(delta^2 + (t0 / (2 delta))^2).
inline SeparationReport separation_check(const KDParams& params, double delta, double t0, int n,
                                         double ratio_threshold = kDefaultSeparationRatio) {
  if (!(t0 > 0.0)) throw DomainError("flight time must be positive");
  if (!(delta > 0.0)) throw DomainError("packet width must be positive");
  SeparationReport report;
  report.displacement = 2.0 * n * params.k_light * t0;
  const double spreading = t0 / (2.0 * delta);
  report.spread = std::sqrt(delta * delta + spreading * spreading);
  report.resolvable = std::abs(report.displacement) > ratio_threshold * report.spread;
  return report;
}

// CSV with columns n,re_phi,im_phi,abs2_phi.
inline void write_csv(std::ostream& out, const KDSpectrum& spectrum) {
  out << "n,re_phi,im_phi,abs2_phi\n";
  for (int n = -spectrum.n_max(); n <= spectrum.n_max(); ++n) {
    const complex c = spectrum.coeff(n);
    out << n << ',' << format_real(c.real()) << ',' << format_real(c.imag()) << ',' << format_real(std::norm(c))
        << '\n';
  }
}

}  // namespace weakmass
