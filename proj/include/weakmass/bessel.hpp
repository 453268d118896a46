#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "weakmass/errors.hpp"

namespace weakmass {

// J_0(x) .. J_{n_max}(x) by Miller's downward recurrence, normalized with
// J_0 + 2 sum_k J_{2k} = 1. Stable for all orders, including n >> x where
// upward recurrence loses every digit.
inline std::vector<double> bessel_j_sequence(int n_max, double x) {
  if (n_max < 0) throw DomainError("bessel order must be non-negative");
  std::vector<double> out(static_cast<std::size_t>(n_max) + 1, 0.0);
  if (x == 0.0) {
    out[0] = 1.0;
    return out;
  }
  const double ax = std::abs(x);
  const double reach = std::max(static_cast<double>(n_max), ax);
  int start = static_cast<int>(reach + 30.0 + std::sqrt(60.0 * reach));
  if (start % 2 != 0) ++start;

  constexpr double kBig = 1e250;
  constexpr double kSmall = 1e-250;
  double above = 0.0;   // J_{k+1}
  double current = 1e-30;  // J_k, arbitrary seed
  double even_sum = 0.0;
  for (int k = start; k >= 1; --k) {
    const double below = (2.0 * k / ax) * current - above;
    above = current;
    current = below;  // J_{k-1}
    if (std::abs(current) > kBig) {
      current *= kSmall;
      above *= kSmall;
      even_sum *= kSmall;
      for (auto& v : out) v *= kSmall;
    }
    const int order = k - 1;
    if (order <= n_max) out[static_cast<std::size_t>(order)] = current;
    if (order > 0 && order % 2 == 0) even_sum += 2.0 * current;
  }
  const double norm = even_sum + current;
  for (auto& v : out) v /= norm;
  if (x < 0.0) {
    for (std::size_t n = 1; n < out.size(); n += 2) out[n] = -out[n];
  }
  return out;
}

inline double bessel_j(int n, double x) {
  const int order = std::abs(n);
  const double value = bessel_j_sequence(order, x)[static_cast<std::size_t>(order)];
  return (n < 0 && order % 2 != 0) ? -value : value;
}

}  // namespace weakmass
