#pragma once

// Atom-counting statistics behind the two-detector ratio measurement:
//   I_n = (N + xi_s) P_n (1 + xi_d) + eps
// with Gaussian source and efficiency noise, optional Poisson shot noise and
// Poisson dark counts, plus the inverse-variance weighted inversion for g0.

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "weakmass/errors.hpp"
#include "weakmass/kd.hpp"
#include "weakmass/parallel.hpp"
#include "weakmass/weakmeas.hpp"

namespace weakmass {

struct NoiseModel {
  std::int64_t n_atoms = 1;
  double xi_s_sd = 0.0;    // source noise, fraction of N
  double xi_d_sd = 0.0;    // per-detector efficiency noise, fractional
  double dark_rate = 0.0;  // mean dark counts per detector
  std::uint64_t seed = 0;
  bool shot_noise = false;  // Poisson partitioning of the atoms over classes
};

struct CountRecord {
  int detector_n = 0;
  double counts = 0.0;
  int trial = 0;
};

// splitmix64 finalizer over (base seed, trial index).
inline std::uint64_t trial_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace detail {

// Poisson draw; above 1e7 the normal approximation is used (relative error of
// the shape is below 1e-3 there).
inline double draw_poisson(std::mt19937_64& rng, double mean) {
  if (mean <= 0.0) return 0.0;
  if (mean > 1e7) {
    std::normal_distribution<double> normal(mean, std::sqrt(mean));
    return std::max(0.0, std::round(normal(rng)));
  }
  std::poisson_distribution<long long> poisson(mean);
  return static_cast<double>(poisson(rng));
}

}  // namespace detail

// One record per (trial, class), trial-major. Each trial draws from its own
// generator seeded by trial_seed, so any thread count gives the same output.
inline std::vector<CountRecord> simulate_counts(const MomentumClassDistribution& dist, const NoiseModel& noise,
                                                const std::vector<int>& classes, int trials = 1,
                                                unsigned threads = 1) {
  if (noise.n_atoms < 1) throw DomainError("n_atoms must be at least 1");
  if (noise.xi_s_sd < 0.0 || noise.xi_d_sd < 0.0 || noise.dark_rate < 0.0) {
    throw DomainError("noise parameters must be non-negative");
  }
  if (trials < 1) throw DomainError("trials must be at least 1");
  for (int n : classes) {
    if (!dist.probs.contains(n)) throw DomainError("class " + std::to_string(n) + " outside the distribution");
  }
  const std::size_t per_trial = classes.size();
  std::vector<CountRecord> out(per_trial * static_cast<std::size_t>(trials));
  const double n_atoms = static_cast<double>(noise.n_atoms);
  parallel_for(static_cast<std::size_t>(trials), threads, [&](std::size_t trial) {
    std::mt19937_64 rng(trial_seed(noise.seed, trial));
    std::normal_distribution<double> unit(0.0, 1.0);
    // Fixed draw order: source noise, then per class efficiency, shot, dark.
    const double source = n_atoms + noise.xi_s_sd * n_atoms * unit(rng);
    for (std::size_t c = 0; c < per_trial; ++c) {
      const int n = classes[c];
      const double xi_d = noise.xi_d_sd * unit(rng);
      const double expected = source * dist.prob(n);
      const double atoms = noise.shot_noise ? detail::draw_poisson(rng, expected) : expected;
      const double dark = noise.dark_rate > 0.0 ? detail::draw_poisson(rng, noise.dark_rate) : 0.0;
      out[trial * per_trial + c] = {n, std::max(0.0, atoms * (1.0 + xi_d) + dark), static_cast<int>(trial)};
    }
  });
  return out;
}

// I_n / I_ref; source noise cancels.
inline double ratio_estimator(const CountRecord& record_n, const CountRecord& record_ref) {
  if (!(record_ref.counts > 0.0)) throw DomainError("reference detector recorded no counts");
  return record_n.counts / record_ref.counts;
}

struct G0Estimate {
  double g0_hat = 0.0;
  double std_error = 0.0;
  double z_score = 0.0;
  bool detectable = false;  // |z| >= 3
  int reference_class = 0;
};

inline constexpr double kDetectionSigma = 3.0;

// Per trial, inverts the first-order ratio
//   (I_n/I_ref) J_ref^2/J_n^2 = (1 - c n^2) / (1 - c ref^2),  c = g0 omega_k t A_w^i,
// then combines classes by the inverse variance of their trial means. With
// ref = 0 this is the weighted least-squares line y_n = c n^2 through the
// origin. The reference is class 0 when recorded, else the smallest |n|.
inline G0Estimate recover_g0(const std::vector<CountRecord>& records, const WeakValue& a_w, double omega_k, double t,
                             const KDSpectrum& spectrum) {
  if (a_w.im == 0.0) throw EstimationError("g0 is unidentifiable when Im A_w = 0");
  std::map<int, std::map<int, double>> by_class;  // n -> trial -> counts
  for (const auto& r : records) by_class[r.detector_n][r.trial] = r.counts;
  std::set<int> magnitudes;
  for (const auto& [n, _] : by_class) magnitudes.insert(std::abs(n));
  if (magnitudes.size() < 2) throw EstimationError("degenerate design: need at least two distinct |n| classes");

  int ref = by_class.begin()->first;
  for (const auto& [n, _] : by_class) {
    if (std::abs(n) < std::abs(ref)) ref = n;
  }
  const double w_ref = spectrum.weight(ref);
  const double ref2 = static_cast<double>(ref) * ref;
  const double scale = omega_k * t * a_w.im;
  const auto& ref_counts = by_class.at(ref);

  struct ClassMean {
    double x, mean, var_mean;  // x = scale (n^2 - ref^2), mean and variance of the g0 estimates
  };
  std::vector<ClassMean> points;
  for (const auto& [n, trials] : by_class) {
    if (std::abs(n) == std::abs(ref)) continue;
    const double w_n = spectrum.weight(n);
    if (!(w_n > 0.0)) throw EstimationError("class " + std::to_string(n) + " has zero KD weight");
    const double n2 = static_cast<double>(n) * n;
    std::vector<double> gs;
    for (const auto& [trial, counts] : trials) {
      auto it = ref_counts.find(trial);
      if (it == ref_counts.end()) continue;
      const double r = ratio_estimator({n, counts, trial}, {ref, it->second, trial}) * w_ref / w_n;
      gs.push_back((1.0 - r) / (scale * (n2 - r * ref2)));
    }
    if (gs.empty()) continue;
    double mean = 0.0;
    for (double g : gs) mean += g;
    mean /= static_cast<double>(gs.size());
    double var = 0.0;
    if (gs.size() > 1) {
      for (double g : gs) var += (g - mean) * (g - mean);
      var /= static_cast<double>(gs.size() - 1);
    }
    points.push_back({scale * (n2 - ref2), mean, var / static_cast<double>(gs.size())});
  }
  if (points.empty()) throw EstimationError("no trials pair a class with the reference");

  bool weighted = true;
  for (const auto& p : points) weighted = weighted && p.var_mean > 0.0;
  G0Estimate est;
  est.reference_class = ref;
  double sw = 0.0, swg = 0.0;
  if (weighted) {
    for (const auto& p : points) {
      sw += 1.0 / p.var_mean;
      swg += p.mean / p.var_mean;
    }
    est.g0_hat = swg / sw;
    est.std_error = 1.0 / std::sqrt(sw);
  } else {
    // Unweighted line through the origin in y = x g0.
    for (const auto& p : points) {
      sw += p.x * p.x;
      swg += p.x * p.x * p.mean;
    }
    est.g0_hat = swg / sw;
    if (points.size() > 1) {
      double rss = 0.0;
      for (const auto& p : points) rss += p.x * p.x * (p.mean - est.g0_hat) * (p.mean - est.g0_hat);
      est.std_error = std::sqrt(rss / static_cast<double>(points.size() - 1) / sw);
    }
  }
  est.z_score = est.std_error > 0.0 ? est.g0_hat / est.std_error : std::copysign(INFINITY, est.g0_hat);
  est.detectable = std::abs(est.z_score) >= kDetectionSigma;
  return est;
}

}  // namespace weakmass
