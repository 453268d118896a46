#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "weakmass/config.hpp"
#include "weakmass/detector.hpp"

using namespace weakmass;

namespace {

struct Moments {
  double mean = 0.0;
  double sd = 0.0;
};

Moments moments(const std::vector<double>& v) {
  Moments m;
  for (double x : v) m.mean += x;
  m.mean /= static_cast<double>(v.size());
  for (double x : v) m.sd += (x - m.mean) * (x - m.mean);
  m.sd = std::sqrt(m.sd / static_cast<double>(v.size() - 1));
  return m;
}

std::vector<double> counts_of(const std::vector<CountRecord>& records, int n) {
  std::vector<double> out;
  for (const auto& r : records) {
    if (r.detector_n == n) out.push_back(r.counts);
  }
  return out;
}

std::vector<double> ratios(const std::vector<CountRecord>& records, int n, int ref) {
  const auto a = counts_of(records, n);
  const auto b = counts_of(records, ref);
  std::vector<double> out;
  for (std::size_t i = 0; i < a.size(); ++i) out.push_back(a[i] / b[i]);
  return out;
}

// Two-sample Kolmogorov-Smirnov p-value with the asymptotic distribution.
double ks_p_value(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  const double ne = static_cast<double>(a.size()) * b.size() / (a.size() + b.size());
  const double lambda = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) p += 2.0 * (k % 2 ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
  return std::clamp(p, 0.0, 1.0);
}

// First-order distribution with g0 omega_k t n^2 Im A_w = signal at n = 10.
MomentumClassDistribution signal_distribution(double signal, double im_aw, WeakValue* out_w = nullptr) {
  const WeakValue w{0.5, im_aw, 0.01, false};
  if (out_w) *out_w = w;
  const double g0 = signal / (4.0 * 1.0 * 100.0 * im_aw);
  return p_n_first_order(w, g0, 4.0, 1.0, bessel_spectrum({.eta = 10.0}));
}

}  // namespace

TEST(SimulateCounts, DeterministicLimit) {
  const auto dist = signal_distribution(5e-3, 1e4);
  const auto records = simulate_counts(dist, {.n_atoms = 1000000}, {0, 5, 10}, 3);
  ASSERT_EQ(records.size(), 9u);
  for (const auto& r : records) EXPECT_DOUBLE_EQ(r.counts, 1e6 * dist.prob(r.detector_n));
  EXPECT_EQ(records[4].trial, 1);
  EXPECT_EQ(records[4].detector_n, 5);
}

TEST(SimulateCounts, DarkCountsAtEmptyClass) {
  const auto dist = p_n_first_order({0.0, 1.0, 1.0, false}, 0.0, 4.0, 1.0, bessel_spectrum({.eta = 0.0, .n_max = 2}));
  ASSERT_EQ(dist.prob(2), 0.0);
  const auto records = simulate_counts(dist, {.n_atoms = 1000, .dark_rate = 3.0, .seed = 8}, {0, 2}, 20000);
  const Moments m = moments(counts_of(records, 2));
  EXPECT_NEAR(m.mean, 3.0, 4.0 * std::sqrt(3.0 / 20000.0));
  EXPECT_NEAR(m.sd * m.sd, 3.0, 0.15);
}

TEST(SimulateCounts, EfficiencyNoiseStandardDeviation) {
  const auto dist = signal_distribution(5e-3, 1e4);
  const auto records = simulate_counts(dist, {.n_atoms = 1000000, .xi_d_sd = 1e-3, .seed = 21}, {0, 10}, 10000);
  for (int n : {0, 10}) {
    std::vector<double> rel;
    for (double c : counts_of(records, n)) rel.push_back(c / (1e6 * dist.prob(n)));
    const Moments m = moments(rel);
    EXPECT_NEAR(m.sd, 1e-3, 0.05e-3) << n;
    EXPECT_NEAR(m.mean, 1.0, 5e-5);
  }
}

TEST(SimulateCounts, ReproducibleAcrossSeedsAndThreads) {
  const auto dist = signal_distribution(5e-3, 1e4);
  const NoiseModel noise{.n_atoms = 1000000, .xi_s_sd = 0.05, .xi_d_sd = 1e-3, .dark_rate = 2.0, .seed = 77,
                         .shot_noise = true};
  const auto serial = simulate_counts(dist, noise, {0, 5, 10}, 500, 1);
  const auto again = simulate_counts(dist, noise, {0, 5, 10}, 500, 1);
  const auto parallel = simulate_counts(dist, noise, {0, 5, 10}, 500, 4);
  ASSERT_EQ(serial.size(), parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    EXPECT_EQ(serial[i].counts, again[i].counts);
    EXPECT_EQ(serial[i].counts, parallel[i].counts);
    EXPECT_EQ(serial[i].trial, parallel[i].trial);
    EXPECT_EQ(serial[i].detector_n, parallel[i].detector_n);
  }
  NoiseModel other = noise;
  other.seed = 78;
  EXPECT_NE(simulate_counts(dist, other, {0, 5, 10}, 1)[0].counts, serial[0].counts);
  EXPECT_NE(trial_seed(1, 0), trial_seed(1, 1));
  EXPECT_NE(trial_seed(1, 0), trial_seed(2, 0));
}

TEST(SimulateCounts, Errors) {
  const auto dist = signal_distribution(5e-3, 1e4);
  EXPECT_THROW(simulate_counts(dist, {.n_atoms = 0}, {0, 1}), DomainError);
  EXPECT_THROW(simulate_counts(dist, {.n_atoms = 10, .xi_d_sd = -1.0}, {0, 1}), DomainError);
  EXPECT_THROW(simulate_counts(dist, {.n_atoms = 10}, {0, 1}, 0), DomainError);
  EXPECT_THROW(simulate_counts(dist, {.n_atoms = 10}, {0, 500}), DomainError);
}

TEST(PoissonDraw, NormalApproximationBranchKeepsMoments) {
  std::mt19937_64 rng(4);
  std::vector<double> draws;
  for (int i = 0; i < 20000; ++i) draws.push_back(detail::draw_poisson(rng, 4e7));
  const Moments m = moments(draws);
  EXPECT_NEAR(m.mean, 4e7, 5.0 * std::sqrt(4e7 / 20000.0));
  EXPECT_NEAR(m.sd, std::sqrt(4e7), 0.03 * std::sqrt(4e7));
  EXPECT_EQ(detail::draw_poisson(rng, 0.0), 0.0);
}

TEST(RatioEstimator, NoiseFreeLimits) {
  const KDSpectrum spectrum = bessel_spectrum({.eta = 10.0});
  const auto flat = p_n_first_order({0.5, 1e4, 0.01, false}, 0.0, 4.0, 1.0, spectrum);
  const auto rec = simulate_counts(flat, {.n_atoms = 1000000}, {0, 10});
  EXPECT_NEAR(ratio_estimator(rec[1], rec[0]), spectrum.weight(10) / spectrum.weight(0), 1e-13);

  // Calcium numbers: suppression factor 1 - g0 omega_k t n^2 A_w^i at n = 10.
  const DimensionlessGroups d = derive_groups(calcium_preset(), calcium_preset().lifetime_s);
  const WeakValue w{0.5, 1e4, 0.01, false};
  const auto ca = p_n_first_order(w, d.g0, kSimOmegaK, d.omega_k_t / kSimOmegaK, spectrum);
  const auto ca_rec = simulate_counts(ca, {.n_atoms = 1000000}, {0, 10});
  const double suppression = ratio_estimator(ca_rec[1], ca_rec[0]) / (spectrum.weight(10) / spectrum.weight(0));
  EXPECT_NEAR(suppression, 1.0 - d.g0_omega_k_t * 100.0 * 1e4, 1e-12);
  EXPECT_NEAR(1.0 - suppression, 5e-3, 0.5e-3);
  EXPECT_THROW(ratio_estimator({1, 5.0, 0}, {0, 0.0, 0}), DomainError);
}

TEST(RatioEstimator, SourceNoiseCancels) {
  const auto dist = signal_distribution(5e-3, 1e4);
  const NoiseModel quiet{.n_atoms = 1000000, .xi_s_sd = 0.0, .xi_d_sd = 1e-4, .seed = 5};
  NoiseModel loud = quiet;
  loud.xi_s_sd = 0.1;
  // Same seed: identical efficiency draws, so the ratios agree to rounding.
  const auto r_quiet = ratios(simulate_counts(dist, quiet, {0, 10}, 10000), 10, 0);
  const auto r_loud = ratios(simulate_counts(dist, loud, {0, 10}, 10000), 10, 0);
  for (std::size_t i = 0; i < r_quiet.size(); ++i) EXPECT_NEAR(r_loud[i], r_quiet[i], 1e-15 * r_quiet[i]);
  // Independent seeds: two-sample test cannot tell the distributions apart.
  loud.seed = 6;
  const auto r_independent = ratios(simulate_counts(dist, loud, {0, 10}, 10000), 10, 0);
  EXPECT_GT(ks_p_value(r_quiet, r_independent), 0.01);
  // The raw counts do see the source noise.
  const auto c_quiet = counts_of(simulate_counts(dist, quiet, {0, 10}, 2000), 10);
  const auto c_loud = counts_of(simulate_counts(dist, loud, {0, 10}, 2000), 10);
  EXPECT_LT(ks_p_value(c_quiet, c_loud), 1e-6);
}

TEST(RecoverG0, NoiseFreeExactInversion) {
  const KDSpectrum spectrum = bessel_spectrum({.eta = 10.0});
  const WeakValue w{0.5, 10.0, 0.05, false};
  const double g0 = 1e-6;
  const auto dist = p_n_first_order(w, g0, 4.0, 1.0, spectrum);
  const auto records = simulate_counts(dist, {.n_atoms = 1000000}, {0, 5, 10}, 4);
  const G0Estimate est = recover_g0(records, w, 4.0, 1.0, spectrum);
  EXPECT_NEAR(est.g0_hat, g0, 1e-12);
  EXPECT_EQ(est.reference_class, 0);
  EXPECT_LT(est.std_error, 1e-12);
  EXPECT_TRUE(est.detectable);
}

TEST(RecoverG0, ReferenceIsSmallestMagnitudeClass) {
  const KDSpectrum spectrum = bessel_spectrum({.eta = 10.0});
  const WeakValue w{0.5, 10.0, 0.05, false};
  const auto dist = p_n_first_order(w, 1e-6, 4.0, 1.0, spectrum);
  const G0Estimate est = recover_g0(simulate_counts(dist, {.n_atoms = 1000000}, {10, -5, 8}), w, 4.0, 1.0, spectrum);
  EXPECT_EQ(est.reference_class, -5);
  EXPECT_NEAR(est.g0_hat, 1e-6, 1e-12);
}

TEST(RecoverG0, Errors) {
  const KDSpectrum spectrum = bessel_spectrum({.eta = 10.0});
  const WeakValue w{0.5, 10.0, 0.05, false};
  const auto dist = p_n_first_order(w, 1e-6, 4.0, 1.0, spectrum);
  const auto records = simulate_counts(dist, {.n_atoms = 1000000}, {0, 5, 10});
  EXPECT_THROW(recover_g0(records, {0.5, 0.0, 0.05, false}, 4.0, 1.0, spectrum), EstimationError);
  EXPECT_THROW(recover_g0(simulate_counts(dist, {.n_atoms = 1000000}, {5, -5}), w, 4.0, 1.0, spectrum),
               EstimationError);
}

TEST(RecoverG0, WithinThreeStandardErrorsAtCalciumNoise) {
  WeakValue w;
  const auto dist = signal_distribution(5e-3, 1e4, &w);
  const double g0 = 5e-3 / (4.0 * 100.0 * 1e4);
  const auto records =
      simulate_counts(dist, {.n_atoms = 1000000, .xi_d_sd = 1e-4, .seed = 2026}, {0, 5, 10}, 10000, 4);
  const G0Estimate est = recover_g0(records, w, 4.0, 1.0, bessel_spectrum({.eta = 10.0}));
  EXPECT_LT(std::abs(est.g0_hat - g0), 3.0 * est.std_error);
  EXPECT_LT(std::abs(est.g0_hat - g0) / g0, 0.02);
  EXPECT_TRUE(est.detectable);
}

TEST(RecoverG0, DetectabilityThresholdScalesWithEfficiencyNoise) {
  // One fitted class against the reference: y has sd sqrt(2) s per trial, so
  // z = signal sqrt(T) / (sqrt(2) s) and the 3 sigma line sits at c = 3 sqrt(2/T).
  const int trials = 1000;
  const double c = 3.0 * std::sqrt(2.0 / trials);
  for (double s : {1e-4, 1e-3, 1e-2}) {
    for (double multiple : {2.0, 0.2}) {
      WeakValue w;
      const auto dist = signal_distribution(multiple * c * s, 1e4, &w);
      const auto records =
          simulate_counts(dist, {.n_atoms = 1000000, .xi_d_sd = s, .seed = 31}, {0, 10}, trials, 4);
      const G0Estimate est = recover_g0(records, w, 4.0, 1.0, bessel_spectrum({.eta = 10.0}));
      EXPECT_EQ(est.detectable, multiple > 1.0) << "s=" << s << " multiple=" << multiple << " z=" << est.z_score;
    }
  }
}

TEST(RecoverG0, AmplificationLowersStandardErrorAboveShotNoiseFloor) {
  const KDSpectrum spectrum = bessel_spectrum({.eta = 10.0});
  const PostSelection sel{kAmplificationTheta, Selected::g};
  const double g0 = 1e-9;
  double previous = INFINITY;
  std::vector<double> errors;
  for (double target : {10.0, 100.0, 1000.0}) {
    const WeakValue w = weak_value_for(amplification_qubit(), sel, omega_t_for_imaginary_weak_value(target));
    // Success probability falls as 1/|A_w|^2: p_s0 |A_w|^2 = 1/4.
    EXPECT_NEAR(w.p_s0 * std::norm(w.value()), 0.25, 1e-9);
    const auto dist = p_n_first_order(w, g0, 4.0, 1.0, spectrum);
    const auto records = simulate_counts(
        dist, {.n_atoms = 10'000'000'000'000'000, .xi_d_sd = 1e-3, .seed = 12, .shot_noise = true}, {0, 5, 10}, 400, 4);
    const G0Estimate est = recover_g0(records, w, 4.0, 1.0, spectrum);
    EXPECT_LT(est.std_error, previous) << target;
    previous = est.std_error;
    errors.push_back(est.std_error);
  }
  EXPECT_GT(errors.front() / errors.back(), 30.0);
}
