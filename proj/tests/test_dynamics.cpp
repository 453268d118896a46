#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "weakmass/dynamics.hpp"
#include "weakmass/validation.hpp"

using namespace weakmass;

namespace {

JointState gaussian_product(const QubitState& q, std::size_t n, double dx, double delta, double z0, double p0) {
  return JointState::product(q, make_gaussian(Grid1D::position(n, dx), delta, z0, p0));
}

double mean_position(const WavePacket& component) {
  return expectation(in_position(component).normalized(), Observable::x);
}

}  // namespace

TEST(EvolveExactX, PerMomentumPhases) {
  const QubitState q(0.6, 0.8);
  const JointState psi = in_momentum(gaussian_product(q, 1024, 0.05, 1.0, 0.0, 0.0));
  const CouplingParams params{.g0 = 1e-2, .omega_t = 0.7, .gbar = 0.0, .t = 0.9};
  const JointState out = evolve_exact_x(psi, params);
  const Grid1D& grid = psi.grid();
  double worst = 0.0;
  for (std::size_t i = 0; i < grid.n_points(); ++i) {
    const double p = grid.value(i);
    const complex g = psi.comp_g()[i] * std::exp(complex(0.0, -0.5 * p * p * 0.9));
    const complex e = psi.comp_e()[i] * std::exp(complex(0.0, -0.7 - 0.5 * (1.0 - 1e-2) * p * p * 0.9));
    worst = std::max({worst, std::abs(out.comp_g()[i] - g), std::abs(out.comp_e()[i] - e)});
  }
  EXPECT_LT(worst, 1e-15);
  EXPECT_NEAR(out.norm2(), psi.norm2(), 1e-12);
}

TEST(EvolveExactX, RelativePhaseOfClassIsHalfG0OmegaKTnSquared) {
  // A plane wave at p = 2n (hbar = k = 1): relative phase e vs g, omega t removed,
  // is g0 (2n)^2 t / 2 = g0 omega_k t n^2 / 2 with omega_k = 4.
  const Grid1D pgrid = Grid1D::momentum(256, 2.0 / 8.0);
  const double g0 = 3e-3, t = 1.7, omega_t = 0.4;
  for (int n : {1, 3, 5}) {
    std::vector<complex> amps(256);
    const std::size_t index = 128 + static_cast<std::size_t>(8 * n);
    ASSERT_NEAR(pgrid.value(index), 2.0 * n, 1e-12);
    amps[index] = 1.0;
    const WavePacket spike(pgrid, amps);
    const JointState out = evolve_exact_x(JointState(spike, spike), {.g0 = g0, .omega_t = omega_t, .gbar = 0.0, .t = t});
    const double relative = std::arg(out.comp_g()[index] / (out.comp_e()[index] * std::polar(1.0, omega_t)));
    EXPECT_NEAR(-relative, g0 * 4.0 * t * n * n / 2.0, 1e-12) << n;
  }
}

TEST(EvolveExactX, IdentityAtZeroTime) {
  const JointState psi = in_momentum(gaussian_product(amplification_qubit(), 256, 0.1, 1.0, 0.5, 1.0));
  const JointState out = evolve_exact_x(psi, {.g0 = 0.1, .omega_t = 0.0, .gbar = 0.0, .t = 0.0});
  EXPECT_LT(l2_distance(out, psi), 1e-15);
}

TEST(EvolveExactX, ZeroG0GivesIdenticalKineticPhases) {
  const JointState psi = in_momentum(gaussian_product(amplification_qubit(), 256, 0.1, 1.0, 0.0, 0.0));
  const JointState out = evolve_exact_x(psi, {.g0 = 0.0, .omega_t = 0.0, .gbar = 0.0, .t = 2.0});
  EXPECT_LT(l2_distance(out.comp_g(), out.comp_e()), 1e-15);
}

TEST(EvolveExactX, Errors) {
  const JointState pos = gaussian_product(amplification_qubit(), 256, 0.1, 1.0, 0.0, 0.0);
  EXPECT_THROW(evolve_exact_x(pos, {.t = 1.0}), GridError);
  EXPECT_THROW(evolve_exact_x(in_momentum(pos), {.gbar = 1.0, .t = 1.0}), DomainError);
}

TEST(SplitStep, ReducesToExactXWithoutGravity) {
  const JointState psi = in_momentum(gaussian_product(QubitState(0.3, 0.9), 1024, 0.05, 1.0, 0.0, 0.5));
  const CouplingParams params{.g0 = 1e-2, .omega_t = 1.1, .gbar = 0.0, .t = 1.0};
  const JointState split = evolve_split_step_z(psi, params, {.n_steps = 10});
  EXPECT_EQ(split.grid().axis(), AxisKind::momentum);
  EXPECT_LT(l2_distance(split, evolve_exact_x(psi, params)), 1e-10);
}

TEST(SplitStep, NormPreserved) {
  const JointState psi = gaussian_product(amplification_qubit(), 1024, 0.04, 1.0, 0.0, 0.0);
  const JointState out = evolve_split_step_z(psi, {.g0 = 1e-2, .omega_t = 0.3, .gbar = 1.0, .t = 1.0}, {.n_steps = 500});
  EXPECT_NEAR(out.norm2(), 1.0, 1e-10);
}

TEST(SplitStep, FreeFallEhrenfestForGroundComponent) {
  const double z0 = 0.5, p0 = 0.3, gbar = 1.0, t = 1.2;
  const JointState psi = gaussian_product(QubitState::ground(), 1024, 0.04, 1.0, z0, p0);
  const JointState out = evolve_split_step_z(psi, {.g0 = 0.0, .gbar = gbar, .t = t}, {.n_steps = 200});
  EXPECT_NEAR(mean_position(out.comp_g()), z0 + p0 * t - 0.5 * gbar * t * t, 1e-8);
}

TEST(SplitStep, ExcitedComponentFallsWithReducedAcceleration) {
  const double z0 = -0.5, p0 = 0.2, gbar = 1.0, t = 1.0, g0 = 0.05;
  const JointState psi = gaussian_product(QubitState::excited(), 1024, 0.04, 1.0, z0, p0);
  const JointState out = evolve_split_step_z(psi, {.g0 = g0, .gbar = gbar, .t = t}, {.n_steps = 200});
  // dz/dt = (1 - g0) p, dp/dt = -(1 + g0) gbar
  const double expected = z0 + (1.0 - g0) * p0 * t - 0.5 * (1.0 - g0 * g0) * gbar * t * t;
  EXPECT_NEAR(mean_position(out.comp_e()), expected, 1e-8);
  const double p_mean = expectation(in_momentum(out.comp_e()).normalized(), Observable::p);
  EXPECT_NEAR(p_mean, p0 - (1.0 + g0) * gbar * t, 1e-8);
}

TEST(SplitStep, SecondOrderRichardsonRatio) {
  const JointState psi = gaussian_product(amplification_qubit(), 1024, 0.04, 1.0, 0.0, 0.5);
  const CouplingParams params{.g0 = 0.05, .omega_t = 0.2, .gbar = 2.0, .t = 1.0};
  const double coarse = split_step_richardson_change(psi, params, 8);
  const double fine = split_step_richardson_change(psi, params, 16);
  EXPECT_NEAR(coarse / fine, 4.0, 0.2);
}

TEST(SplitStep, Errors) {
  const JointState psi = gaussian_product(amplification_qubit(), 256, 0.05, 1.0, 0.0, 0.0);
  EXPECT_THROW(evolve_split_step_z(psi, {.gbar = 1.0, .t = 1.0}, {.n_steps = 0}), DomainError);
  // Falls off a small grid.
  EXPECT_THROW(evolve_split_step_z(psi, {.gbar = 10.0, .t = 2.0}, {.n_steps = 100}), GridError);
  // A single step misses the convergence tolerance.
  const JointState big = gaussian_product(amplification_qubit(), 1024, 0.04, 1.0, 0.0, 0.0);
  EXPECT_THROW(evolve_split_step_z(big, {.g0 = 0.05, .gbar = 3.0, .t = 1.0}, {.n_steps = 1, .check_convergence = true}),
               NonConvergence);
  EXPECT_NO_THROW(
      evolve_split_step_z(big, {.g0 = 0.05, .gbar = 3.0, .t = 1.0}, {.n_steps = 4000, .check_convergence = true}));
}

TEST(PerturbativeFlag, RaisedForLargeKineticPhase) {
  const Grid1D grid = Grid1D::position(256, 0.1);  // p_max = 31.4
  EXPECT_FALSE(outside_perturbative_regime({.g0 = 1e-5, .t = 1.0}, grid));
  EXPECT_TRUE(outside_perturbative_regime({.g0 = 1e-3, .t = 1.0}, grid));
}

TEST(Bch, CoefficientRecord) {
  const auto zero_time = bch_transformed_zc({.gbar = 1.3}, 0.0);
  EXPECT_EQ(zero_time.c_kin, 1.0);
  EXPECT_EQ(zero_time.c_z, -1.3);
  EXPECT_EQ(zero_time.c_pz, 0.0);
  EXPECT_EQ(zero_time.c_const, 0.0);
  const auto no_gravity = bch_transformed_zc({.gbar = 0.0}, 2.0);
  EXPECT_EQ(no_gravity.c_z, 0.0);
  EXPECT_EQ(no_gravity.c_pz, 0.0);
  EXPECT_EQ(no_gravity.c_const, 0.0);
  const auto c = bch_transformed_zc({.gbar = 2.0}, 0.5);
  EXPECT_DOUBLE_EQ(c.c_pz, -2.0);
  EXPECT_DOUBLE_EQ(c.c_const, 1.0);
}

TEST(Bch, SandwichMatchesCoefficientForm) {
  const BchReport report = bch_check({});
  EXPECT_LT(report.richardson_change, 1e-8);
  EXPECT_LT(report.max_deviation, 1e-7);
  EXPECT_LT(report.closure_residual, 1e-8);
}

TEST(Bch, SandwichMatchesHeisenbergOperators) {
  // Independent oracle: z(s) = z + p s - gbar s^2/2, p(s) = p - gbar s.
  const double gbar = 0.7, s = 0.8;
  const WavePacket psi = make_gaussian(Grid1D::position(1024, 0.04), 1.0, 0.2, 0.4);
  const WavePacket p_psi = apply_momentum(psi);
  const WavePacket ps_psi = p_psi - psi.scaled(gbar * s);
  const WavePacket kinetic = (apply_momentum(ps_psi) - ps_psi.scaled(gbar * s)).scaled(0.5);
  const WavePacket zs = apply_position(psi) + p_psi.scaled(s) - psi.scaled(0.5 * gbar * s * s);
  const WavePacket heisenberg = kinetic - zs.scaled(gbar);
  EXPECT_LT(l2_distance(bch_sandwich(psi, gbar, s, 64), heisenberg), 1e-9);
}

TEST(Commutator, H0AndRecoilCouplingCommute) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> unit;
  const Grid1D grid = Grid1D::position(256, 0.5);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<complex> g(256), e(256);
    for (std::size_t i = 0; i < 256; ++i) {
      g[i] = {unit(rng), unit(rng)};
      e[i] = {unit(rng), unit(rng)};
    }
    const JointState s(WavePacket(grid, g), WavePacket(grid, e));
    const JointState ab = apply_h0(apply_h_rc(s), 2.5);
    const JointState ba = apply_h_rc(apply_h0(s, 2.5));
    EXPECT_LT(l2_distance(ab, ba), 1e-10 * std::sqrt(ab.norm2()));
  }
}

TEST(Dyson, ZeroCouplingIsFreeEvolution) {
  const JointState psi = gaussian_product(amplification_qubit(), 1024, 0.04, 1.0, 0.0, 0.0);
  const CouplingParams params{.g0 = 0.0, .omega_t = 0.3, .gbar = 1.0, .t = 1.0};
  const JointState first = dyson_first_order(psi, params, 400);
  const JointState free = evolve_split_step_z(psi, params, {.n_steps = 400});
  EXPECT_LT(l2_distance(first, free), 1e-12);
}

TEST(Dyson, NoGravityAddsKineticCorrectionOnExcitedSector) {
  const QubitState q(0.6, 0.8);
  const JointState psi = in_momentum(gaussian_product(q, 512, 0.05, 1.0, 0.0, 0.3));
  const double g0 = 1e-3, t = 0.7, omega_t = 0.9;
  const JointState first = dyson_first_order(psi, {.g0 = g0, .omega_t = omega_t, .gbar = 0.0, .t = t});
  const Grid1D& grid = psi.grid();
  double worst = 0.0;
  for (std::size_t i = 0; i < grid.n_points(); ++i) {
    const double p = grid.value(i);
    const complex free = std::polar(1.0, -0.5 * p * p * t);
    const complex g = psi.comp_g()[i] * free;
    const complex e = psi.comp_e()[i] * free * std::polar(1.0, -omega_t) * complex(1.0, g0 * t * 0.5 * p * p);
    worst = std::max({worst, std::abs(first.comp_g()[i] - g), std::abs(first.comp_e()[i] - e)});
  }
  EXPECT_LT(worst, 1e-13);
}

TEST(Dyson, ErrorIsQuadraticInCoupling) {
  const std::vector<double> g0s{1e-2, 1e-3, 1e-4};
  const auto points = dyson_convergence({}, g0s);
  std::vector<double> errs;
  for (const auto& p : points) errs.push_back(p.l2_error);
  EXPECT_NEAR(loglog_slope(g0s, errs), 2.0, 0.1);
  EXPECT_NEAR(errs[0] / errs[1], 100.0, 15.0);
  EXPECT_NEAR(errs[1] / errs[2], 100.0, 15.0);
}

TEST(Dyson, RejectsEntangledInput) {
  const Grid1D grid = Grid1D::position(512, 0.05);
  const JointState entangled(make_gaussian(grid, 1.0, -1.0, 0.0).scaled(1.0 / std::numbers::sqrt2),
                             make_gaussian(grid, 1.0, 1.0, 0.0).scaled(1.0 / std::numbers::sqrt2));
  EXPECT_THROW(dyson_first_order(entangled, {.g0 = 1e-3, .t = 1.0}), DomainError);
}

TEST(EffectiveG, ZeroGravityIsZeroOperator) {
  const WavePacket psi = make_gaussian(Grid1D::position(256, 0.05), 1.0, 0.0, 0.0);
  EXPECT_EQ((EffectiveG{0.0, 3.0}.apply(psi).norm2()), 0.0);
  // <G> for a moving Gaussian: gbar z0 + gbar t p0 - (gbar t)^2/3
  const WavePacket moving = make_gaussian(Grid1D::position(1024, 0.04), 1.0, 0.4, 0.25);
  const complex mean = inner_product(moving, EffectiveG{1.5, 2.0}.apply(moving));
  EXPECT_NEAR(mean.real(), 1.5 * 0.4 + 1.5 * 2.0 * 0.25 - 9.0 / 3.0, 1e-9);
  EXPECT_NEAR(mean.imag(), 0.0, 1e-12);
}
