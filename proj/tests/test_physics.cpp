// Copyright 2026 The stefan-kan Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "grad_check.hpp"
#include "stefan_kan.hpp"
#include "test_support.hpp"

namespace {

using namespace stefan_kan;
using sk_test::fn_field;
using J = Jet2<double>;
using A2 = std::array<J, 2>;
using A3 = std::array<J, 3>;

PhysicsConfig cfg1() { return resolve(default_1d()); }
PhysicsConfig cfg2() { return resolve(default_2d()); }

PhysicsConfig unit_props_2d() {
  PhysicsConfig c = cfg2();
  c.k_s = c.k_l = c.rho_s = c.latent = 1.0;
  return c;
}

auto const2(double v) {
  return fn_field<2>([v](const A2&) { return J(v); });
}
auto const3(double v) {
  return fn_field<3>([v](const A3&) { return J(v); });
}

SampleBatch batch_of(int dim, std::vector<SpaceTime> pts) {
  SampleBatch b;
  b.dim = dim;
  b.points = std::move(pts);
  return b;
}

double sigmoid_ref(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// ---------------------------------------------------------------------------
// Masks and weights.

TEST(Heaviside, MidpointIsHalf) {
  const auto h = heaviside_masks(0.0, 100.0);
  EXPECT_EQ(h.solid, 0.5);
  EXPECT_EQ(h.liquid, 0.5);
}

TEST(Heaviside, MasksComplement) {
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    const double phi = rng.uniform(-1.0, 1.0);
    const auto h = heaviside_masks(phi, 100.0);
    EXPECT_LE(std::abs(h.solid + h.liquid - 1.0), 1e-15);
  }
}

TEST(Heaviside, DefaultSharpness) {
  const auto h = heaviside_masks(0.1, 100.0);
  EXPECT_NEAR(h.liquid, sigmoid_ref(10.0), 1e-15);
  EXPECT_NEAR(h.liquid, 0.9999546, 1e-7);
}

TEST(InterfaceWeight, DefinitionPoints) {
  EXPECT_EQ(interface_weight(0.0, 0.3), 1.0);
  EXPECT_NEAR(interface_weight(0.3, 0.3), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(interface_weight(0.3, 0.3), 0.367879, 1e-6);
}

TEST(InterfaceWeight, EvenSymmetry) {
  Rng rng(12);
  for (int i = 0; i < 100; ++i) {
    const double phi = rng.uniform(-2.0, 2.0);
    EXPECT_EQ(interface_weight(phi, 0.7), interface_weight(-phi, 0.7));
  }
}

// ---------------------------------------------------------------------------
// PDE residuals.

TEST(PdeResidual, ConstantAndHarmonicFieldsVanish) {
  const auto c = const3(4.0);
  const auto lin = fn_field<3>([](const A3& p) { return 3.0 * p[0] - 2.0 * p[1] + 1.0; });
  EXPECT_EQ(pde_residual<3>(c, {0.3, -0.2, 1.5}, 2.0), 0.0);
  EXPECT_NEAR(pde_residual<3>(lin, {0.3, -0.2, 1.5}, 2.0), 0.0, 1e-14);
  const auto lin1 = fn_field<2>([](const A2& p) { return 5.0 * p[0] - 1.0; });
  EXPECT_NEAR(pde_residual<2>(lin1, {0.4, 0.1}, 0.7), 0.0, 1e-14);
}

TEST(PdeResidual, HandFields) {
  const double alpha = 0.7;
  const auto ut = fn_field<2>([](const A2& p) { return p[1]; });
  const auto uxx = fn_field<2>([](const A2& p) { return square(p[0]); });
  const auto heat = fn_field<2>([alpha](const A2& p) { return square(p[0]) + 2.0 * alpha * p[1]; });
  EXPECT_NEAR(pde_residual<2>(ut, {0.4, 0.1}, alpha), 1.0, 1e-14);
  EXPECT_NEAR(pde_residual<2>(uxx, {0.4, 0.1}, alpha), -2.0 * alpha, 1e-14);
  EXPECT_NEAR(pde_residual<2>(heat, {0.4, 0.1}, alpha), 0.0, 1e-14);
  const auto heat2 = fn_field<3>([alpha](const A3& p) { return square(p[0]) + square(p[1]) + 4.0 * alpha * p[2]; });
  EXPECT_NEAR(pde_residual<3>(heat2, {0.4, -1.1, 0.3}, alpha), 0.0, 1e-13);
}

TEST(PdeResidual, NeumannOracleFieldsSatisfyHeatEquation) {
  const PhysicsConfig c = cfg1();
  const auto f = oracle_fields_1d(c);
  const Neumann1D sol(c);
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const double t = rng.uniform(c.t_start, c.t_end);
    const double s = sol.interface(t);
    const double xs = rng.uniform(0.0, s);
    const double xl = rng.uniform(s, 1.0);
    EXPECT_NEAR(pde_residual<2>(f.u_s, {xs, t}, c.alpha_s), 0.0, 1e-9);
    EXPECT_NEAR(pde_residual<2>(f.u_l, {xl, t}, c.alpha_l), 0.0, 1e-9);
  }
}

// ---------------------------------------------------------------------------
// Masked PDE losses. The residual is multiplied by its mask before squaring,
// so a midpoint mask scales each term by a quarter.

TEST(MaskedPde, DeepLiquidSuppressesSolidTerm) {
  const PhysicsConfig c = cfg1();
  const auto u = fn_field<2>([](const A2& p) { return 5.0 * square(p[0]); });
  const auto phi = const2(1.0);
  const auto f = make_fields(u, u, phi);
  const auto b = batch_of(1, {{0.1, 0.0, 0.0}, {0.5, 0.1, 0.0}, {0.9, 0.2, 0.0}});
  const auto [ps, pl] = masked_pde_losses<2>(f, b, c);
  EXPECT_LT(ps, 1e-30);
  EXPECT_NEAR(pl, 100.0 * sigmoid_ref(100.0) * sigmoid_ref(100.0), 1e-12);
}

TEST(MaskedPde, MidpointMaskGivesQuarterOfUnmaskedMean) {
  const PhysicsConfig c = cfg1();
  const auto us = fn_field<2>([](const A2& p) { return square(p[0]) * p[1]; });
  const auto ul = fn_field<2>([](const A2& p) { return p[1] * 3.0; });
  const auto f = make_fields(us, ul, const2(0.0));
  const auto b = batch_of(1, {{0.2, 0.05, 0.0}, {0.6, 0.1, 0.0}, {0.8, 0.2, 0.0}});
  double mean_s = 0.0, mean_l = 0.0;
  for (const auto& p : b.points) {
    const double rs = pde_residual<2>(us, coords<2>(p), c.alpha_s);
    const double rl = pde_residual<2>(ul, coords<2>(p), c.alpha_l);
    mean_s += rs * rs / 3.0;
    mean_l += rl * rl / 3.0;
  }
  const auto [ps, pl] = masked_pde_losses<2>(f, b, c);
  EXPECT_NEAR(ps, 0.25 * mean_s, 1e-15);
  EXPECT_NEAR(pl, 0.25 * mean_l, 1e-15);
}

TEST(MaskedPde, ThreePointHandBatch) {
  // u_s = sin(x) t: residual sin(x) + α_s sin(x) t. u_l = x³: residual −6 α_l x.
  PhysicsConfig c = cfg1();
  c.alpha_s = 0.5;
  c.alpha_l = 2.0;
  c.beta = 20.0;
  const auto us = fn_field<2>([](const A2& p) { return sin(p[0]) * p[1]; });
  const auto ul = fn_field<2>([](const A2& p) { return p[0] * p[0] * p[0]; });
  const auto phi = fn_field<2>([](const A2& p) { return p[0] - 0.5; });
  const std::vector<SpaceTime> pts{{0.3, 0.1, 0.0}, {0.5, 0.2, 0.0}, {0.62, 0.05, 0.0}};
  double hs_sum = 0.0, hl_sum = 0.0;
  for (const auto& p : pts) {
    const double x = p[0], t = p[1];
    const double rs = std::sin(x) + 0.5 * std::sin(x) * t;
    const double rl = -6.0 * 2.0 * x;
    const double hl = sigmoid_ref(20.0 * (x - 0.5));
    hs_sum += (rs * (1.0 - hl)) * (rs * (1.0 - hl));
    hl_sum += (rl * hl) * (rl * hl);
  }
  const auto [ps, pl] = masked_pde_losses<2>(make_fields(us, ul, phi), batch_of(1, pts), c);
  EXPECT_NEAR(ps, hs_sum / 3.0, 1e-15);
  EXPECT_NEAR(pl, hl_sum / 3.0, 1e-15);
}

TEST(MaskedPde, EmptyBatchThrows) {
  const auto f = make_fields(const2(0.0), const2(0.0), const2(0.0));
  EXPECT_THROW((masked_pde_losses<2>(f, batch_of(1, {}), cfg1())), EmptyBatch);
}

// ---------------------------------------------------------------------------
// Interface equilibrium.

TEST(InterfaceLoss, MeltingTemperatureGivesZero) {
  const PhysicsConfig c = cfg2();
  const auto phi = fn_field<3>([](const A3& p) { return p[0]; });
  const auto f = make_fields(const3(c.T_m), const3(c.T_m), phi);
  const auto b = batch_of(2, {{0.0, 1.0, 1.0}, {0.3, -2.0, 2.0}});
  EXPECT_EQ(loss_interface_nd(f, b, c), 0.0);
}

TEST(InterfaceLoss, GaussianBandDecay) {
  const PhysicsConfig c = cfg2();
  const double far = 10.0 * c.eps_gamma;
  const auto f = make_fields(const3(c.T_m + 1.0), const3(c.T_m - 1.0), const3(far));
  const auto b = batch_of(2, {{0.0, 1.0, 1.0}, {0.3, -2.0, 2.0}});
  EXPECT_LT(loss_interface_nd(f, b, c), 1e-40 * 2.0);
}

TEST(InterfaceLoss, TwoPointHandBatch) {
  PhysicsConfig c = cfg2();
  c.eps_gamma = 0.5;
  c.T_m = 0.25;
  const auto us = fn_field<3>([](const A3& p) { return p[0] + p[2]; });
  const auto ul = fn_field<3>([](const A3& p) { return 2.0 * p[1]; });
  const auto phi = fn_field<3>([](const A3& p) { return p[0] - p[1]; });
  const std::vector<SpaceTime> pts{{0.1, 0.3, 1.0}, {-0.2, 0.1, 2.0}};
  double expect = 0.0;
  for (const auto& p : pts) {
    const double ds = p[0] + p[2] - 0.25;
    const double dl = 2.0 * p[1] - 0.25;
    const double ph = p[0] - p[1];
    expect += (ds * ds + dl * dl) * std::exp(-ph * ph / 0.25);
  }
  EXPECT_NEAR(loss_interface_nd(make_fields(us, ul, phi), batch_of(2, pts), c), expect / 2.0, 1e-15);
}

// ---------------------------------------------------------------------------
// Stefan velocity and its extension.

TEST(StefanVelocity, ConstantTemperaturesGiveZero) {
  const PhysicsConfig c = cfg2();
  EXPECT_EQ(stefan_velocity(const3(1.0), const3(-1.0), {0.5, 0.5, 1.0}, {0.6, 0.8}, c), 0.0);
}

TEST(StefanVelocity, LinearLiquidField) {
  const PhysicsConfig c = unit_props_2d();
  const double g = 2.5;
  const auto ul = fn_field<3>([g](const A3& p) { return g * (0.6 * p[0] + 0.8 * p[1]); });
  EXPECT_NEAR(stefan_velocity(const3(0.0), ul, {0.5, 0.5, 1.0}, {0.6, 0.8}, c), -g, 1e-14);
}

TEST(StefanVelocity, NonUnitNormalThrows) {
  const PhysicsConfig c = cfg2();
  EXPECT_THROW(stefan_velocity(const3(1.0), const3(1.0), {0.5, 0.5, 1.0}, {0.6, 0.9}, c), DegenerateGradient);
}

TEST(StefanVelocity, FrankInterfaceSpeed) {
  const PhysicsConfig c = cfg2();
  const auto f = oracle_fields_2d(c);
  for (double t : {1.0, 1.7, 2.5, 3.0}) {
    const double R = c.R0 * std::sqrt(t);
    const double expect = c.R0 / (2.0 * std::sqrt(t));
    for (double th : {0.0, 1.0, 2.5, 4.0}) {
      const std::array<double, 3> x{R * std::cos(th), R * std::sin(th), t};
      const auto n = unit_normal(f.phi, x);
      const double v = stefan_velocity(f.u_s, f.u_l, x, n, c);
      EXPECT_LT(std::abs(v - expect) / expect, 1e-4) << "t=" << t;

      // Same balance with the radial derivative by central differences.
      const Frank2D sol(c);
      const double h = 1e-5;
      const double dudr = (sol.liquid_r2((R + h) * (R + h), t) - sol.liquid_r2((R - h) * (R - h), t)) / (2.0 * h);
      const double v_fd = -c.k_l * dudr / (c.rho_s * c.latent);
      EXPECT_LT(std::abs(v_fd - expect) / expect, 1e-4);
    }
  }
}

TEST(ExtendVelocity, PointOnInterfaceUsesLocalSpeed) {
  const PhysicsConfig c = cfg2();
  const auto f = oracle_fields_2d(c);
  const double t = 2.0, R = c.R0 * std::sqrt(t);
  const std::array<double, 3> x{R * std::cos(0.7), R * std::sin(0.7), t};
  const double local = stefan_velocity(f.u_s, f.u_l, x, unit_normal(f.phi, x), c);
  EXPECT_NEAR(extend_velocity(f, x, c), local, 1e-12 * std::abs(local));
}

TEST(ExtendVelocity, RayConstancyOnExactFields) {
  const PhysicsConfig c = cfg2();
  const auto f = oracle_fields_2d(c);
  for (double t : {1.0, 2.0, 3.0}) {
    const double R = c.R0 * std::sqrt(t);
    for (double th : {0.3, 2.0, 4.4}) {
      const auto at = [&](double r) {
        return extend_velocity(f, {r * std::cos(th), r * std::sin(th), t}, c);
      };
      const double ref = at(R + 0.3);
      for (double r : {R - 0.6, R + 1.1, R + 2.0}) EXPECT_NEAR(at(r), ref, 1e-10);
      EXPECT_NEAR(ref, c.R0 / (2.0 * std::sqrt(t)), 1e-4);
    }
  }
}

TEST(ExtendVelocity, DegenerateGradientIsReported) {
  const PhysicsConfig c = cfg2();
  const auto f = make_fields(const3(0.0), const3(0.0), const3(0.2));
  try {
    extend_velocity(f, {0.5, -1.5, 2.0}, c);
    FAIL() << "expected DegenerateGradient";
  } catch (const DegenerateGradient& e) {
    EXPECT_EQ(e.x(), 0.5);
    EXPECT_EQ(e.y(), -1.5);
    EXPECT_EQ(e.t(), 2.0);
  }
}

TEST(ExtendVelocity, ProjectionOutsideDomainIsClamped) {
  const PhysicsConfig c = cfg2();
  const auto phi = fn_field<3>([](const A3& p) { return p[0] - 100.0; });
  const auto f = make_fields(const3(0.0), const3(0.0), phi);
  bool clamped = false;
  EXPECT_EQ(extend_velocity(f, {1.0, 0.0, 1.5}, c, &clamped), 0.0);
  EXPECT_TRUE(clamped);
}

// ---------------------------------------------------------------------------
// Advection and eikonal.

TEST(Advection, StaticInterfaceGivesZero) {
  const PhysicsConfig c = cfg2();
  const auto phi = fn_field<3>([](const A3& p) { return p[0] + 0.5 * p[1]; });
  const auto f = make_fields(const3(1.0), const3(2.0), phi);
  const auto b = batch_of(2, {{0.5, 0.5, 1.0}, {-1.0, 2.0, 2.0}, {3.0, -4.0, 3.0}});
  EXPECT_EQ(loss_advection(f, b, c), 0.0);
}

TEST(Advection, ExactFrankFieldsAreConsistent) {
  const PhysicsConfig c = cfg2();
  const auto f = oracle_fields_2d(c);
  Rng rng(21);
  SampleBatch b = batch_of(2, {});
  while (b.size() < 50) {
    const SpaceTime p = uniform_point(c, rng);
    if (std::hypot(p[0], p[1]) > 0.2) b.points.push_back(p);
  }
  EXPECT_LT(loss_advection(f, b, c), 1e-6);
}

TEST(Advection, OnePointHandCase) {
  // φ = x + t: φ_t = 1, |∇φ| = 1. u_l = −2x with unit properties: F = 2.
  const PhysicsConfig c = unit_props_2d();
  const auto phi = fn_field<3>([](const A3& p) { return p[0] + p[2]; });
  const auto ul = fn_field<3>([](const A3& p) { return -2.0 * p[0]; });
  const auto f = make_fields(const3(0.0), ul, phi);
  EXPECT_NEAR(loss_advection(f, batch_of(2, {{0.5, 1.0, 1.5}}), c), 9.0, 1e-13);
}

TEST(Advection, DegeneratePointsContributeZeroAndAreCounted) {
  const PhysicsConfig c = cfg2();
  const auto f = make_fields(const3(0.0), const3(1.0), const3(0.3));
  PhysicsDiagnostics d;
  EXPECT_EQ(loss_advection(f, batch_of(2, {{0.5, 1.0, 1.5}, {1.0, 1.0, 2.0}}), c, &d), 0.0);
  EXPECT_EQ(d.degenerate_gradient, 2u);
}

TEST(Eikonal, ExactSdfVanishes) {
  const PhysicsConfig c = cfg2();
  const CircleSdfField sdf{c};
  Rng rng(5);
  SampleBatch b = batch_of(2, {});
  while (b.size() < 100) {
    const SpaceTime p = uniform_point(c, rng);
    if (std::hypot(p[0], p[1]) > 1e-3) b.points.push_back(p);
  }
  EXPECT_LT(loss_eikonal<3>(sdf, b), 1e-12);
}

TEST(Eikonal, ConstantAndSteepFields) {
  const auto b = batch_of(2, {{0.5, 1.0, 1.5}, {1.0, -1.0, 2.0}});
  EXPECT_EQ(loss_eikonal<3>(const3(2.0), b), 1.0);
  EXPECT_NEAR(loss_eikonal<3>(fn_field<3>([](const A3& p) { return 2.0 * p[0]; }), b), 1.0, 1e-15);
  const auto b1 = batch_of(1, {{0.5, 0.1, 0.0}});
  EXPECT_NEAR(loss_eikonal<2>(fn_field<2>([](const A2& p) { return 2.0 * p[0]; }), b1), 1.0, 1e-15);
}

// ---------------------------------------------------------------------------
// Boundary and initial data.

TEST(BoundaryLoss, OracleFieldsMatchTargets) {
  const PhysicsConfig c = cfg1();
  const ExactSolution exact(c);
  Rng rng(8);
  const SampleBatch b = sample_boundary(64, exact, rng);
  EXPECT_LT(loss_bc<2>(oracle_fields_1d(c), b, c), 1e-12);

  const PhysicsConfig c2 = cfg2();
  const ExactSolution exact2(c2);
  const SampleBatch b2 = sample_boundary(64, exact2, rng);
  EXPECT_LT(loss_bc<3>(oracle_fields_2d(c2), b2, c2), 1e-12);
}

TEST(BoundaryLoss, ZeroFieldsOnLeftBoundary) {
  const PhysicsConfig c = cfg1();
  const ExactSolution exact(c);
  SampleBatch b = batch_of(1, {{0.0, 0.0, 0.0}, {0.0, 0.1, 0.0}, {0.0, 0.25, 0.0}});
  b.kind = BatchKind::boundary;
  for (const auto& p : b.points) b.temperature.push_back(exact.temperature(p));
  for (double v : b.temperature) EXPECT_NEAR(v, -1.0, 1e-15);
  const auto f = make_fields(const2(0.0), const2(0.0), fn_field<2>([](const A2& p) { return p[0] - 0.3; }));
  EXPECT_NEAR(loss_bc<2>(f, b, c), 1.0, 1e-15);
}

TEST(BoundaryLoss, TwoPointHandBatch) {
  const PhysicsConfig c = cfg1();
  SampleBatch b = batch_of(1, {{0.0, 0.1, 0.0}, {1.0, 0.2, 0.0}});
  b.temperature = {1.0, 4.0};
  const auto f = make_fields(const2(2.0), const2(2.0), fn_field<2>([](const A2& p) { return p[0] - 0.3; }));
  EXPECT_NEAR(loss_bc<2>(f, b, c), 2.5, 1e-15);
}

TEST(BoundaryLoss, NeumannDataUsesComposedNormalDerivative) {
  PhysicsConfig c = cfg1();
  SampleBatch b = batch_of(1, {{1.0, 0.1, 0.0}});
  b.temperature = {3.0};
  b.flux = {1.0};
  b.normals = {{1.0, 0.0}};
  const auto u = fn_field<2>([](const A2& p) { return 3.0 * p[0]; });
  const auto f = make_fields(u, u, fn_field<2>([](const A2& p) { return p[0] - 0.3; }));
  // Both phases equal 3x: the value matches and the normal slope misses by 2.
  EXPECT_NEAR(loss_bc<2>(f, b, c), 4.0, 1e-12);
}

TEST(BoundaryLoss, MissingOrEmptyTargetsThrow) {
  const PhysicsConfig c = cfg1();
  const auto f = make_fields(const2(0.0), const2(0.0), const2(0.0));
  EXPECT_THROW(loss_bc<2>(f, batch_of(1, {}), c), EmptyBatch);
  EXPECT_THROW(loss_bc<2>(f, batch_of(1, {{0.0, 0.1, 0.0}}), c), EmptyBatch);
  EXPECT_THROW(loss_ic<2>(f, batch_of(1, {{0.5, 0.0, 0.0}}), c), EmptyBatch);
}

TEST(InitialLoss, OracleFieldsMatchTargets) {
  // A sharp mask keeps the smoothing mismatch near the interface negligible.
  PhysicsConfig c = cfg1();
  c.beta = 1e6;
  const ExactSolution exact(c);
  Rng rng(9);
  const SampleBatch b = sample_initial(64, exact, rng);
  EXPECT_LT(loss_ic<2>(oracle_fields_1d(c), b, c), 1e-12);

  const PhysicsConfig c2 = cfg2();
  const ExactSolution exact2(c2);
  const SampleBatch b2 = sample_initial(64, exact2, rng);
  EXPECT_LT(loss_ic<3>(oracle_fields_2d(c2), b2, c2), 1e-12);
}

TEST(InitialLoss, TwoPointHandBatch) {
  const PhysicsConfig c = cfg1();
  SampleBatch b = batch_of(1, {{0.3, 0.0, 0.0}, {0.6, 0.0, 0.0}});
  b.temperature = {1.0, 2.0};
  b.phi = {0.3, 0.5};
  const auto f = make_fields(const2(2.0), const2(2.0), fn_field<2>([](const A2& p) { return p[0]; }));
  EXPECT_NEAR(loss_ic<2>(f, b, c), (1.0 + 0.0 + 0.0 + 0.01) / 2.0, 1e-15);
}

TEST(OriginPin, HandValue) {
  const PhysicsConfig c = cfg2();
  const auto f = make_fields(const3(c.T_m + 0.5), const3(c.T_m + 0.5), fn_field<3>([](const A3& p) { return p[0]; }));
  const std::vector<double> times{1.0, 2.0};
  EXPECT_NEAR(loss_origin_pin(f, times, c), 0.25, 1e-15);
  EXPECT_NEAR(loss_origin_pin(oracle_fields_2d(c), times, c), 0.0, 1e-20);
}

// ---------------------------------------------------------------------------
// 1D interface conditions.

TEST(Interface1D, OracleFieldsSatisfyBothConditions) {
  const PhysicsConfig c = cfg1();
  const auto f = oracle_fields_1d(c);
  std::vector<double> times;
  for (int i = 0; i <= 20; ++i) times.push_back(c.t_start + (c.t_end - c.t_start) * i / 20.0);
  EXPECT_LT(loss_stefan_1d(f, times, c), 1e-6);
  EXPECT_LT(loss_continuity_1d(f, times, c), 1e-6);
}

TEST(Interface1D, ConstantFieldsAreConsistent) {
  const PhysicsConfig c = cfg1();
  const auto s = fn_field<1>([](const std::array<J, 1>&) { return J(0.4); });
  const auto f = make_fields(const2(c.T_m), const2(c.T_m), InterfacePhi1D<decltype(s)>{s});
  const std::vector<double> times{0.0, 0.1, 0.2};
  EXPECT_EQ(loss_stefan_1d(f, times, c), 0.0);
  EXPECT_EQ(loss_continuity_1d(f, times, c), 0.0);
}

TEST(Interface1D, UnitFrontSpeedWithoutFluxes) {
  PhysicsConfig c = cfg1();
  c.rho_s = 2.0;
  c.latent = 0.25;
  const auto s = fn_field<1>([](const std::array<J, 1>& t) { return 2.0 * t[0] + 0.1; });
  const auto f = make_fields(const2(1.0), const2(-1.0), InterfacePhi1D<decltype(s)>{s});
  const std::vector<double> times{0.0, 0.1, 0.2};
  EXPECT_NEAR(loss_stefan_1d(f, times, c), 1.0, 1e-15);
  EXPECT_NEAR(loss_continuity_1d(f, times, c), 2.0, 1e-15);
  EXPECT_THROW(loss_stefan_1d(f, std::vector<double>{}, c), EmptyBatch);
}

TEST(Interface1D, PhiFromInterfaceNet) {
  const auto s = fn_field<1>([](const std::array<J, 1>& t) { return square(t[0]) + 0.2; });
  const InterfacePhi1D<decltype(s)> phi{s};
  const auto j = phi.jet(std::array<double, 2>{0.5, 0.3}, JetRequest::second(3));
  EXPECT_NEAR(j.v, 0.5 - 0.29, 1e-15);
  EXPECT_EQ(j.d1[0], 1.0);
  EXPECT_NEAR(j.d1[1], -0.6, 1e-15);
  EXPECT_EQ(j.d2[0], 0.0);
  EXPECT_NEAR(j.d2[1], -2.0, 1e-15);
}

// ---------------------------------------------------------------------------
// Assembly.

Batches small_batches(const PhysicsConfig& c, std::size_t n_dom, std::uint64_t seed) {
  const ExactSolution exact(c);
  Rng rng(seed);
  Batches b;
  b.domain = sample_uniform(n_dom, c, rng);
  b.boundary = sample_boundary(6, exact, rng);
  b.initial = sample_initial(5, exact, rng);
  return b;
}

TEST(AssembleLoss, ZeroWeightsStillReportTerms) {
  const PhysicsConfig c = cfg1();
  const StefanModel m = make_model(c, NetworkSpec::for_problem(c.problem), 4);
  const LossWeights w{0, 0, 0, 0, 0, 0, 0, 0, 0, 0};
  const LossBreakdown l = model_loss(m, small_batches(c, 10, 1), c, w);
  EXPECT_EQ(l.total, 0.0);
  EXPECT_GT(l.bc, 0.0);
  EXPECT_GT(l.ic, 0.0);
}

TEST(AssembleLoss, WeightedTotalArithmetic) {
  LossBreakdown l;
  l.weights = LossWeights{1, 1, 1, 1, 1, 1, 1, 1, 1, 1};
  l.pde_s = 0.5;
  l.bc = 0.25;
  EXPECT_EQ(l.weighted_sum(), 0.75);
}

TEST(AssembleLoss, InactiveTermsAreZeroIn1D) {
  const PhysicsConfig c = cfg1();
  const StefanModel m = make_model(c, NetworkSpec::for_problem(c.problem), 4);
  const LossBreakdown l = model_loss(m, small_batches(c, 10, 1), c, {});
  EXPECT_EQ(l.interface, 0.0);
  EXPECT_EQ(l.advection, 0.0);
  EXPECT_EQ(l.eikonal, 0.0);
  EXPECT_EQ(l.origin_pin, 0.0);
  EXPECT_EQ(l.total, l.weighted_sum());
}

TEST(AssembleLoss, OriginPinCanBeDisabled) {
  PhysicsConfig c = cfg2();
  c.origin_pin = false;
  const StefanModel m = make_model(c, NetworkSpec::for_problem(c.problem), 4);
  EXPECT_EQ(model_loss(m, small_batches(c, 10, 2), c, {}).origin_pin, 0.0);
}

void expect_close(double a, double b) { EXPECT_LE(std::abs(a - b), 1e-15 * std::max(1.0, std::abs(b))); }

TEST(AssembleLoss, TwoDimensionalAssemblyEqualsIndividualTerms) {
  const PhysicsConfig c = cfg2();
  const StefanModel m = make_model(c, NetworkSpec::for_problem(c.problem), 6);
  const Batches b = small_batches(c, 10, 3);
  const auto f = net_fields_2d(m);
  const LossBreakdown l = assemble_loss<3>(f, b, c);
  const auto [ps, pl] = masked_pde_losses<3>(f, b.domain, c);
  expect_close(l.pde_s, ps);
  expect_close(l.pde_l, pl);
  expect_close(l.interface, loss_interface_nd(f, b.domain, c));
  expect_close(l.advection, loss_advection(f, b.domain, c));
  expect_close(l.eikonal, loss_eikonal<3>(f.phi, b.domain));
  expect_close(l.bc, loss_bc<3>(f, b.boundary, c));
  expect_close(l.ic, loss_ic<3>(f, b.initial, c));
  expect_close(l.origin_pin, loss_origin_pin(f, batch_times(b.boundary), c));
  EXPECT_EQ(l.stefan_1d, 0.0);
  EXPECT_EQ(l.continuity_1d, 0.0);
  EXPECT_EQ(l.total, l.weighted_sum());
}

TEST(AssembleLoss, OneDimensionalAssemblyEqualsIndividualTerms) {
  const PhysicsConfig c = cfg1();
  const StefanModel m = make_model(c, NetworkSpec::for_problem(c.problem), 6);
  const Batches b = small_batches(c, 10, 3);
  const auto f = net_fields_1d(m);
  const LossBreakdown l = assemble_loss<2>(f, b, c);
  const auto [ps, pl] = masked_pde_losses<2>(f, b.domain, c);
  expect_close(l.pde_s, ps);
  expect_close(l.pde_l, pl);
  expect_close(l.stefan_1d, loss_stefan_1d(f, batch_times(b.domain), c));
  expect_close(l.continuity_1d, loss_continuity_1d(f, batch_times(b.domain), c));
  expect_close(l.bc, loss_bc<2>(f, b.boundary, c));
  expect_close(l.ic, loss_ic<2>(f, b.initial, c));
}

TEST(AssembleLoss, MissingBatchThrows) {
  const PhysicsConfig c = cfg1();
  const StefanModel m = make_model(c, NetworkSpec::for_problem(c.problem), 6);
  Batches b = small_batches(c, 10, 3);
  b.initial.points.clear();
  EXPECT_THROW(model_loss(m, b, c, {}), EmptyBatch);
}

TEST(AssembleLoss, NonNegativeTerms) {
  for (auto p : {Problem::stefan1d, Problem::stefan2d}) {
    const PhysicsConfig c = p == Problem::stefan1d ? cfg1() : cfg2();
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const StefanModel m = make_model(c, NetworkSpec::for_problem(p), seed);
      const LossBreakdown l = model_loss(m, small_batches(c, 12, seed), c, {});
      for (double v : {l.pde_s, l.pde_l, l.interface, l.advection, l.eikonal, l.bc, l.ic, l.stefan_1d, l.continuity_1d,
                       l.origin_pin})
        EXPECT_GE(v, 0.0);
    }
  }
}

TEST(AssembleLoss, OracleFieldsGiveSmallResidualLoss) {
  PhysicsConfig c = cfg1();
  c.beta = 1e6;
  const LossBreakdown l = model_loss(make_oracle_model(c.problem), small_batches(c, 50, 4), c, {});
  EXPECT_LT(l.stefan_1d, 1e-12);
  EXPECT_LT(l.continuity_1d, 1e-12);
  EXPECT_LT(l.bc, 1e-12);
  EXPECT_LT(l.ic, 1e-12);
}

// ---------------------------------------------------------------------------
// Parameter gradients.

TEST(LossGradient, TapedTotalMatchesPlainAssembly) {
  for (auto p : {Problem::stefan1d, Problem::stefan2d}) {
    const PhysicsConfig c = p == Problem::stefan1d ? cfg1() : cfg2();
    const StefanModel m = make_model(c, NetworkSpec::for_problem(p), 7);
    const Batches b = small_batches(c, 8, 5);
    std::vector<double> g(m.num_params());
    const LossBreakdown a = model_loss(m, b, c, {});
    const LossBreakdown t = model_loss_and_gradient(m, b, c, {}, g);
    EXPECT_NEAR(t.total, a.total, 1e-12 * std::max(1.0, a.total));
    EXPECT_NEAR(t.advection, a.advection, 1e-12 * std::max(1.0, a.advection));
  }
}

TEST(LossGradient, EveryTermMatchesFiniteDifferences1D) {
  for (const auto& r : sk_test::check_term_gradients(cfg1(), 31))
    EXPECT_LE(r.worst_excess, 1.0) << r.term << " param " << r.worst_param << ": " << r.analytic << " vs "
                                   << r.numeric;
}

TEST(LossGradient, EveryTermMatchesFiniteDifferences2D) {
  for (const auto& r : sk_test::check_term_gradients(cfg2(), 32))
    EXPECT_LE(r.worst_excess, 1.0) << r.term << " param " << r.worst_param << ": " << r.analytic << " vs "
                                   << r.numeric;
}

TEST(LossGradient, BufferLengthIsChecked) {
  const PhysicsConfig c = cfg1();
  const StefanModel m = make_model(c, NetworkSpec::for_problem(c.problem), 7);
  std::vector<double> g(3);
  EXPECT_THROW(model_loss_and_gradient(m, small_batches(c, 8, 5), c, {}, g), ShapeError);
  EXPECT_THROW(model_loss_and_gradient(make_oracle_model(c.problem), small_batches(c, 8, 5), c, {}, g),
               UnsupportedOperation);
}

}  // namespace
