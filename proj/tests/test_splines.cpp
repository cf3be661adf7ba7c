// Copyright 2026 The stefan-kan Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "stefan_kan/error.hpp"
#include "stefan_kan/random.hpp"
#include "stefan_kan/splines.hpp"

namespace {

using namespace stefan_kan;

// Textbook Cox–de Boor recursion over the full knot vector, one basis
// function at a time. Half-open spans, with the last span closed at hi.
double cox_de_boor(const std::vector<double>& U, int m, int p, double x, double hi) {
  if (p == 0) {
    if (x == hi) return (U[m + 1] == hi && U[m] < hi) ? 1.0 : 0.0;
    return (x >= U[m] && x < U[m + 1]) ? 1.0 : 0.0;
  }
  double out = 0.0;
  const double d1 = U[m + p] - U[m];
  const double d2 = U[m + p + 1] - U[m + 1];
  if (d1 > 0.0) out += (x - U[m]) / d1 * cox_de_boor(U, m, p - 1, x, hi);
  if (d2 > 0.0) out += (U[m + p + 1] - x) / d2 * cox_de_boor(U, m + 1, p - 1, x, hi);
  return out;
}

std::vector<double> brute_basis(const SplineGrid& g, double x) {
  std::vector<double> out;
  for (int m = 0; m < g.num_basis(); ++m) out.push_back(cox_de_boor(g.knots, m, g.degree, x, g.hi));
  return out;
}

TEST(SplineGrid, KnotsAreUniformAndPinned) {
  for (int k = 0; k <= kMaxSplineDegree; ++k) {
    const SplineGrid g = make_grid(-1.0, 1.0, 5, k);
    ASSERT_EQ(g.knots.size(), static_cast<std::size_t>(5 + 2 * k + 1));
    EXPECT_EQ(g.num_basis(), 5 + k);
    EXPECT_EQ(g.knots[k], -1.0);
    EXPECT_EQ(g.knots[k + 5], 1.0);
    for (std::size_t i = 1; i < g.knots.size(); ++i) EXPECT_NEAR(g.knots[i] - g.knots[i - 1], 0.4, 1e-15);
  }
}

TEST(SplineGrid, RejectsBadSpecs) {
  EXPECT_THROW(make_grid(1.0, 1.0, 5, 3), DomainError);
  EXPECT_THROW(make_grid(0.0, 1.0, 0, 3), DomainError);
  EXPECT_THROW(make_grid(0.0, 1.0, 5, kMaxSplineDegree + 1), DomainError);
}

TEST(BasisValues, DegreeZeroIsAnIndicator) {
  const SplineGrid g = make_grid(0.0, 1.0, 4, 0);
  const auto b = basis_values(g, 0.3);
  ASSERT_EQ(b.size(), 4u);
  EXPECT_EQ(b[0], 0.0);
  EXPECT_EQ(b[1], 1.0);
  EXPECT_EQ(b[2], 0.0);
  EXPECT_EQ(b[3], 0.0);
}

TEST(BasisValues, MatchesBruteForceRecursionAtZero) {
  const SplineGrid g = make_grid(-1.0, 1.0, 5, 3);
  const auto fast = basis_values(g, 0.0);
  const auto slow = brute_basis(g, 0.0);
  ASSERT_EQ(fast.size(), slow.size());
  for (std::size_t m = 0; m < fast.size(); ++m) EXPECT_NEAR(fast[m], slow[m], 1e-14) << "m=" << m;
}

TEST(BasisValues, MatchesBruteForceForAllDegrees) {
  Rng rng(11);
  for (int k = 0; k <= kMaxSplineDegree; ++k) {
    const SplineGrid g = make_grid(-0.7, 2.3, 6, k);
    for (int i = 0; i < 200; ++i) {
      const double x = rng.uniform(g.lo, g.hi);
      const auto fast = basis_values(g, x);
      const auto slow = brute_basis(g, x);
      for (std::size_t m = 0; m < fast.size(); ++m) ASSERT_NEAR(fast[m], slow[m], 1e-13) << "k=" << k << " x=" << x;
    }
    const auto at_hi = basis_values(g, g.hi);
    const auto slow_hi = brute_basis(g, g.hi);
    for (std::size_t m = 0; m < at_hi.size(); ++m) EXPECT_NEAR(at_hi[m], slow_hi[m], 1e-13);
  }
}

TEST(BasisValues, CubicShortcutMatchesGeneralRecurrence) {
  const SplineGrid g = make_grid(-1.0, 1.0, 5, 3);
  Rng rng(5);
  for (int i = 0; i < 500; ++i) {
    const double x = i == 0 ? g.lo : (i == 1 ? g.hi : rng.uniform(g.lo, g.hi));
    const LocalBasis a = local_basis(g, x, 3, true);
    const LocalBasis b = local_basis(g, x, 3, false);
    ASSERT_EQ(a.first, b.first);
    for (int r = 0; r <= 3; ++r)
      for (int j = 0; j <= 3; ++j) ASSERT_NEAR(a.ders[r][j], b.ders[r][j], 1e-11 * (1.0 + std::abs(b.ders[r][j])));
  }
}

TEST(BasisValues, PartitionOfUnityNonNegativityAndSupport) {
  Rng rng(3);
  for (int k = 0; k <= kMaxSplineDegree; ++k) {
    for (int G : {1, 3, 5, 9}) {
      const SplineGrid g = make_grid(-1.0, 1.0, G, k);
      for (int i = 0; i < 300; ++i) {
        const double x = rng.uniform(g.lo, g.hi);
        const auto b = basis_values(g, x);
        double s = 0.0;
        for (std::size_t m = 0; m < b.size(); ++m) {
          ASSERT_GE(b[m], 0.0);
          ASSERT_LE(b[m], 1.0 + 1e-15);
          if (x < g.knots[m] || x > g.knots[m + k + 1]) {
            ASSERT_EQ(b[m], 0.0);
          }
          s += b[m];
        }
        ASSERT_LT(std::abs(s - 1.0), 1e-12);
      }
    }
  }
}

TEST(BasisValues, NonFiniteInputCarriesCoordinate) {
  const SplineGrid g = make_grid(-1.0, 1.0, 5, 3);
  try {
    basis_values(g, std::nan(""));
    FAIL() << "expected EvaluationError";
  } catch (const EvaluationError& e) {
    EXPECT_TRUE(std::isnan(e.coordinate()));
  }
}

TEST(BasisValues, OutOfRangeClamps) {
  const SplineGrid g = make_grid(-1.0, 1.0, 5, 3);
  EXPECT_EQ(basis_values(g, 3.0), basis_values(g, 1.0));
  EXPECT_EQ(basis_values(g, -7.0), basis_values(g, -1.0));
}

TEST(BasisJets, DerivativesOfPartitionVanish) {
  const SplineGrid g = make_grid(-1.0, 1.0, 5, 3);
  Rng rng(8);
  for (int i = 0; i < 100; ++i) {
    const auto j = basis_jets(g, Jet2<double>::variable(rng.uniform(-1.0, 1.0)));
    double s1 = 0.0, s2 = 0.0;
    for (const auto& b : j) {
      s1 += b.d1;
      s2 += b.d2;
    }
    EXPECT_NEAR(s1, 0.0, 1e-12);
    EXPECT_NEAR(s2, 0.0, 1e-10);
  }
}

TEST(BasisJets, MatchFiniteDifferences) {
  const SplineGrid g = make_grid(-1.0, 1.0, 5, 3);
  Rng rng(21);
  for (int i = 0; i < 100; ++i) {
    // Stay a few steps away from knots, where the second derivative jumps.
    double x = rng.uniform(-0.999, 0.999);
    const double cell = (x + 1.0) / 0.4;
    if (std::abs(cell - std::round(cell)) < 1e-3) x += 2e-3;
    const auto j = basis_jets(g, Jet2<double>::variable(x));
    const double h1 = 1e-5, h2 = 1e-4;
    const auto p1 = basis_values(g, x + h1), m1 = basis_values(g, x - h1);
    const auto p2 = basis_values(g, x + h2), m2 = basis_values(g, x - h2), c = basis_values(g, x);
    for (std::size_t m = 0; m < j.size(); ++m) {
      const double fd1 = (p1[m] - m1[m]) / (2.0 * h1);
      const double fd2 = (p2[m] - 2.0 * c[m] + m2[m]) / (h2 * h2);
      EXPECT_LE(std::abs(j[m].d1 - fd1), 1e-6 * std::max(1.0, std::abs(fd1))) << "x=" << x << " m=" << m;
      EXPECT_LE(std::abs(j[m].d2 - fd2), 1e-4 * std::max(1.0, std::abs(fd2))) << "x=" << x << " m=" << m;
    }
  }
}

TEST(BasisJets, ChainRuleThroughArgumentJet) {
  const SplineGrid g = make_grid(-1.0, 1.0, 5, 3);
  const Jet2<double> x{0.13, 2.0, -0.5};
  const LocalBasis lb = local_basis(g, x.v, 2);
  const auto j = basis_jets(g, x);
  for (int r = 0; r < lb.count; ++r) {
    const auto& b = j[static_cast<std::size_t>(lb.first + r)];
    EXPECT_DOUBLE_EQ(b.v, lb.ders[0][r]);
    EXPECT_NEAR(b.d1, lb.ders[1][r] * 2.0, 1e-14);
    EXPECT_NEAR(b.d2, lb.ders[2][r] * 4.0 + lb.ders[1][r] * -0.5, 1e-13);
  }
}

TEST(BasisJets, LowerEdgeUsesInteriorLimit) {
  const SplineGrid g = make_grid(-1.0, 1.0, 5, 3);
  const auto at = basis_jets(g, Jet2<double>::variable(-1.0));
  const auto vals = basis_values(g, -1.0);
  const auto inside = basis_jets(g, Jet2<double>::variable(-1.0 + 1e-9));
  for (std::size_t m = 0; m < at.size(); ++m) {
    EXPECT_EQ(at[m].v, vals[m]);
    EXPECT_NEAR(at[m].d1, inside[m].d1, 1e-7);
    EXPECT_NEAR(at[m].d2, inside[m].d2, 1e-6);
  }
}

TEST(BasisJets, OutsideRangeHasZeroDerivatives) {
  const SplineGrid g = make_grid(-1.0, 1.0, 5, 3);
  for (const auto& b : basis_jets(g, Jet2<double>::variable(1.5))) {
    EXPECT_EQ(b.d1, 0.0);
    EXPECT_EQ(b.d2, 0.0);
  }
}

}  // namespace
