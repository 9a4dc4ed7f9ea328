#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "otest/error.hpp"
#include "otest/optimizer.hpp"

using namespace otest;
using otest::testing::kUniform10Delta;
using otest::testing::uniform10_model;

TEST(Kappa, DegenerateAndSingleBranch) {
  ClassSolution flat{0.1, 10, 0.3, 0.1, 0.1, 0.0, 0.0};
  for (std::size_t i = 0; i < 30; ++i) EXPECT_NEAR(kappa(flat, 10.0, i), 0.0, 1e-14);

  ClassSolution lower{0.1, 10, 1.0, 0.04, 0.3, 0.0, 0.0};
  for (std::size_t i = 0; i < 30; ++i)
    EXPECT_NEAR(kappa(lower, 10.0, i), 10.0 * (0.1 - 0.04) + i * std::log(0.04 / 0.1), 1e-12);
}

TEST(ClassObjective, IdentityCaseIsZero) {
  const auto plan = working_plan(uniform_hypothesis(10), 10.0);
  EXPECT_NEAR(class_objective(0.1, 10, 0.4, 0.1, 0.1, -1.0, 0.5, 10.0, plan), 0.0, 1e-13);
}

TEST(ClassObjective, SmallAlphaStartIsNegative) {
  // The outer value at the symmetric start beats zero once alpha is small.
  const double y = 0.1, k = 10.0, u = 0.5, eps = 0.9;
  const auto plan = working_plan(uniform_hypothesis(10), k);
  for (double alpha : {-1e-2, -1e-3}) {
    const double tau = std::cbrt(-alpha * y * y / (u * k * k));
    EXPECT_LT(eps * alpha * (1 - u) + class_objective(y, 10, 0.5, y - tau, y + tau, alpha, u, k, plan), 0.0);
  }
}

TEST(ClassObjective, TruncationIsNegligible) {
  const auto plan = working_plan(uniform_hypothesis(10), 10.0);
  TruncationPlan longer = plan;
  longer.i_max += 50;
  const double a = class_objective(0.1, 10, 0.37, 0.02, 0.31, -1.5, 0.46, 10.0, plan);
  const double b = class_objective(0.1, 10, 0.37, 0.02, 0.31, -1.5, 0.46, 10.0, longer);
  EXPECT_NEAR(a, b, 1e-10);
}

TEST(InnerMaximize, InteriorAndGridDominates) {
  const auto& m = uniform10_model();
  const auto plan = m.truncation;
  const double y = 0.1;
  const ClassSolution s = inner_maximize(y, 1, m.alpha, m.u, m.k, plan, 1e-10);
  EXPECT_LT(s.x1, y);
  EXPECT_GT(s.x2, y);
  EXPECT_GT(s.q, 0.0);
  EXPECT_LT(s.q, 1.0);

  const double cap = x2_cap(y, m.k);
  double best_grid = -INFINITY;
  for (int a = 0; a < 40; ++a) {
    const double q = (a + 0.5) / 40.0;
    for (int b = 0; b < 40; ++b) {
      const double x1 = y * b / 39.0;
      for (int c = 0; c < 40; ++c) {
        const double x2 = y + (cap - y) * std::pow(c / 39.0, 3.0);
        best_grid = std::max(best_grid, class_objective(y, 1, q, x1, x2, m.alpha, m.u, m.k, plan));
      }
    }
  }
  EXPECT_LE(best_grid, s.F_value + 1e-6);

  const double tau = std::cbrt(-m.alpha * y * y / (m.u * m.k * m.k));
  if (tau < y) EXPECT_LE(class_objective(y, 1, 0.5, y - tau, y + tau, m.alpha, m.u, m.k, plan), s.F_value);
}

TEST(OuterObjective, OptimumAndSmallAlpha) {
  const auto p = uniform_hypothesis(10);
  const auto plan = working_plan(p, 10.0);
  const auto& m = uniform10_model();
  EXPECT_NEAR(outer_objective(m.alpha, m.u, p, 10.0, 0.9, plan, 1e-10), m.delta_log, 1e-9);
  EXPECT_LT(outer_objective(-1e-3, 0.5, p, 10.0, 0.9, plan, 1e-10), 0.0);
  EXPECT_LT(outer_objective(-1e-5, 0.5, p, 10.0, 0.9, plan, 1e-10), 0.0);
  EXPECT_EQ(outer_objective(-1.2, 0.4, p, 10.0, 0.9, plan, 1e-10),
            outer_objective(-1.2, 0.4, p, 10.0, 0.9, plan, 1e-10));
}

TEST(Optimize, UniformTenReference) {
  const auto& m = uniform10_model();
  EXPECT_NEAR(m.delta_log, kUniform10Delta, 1e-6);
  EXPECT_LT(m.alpha, 0.0);
  EXPECT_GT(m.u, 0.0);
  EXPECT_LT(m.u, 1.0);
  EXPECT_FALSE(m.starts_disagreed);

  const auto st = stationarity(m);
  EXPECT_LT(st.alpha_residual, 1e-6);
  for (double r : st.q_residuals) EXPECT_LT(std::abs(r), 1e-6);
  EXPECT_LT(std::abs(st.u_residual), 1e-5);
  EXPECT_LT(st.tangency_max_violation, 1e-8);
  EXPECT_LT(st.tangency_point_gap, 1e-8);
  EXPECT_GE(st.kappa_min_second_difference, -1e-12);
  EXPECT_LT(std::abs(st.s_derivative_at_zero), 1e-6);
}

TEST(Optimize, SubdivisionScaling) {
  const auto sub = optimize(subdivide(uniform_hypothesis(10), 3), 30.0, 0.9);
  EXPECT_NEAR(sub.delta_log / (3.0 * uniform10_model().delta_log), 1.0, 1e-6);
}

TEST(Optimize, RejectsZeroEps) {
  try {
    optimize(uniform_hypothesis(10), 10.0, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kEpsOutOfRange);
  }
}

TEST(Shift, ExponentsMatchDelta) {
  const auto& m = uniform10_model();
  EXPECT_NEAR(type1_exponent(m), m.delta_log, 1e-8);
  EXPECT_NEAR(type2_exponent_dual(m), m.delta_log, 1e-8);
  EXPECT_NEAR(type2_exponent_primal(m), m.delta_log, 1e-8);

  const auto terms = compute_shift_terms(m);
  EXPECT_NEAR(terms.shift, m.shift, 1e-12);
  EXPECT_NEAR(terms.shift, (terms.t1 - terms.t2) / static_cast<double>(m.n()), 1e-12);
}

TEST(Gamma, DominatesAndTouchesTwice) {
  const auto& m = uniform10_model();
  for (const auto& c : m.classes) {
    EXPECT_LE(g_of_class(c, m.u, m.k, c.y), c.gamma + 1e-12);
    const double left = g_of_class(c, m.u, m.k, c.x1) - m.alpha * (c.y - c.x1);
    const double right = g_of_class(c, m.u, m.k, c.x2) - m.alpha * (c.x2 - c.y);
    EXPECT_NEAR(left, right, 1e-8);
    EXPECT_NEAR(gamma_of_class(c, m.alpha, m.u, m.k, m.truncation), c.gamma, 1e-10);
  }
}
