#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "otest/hypothesis.hpp"
#include "otest/numerics.hpp"

namespace otest {

struct ClassSolution {
  double y = 0.0;
  std::size_t h = 0;
  double q = 0.5;
  double x1 = 0.0;
  double x2 = 0.0;
  double gamma = 0.0;
  // h times the per-class inner value, so the outer sum carries h once.
  double F_value = 0.0;
};

struct OptimalTesterModel {
  double k = 0.0;
  double eps = 0.0;
  double alpha = 0.0;
  double u = 0.5;
  double shift = 0.0;
  double delta_log = 0.0;
  std::vector<ClassSolution> classes;
  TruncationPlan truncation;
  bool starts_disagreed = false;

  std::size_t n() const;
};

struct OptimizerOptions {
  double tol = 1e-10;
  double log_tol = kDefaultLogTol;
  // Print progress of the outer search to stderr.
  bool verbose = false;
};

// Per-class pieces of the objective at fixed (q, x1, x2, alpha, u). Log
// quantities for the numerator N and the denominator D, together with
// derivatives in the natural coordinates.
struct ClassTerms {
  double log_num = 0.0;
  double log_den = 0.0;
  double value = 0.0;  // log_num - (1 - u) * log_den, no h factor
  double d_q = 0.0, d_x1 = 0.0, d_x2 = 0.0;
  double d_u = 0.0, d_alpha = 0.0;
  double q_residual = 0.0;     // dvalue/dq / (1 - u)
  double tilted_weight = 0.0;  // q e^{alpha(y-x1)} / D
  double coin_share = 0.0;     // pi_1 / (pi_1 + pi_2)
};

ClassTerms class_terms(double y, double q, double x1, double x2, double alpha, double u, double k,
                       std::size_t i_max);

// Working truncation for a hypothesis: large enough for every rate the
// search can reach.
TruncationPlan working_plan(const HypothesisModel& model, double k, double log_tol = kDefaultLogTol);

// Largest x2 the inner search will consider for a class of probability y.
double x2_cap(double y, double k);

double kappa(const ClassSolution& c, double k, std::size_t i);

// h * [log N - (1 - u) log D].
double class_objective(double y, std::size_t h, double q, double x1, double x2, double alpha, double u,
                       double k, const TruncationPlan& plan);

ClassSolution inner_maximize(double y, std::size_t h, double alpha, double u, double k,
                             const TruncationPlan& plan, double tol,
                             const std::optional<ClassSolution>& warm = std::nullopt);

double outer_objective(double alpha, double u, const HypothesisModel& model, double k, double eps,
                       const TruncationPlan& plan, double tol);

OptimalTesterModel optimize(const HypothesisModel& model, double k, double eps,
                            const OptimizerOptions& options = {});

// g(x) = log sum_i e^{-u kappa_i} poi(kx, i) and its maximizing intercept.
double g_of_class(const ClassSolution& c, double u, double k, double x);
double gamma_of_class(const ClassSolution& c, double alpha, double u, double k, const TruncationPlan& plan);

struct ShiftTerms {
  double t1 = 0.0;  // eps * alpha + sum h gamma
  double t2 = 0.0;  // sum h log sum_i e^{(1-u) kappa} poi(ky, i)
  double shift = 0.0;
};

// Requires gamma to be filled in on every class.
ShiftTerms compute_shift_terms(const OptimalTesterModel& model);
double compute_shift(const OptimalTesterModel& model);

// Chernoff exponents of the shifted tester at threshold 0.
double type1_exponent(const OptimalTesterModel& model);
// Dual form: eps alpha + sum h gamma - n u s.
double type2_exponent_dual(const OptimalTesterModel& model);
// Evaluated at the tilted fractional histogram.
double type2_exponent_primal(const OptimalTesterModel& model);

struct StationarityReport {
  double alpha_residual = 0.0;  // relative
  double u_residual = 0.0;      // central difference of the outer objective
  std::vector<double> q_residuals;
  double tangency_max_violation = 0.0;
  double tangency_point_gap = 0.0;
  double kappa_min_second_difference = 0.0;
  double s_derivative_at_zero = 0.0;
  double type1_gap = 0.0;
  double type2_gap = 0.0;
};

StationarityReport stationarity(const OptimalTesterModel& model, std::size_t grid_points = 2000);

}  // namespace otest
