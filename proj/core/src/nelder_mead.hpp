#pragma once

#include <functional>
#include <span>
#include <vector>

namespace otest::detail {

struct SimplexResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

using Objective = std::function<double(std::span<const double>)>;

// Minimizes f with GSL's nmsimplex2, stopping when the simplex size falls
// below size_tol.
SimplexResult simplex_minimize(const Objective& f, std::vector<double> x0, double initial_step,
                               double size_tol, int max_iter);

}  // namespace otest::detail
