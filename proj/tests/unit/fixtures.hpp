#pragma once

#include "otest/adversary.hpp"
#include "otest/hypothesis.hpp"
#include "otest/optimizer.hpp"

namespace otest::testing {

// Optimized once per process; about a second.
inline const OptimalTesterModel& uniform10_model() {
  static const OptimalTesterModel m = optimize(uniform_hypothesis(10), 10.0, 0.9);
  return m;
}

inline const AdversaryModel& uniform10_adversary() {
  static const AdversaryModel a = make_adversary(uniform10_model());
  return a;
}

inline constexpr double kUniform10Delta = -0.2322850449973871;

}  // namespace otest::testing
