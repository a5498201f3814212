#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace stylo {

struct LbfgsOptions {
  std::size_t max_iter = 1'000;
  std::size_t history = 10;
  double gtol = 1e-6;        // max |g_i|
  double ftol = 64 * 2.220446049250313e-16;  // relative decrease
  std::size_t max_backtracks = 60;
  double armijo_c1 = 1e-4;
};

struct LbfgsResult {
  double value = 0;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> history;  // objective after every accepted step, x0 first
};

// f(x, grad) returns the objective and fills grad. Backtracking Armijo line
// search, so the recorded objective is non-increasing. Minimizes in place.
using Objective = std::function<double(std::span<const double>, std::span<double>)>;
LbfgsResult minimize_lbfgs(const Objective& f, std::span<double> x, const LbfgsOptions& opts);

}  // namespace stylo
