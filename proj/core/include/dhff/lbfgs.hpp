#pragma once

#include <functional>
#include <span>
#include <vector>

namespace dhff {

struct LbfgsConfig {
  // Number of correction pairs kept for the inverse-Hessian approximation.
  int memory = 10;
  // Hard cap on accepted iterations.
  int max_iters = 200;
  // Convergence test: ||g|| <= grad_tol * max(1, ||x||).
  double grad_tol = 1e-5;
  // Strong Wolfe constants: sufficient decrease c1, curvature c2.
  double c1 = 1e-4;
  double c2 = 0.9;
  // Function evaluations allowed per line search.
  int max_linesearch = 40;
};

enum class LbfgsStatus {
  GradTol,           // gradient norm test satisfied
  AlreadyMinimized,  // x0 satisfied the gradient test, 0 iterations
  MaxIters,
  LineSearchFailed,  // no acceptable step; best iterate returned
  NonFinite,         // objective returned NaN/inf; best iterate returned
};

struct LbfgsResult {
  std::vector<double> x;  // best iterate seen
  double f = 0.0;         // objective at x
  int iterations = 0;     // accepted steps
  LbfgsStatus status = LbfgsStatus::GradTol;
  // Objective after each accepted step, starting with f(x0). Accepted
  // values are non-increasing by the sufficient-decrease condition.
  std::vector<double> history;
};

// Objective evaluates f(x) and writes the gradient into grad (same size
// as x). Must be deterministic during one minimize call.
using Objective =
    std::function<double(std::span<const double> x, std::span<double> grad)>;

// Limited-memory BFGS with two-loop recursion and a strong-Wolfe line
// search (bracket + zoom with cubic interpolation). A line search that
// finds no acceptable step terminates the run; the best iterate seen is
// returned rather than an error, since plateaus near minima are expected.
LbfgsResult lbfgs_minimize(const Objective& objective, std::vector<double> x0,
                           const LbfgsConfig& cfg);

}  // namespace dhff
