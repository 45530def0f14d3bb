#pragma once

#include <Eigen/Core>

#include <functional>
#include <string>
#include <vector>

namespace spot {

struct LbfgsOptions {
  int memory = 8;
  int max_iterations = 100;
  double g_tol = 1e-4;  // stop when ||g||_2 falls below this
  double c1 = 1e-4;     // sufficient decrease
  double c2 = 0.9;      // curvature
  int max_line_search = 40;
  /// Wall-clock cap in milliseconds; <= 0 disables it.
  double max_wall_ms = 0.0;
  /// Optional initial inverse-Hessian H0, applied in place to a vector. Must
  /// be symmetric positive definite. Without it H0 is the usual scaled
  /// identity.
  std::function<void(Eigen::VectorXd&)> precondition;

  void validate() const;
};

enum class LbfgsStatus { Converged, MaxIterations, WallClock, LineSearchFailed };

const char* to_string(LbfgsStatus s);

struct LbfgsResult {
  Eigen::VectorXd x;
  double f = 0.0;
  Eigen::VectorXd g;
  int iterations = 0;
  int evaluations = 0;
  LbfgsStatus status = LbfgsStatus::Converged;
  std::vector<double> history;  // f of x0 and of every accepted iterate
};

/// Value and gradient (written into the second argument).
using Objective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

/// Limited-memory BFGS with a strong-Wolfe line search. A failed line search
/// returns the best iterate so far. Non-finite cost or gradient throws
/// ParameterError.
LbfgsResult lbfgs_minimize(const Objective& objective, const Eigen::VectorXd& x0, const LbfgsOptions& options);

}  // namespace spot
