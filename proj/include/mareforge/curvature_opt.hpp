#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mareforge {

struct CurvatureSpec {
  double d = 0.0;       // target |second difference|
  double w_s = 1.0;     // curvature weight
  double w_eps = 1.0;   // fidelity to the simulated errors
  double d_max = 0.0;   // big-M bound on |second difference|; 0 means 4 cap
  double gap = 0.05;    // relative optimality gap
  std::size_t node_budget = 10000;

  /// Throws DomainError unless the weights are nonnegative with a positive
  /// sum, d >= 0, gap >= 0 and d_max (after defaulting) >= 4 cap.
  void validate(double cap) const;
};

struct CurvatureSolution {
  std::vector<double> y;
  double objective = 0.0;
  double bound = 0.0;         // best proven lower bound
  double gap_achieved = 0.0;  // (objective - bound) / objective, 0 if objective is 0
  std::vector<bool> b;        // sign pattern, true where the second difference is >= 0
  std::vector<double> lambda_plus;
  std::vector<double> lambda_minus;
  std::size_t nodes = 0;
  double seconds = 0.0;
};

/// s_i = y_{i+2} - 2 y_{i+1} + y_i for i = 0 .. n-3. Throws DomainError for n < 3.
std::vector<double> second_difference(std::span<const double> y);

/// w_eps sum (y_i - x_i - eps_i)^2 + w_s sum (|s_i| - d)^2.
double curvature_objective(std::span<const double> y, std::span<const double> x,
                           std::span<const double> eps_tilde,
                           const CurvatureSpec& spec);

/// Solves
///   min  w_eps sum (y_i - x_i - eps_i)^2 + w_s sum (lp_i + lm_i - d)^2
///   s.t. lp_i - lm_i = s_i(y), 0 <= lp_i <= b_i d_max, 0 <= lm_i <= (1 - b_i) d_max,
///        0 <= y_i <= cap, b binary
/// by depth-first branch and bound over b. `y0` seeds the incumbent; pass an
/// empty span to use clamp(x + eps).
CurvatureSolution smooth(std::span<const double> y0, std::span<const double> x,
                         std::span<const double> eps_tilde,
                         const CurvatureSpec& spec, double cap);

}  // namespace mareforge
