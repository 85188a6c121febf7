#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mareforge/beta_params.hpp"
#include "mareforge/conditional_fit.hpp"
#include "mareforge/dataio.hpp"

namespace mareforge {

/// Mean absolute value E|E| of the beta(alpha, beta) law on [l, l + s].
///
/// With t0 = clamp(-l/s, 0, 1) and mu = alpha / (alpha + beta):
///   nu = l (1 - 2 I_t0(alpha, beta)) + s mu (1 - 2 I_t0(alpha + 1, beta)).
/// nu is convex and positively homogeneous in (l, s).
double nu(double l, double s, double alpha, double beta);
inline double nu(const BetaParams& p) { return nu(p.l, p.s, p.alpha, p.beta); }

/// Largest nu over the box -x <= l <= 0, 0 <= s <= cap - x - l. Because nu is
/// convex the maximum sits on a vertex of that quadrilateral.
double m_max(double x, double alpha, double beta, double cap);

struct WeightLevel {
  double x = 0.0;
  double m_hat = 0.0;
  double omega = 0.0;
  std::size_t count = 0;  // occurrences of x in the input data
};

/// Per-level weights averaging to one over the positive inputs.
class WeightFunction {
 public:
  /// `xs` holds every input observation (repeats allowed); `m_hats` the
  /// model MAE at each. Zero inputs are ignored.
  static WeightFunction from_mae(std::span<const double> xs,
                                 std::span<const double> m_hats);

  double r_mhat() const { return r_mhat_; }
  std::span<const WeightLevel> levels() const { return levels_; }

  /// Weight of the level nearest to x among the positive inputs.
  double omega(double x) const;
  const WeightLevel& nearest(double x) const;

  /// Count-weighted mean of omega over the positive inputs.
  double mean_weight() const;

 private:
  WeightFunction(std::vector<WeightLevel> levels, double r_mhat)
      : levels_(std::move(levels)), r_mhat_(r_mhat) {}

  std::vector<WeightLevel> levels_;
  double r_mhat_ = 0.0;
};

WeightFunction weight_function(const FittedModel& model,
                               const PairedSeries& series);

/// Mean of omega over the positive SID inputs.
double plausibility_score(const WeightFunction& weights, const SidSelection& sid);

struct FeasibleRegion {
  double max_r_tilde = 0.0;
  double binding_x = 0.0;
};

/// P_SID * min over positive SID inputs of m_max(x) / (x omega(x)).
FeasibleRegion feasible_region(const WeightFunction& weights,
                               const SidSelection& sid,
                               const FittedModel& model);

struct TargetLevel {
  double x = 0.0;
  double omega_tilde = 0.0;  // zero for x == 0
  double m_tilde = 0.0;
  double m_max = 0.0;
};

struct TargetFunction {
  double r_tilde = 0.0;
  double plausibility_score = 0.0;
  double max_r_tilde = 0.0;
  std::vector<TargetLevel> levels;  // distinct SID inputs, ascending

  const TargetLevel& at(double x) const;

  /// (1/n) sum over positive SID inputs of m_tilde(x) / x, n counting only
  /// positive inputs. Equals r_tilde up to rounding.
  double expected_mare(const SidSelection& sid) const;
};

/// m_tilde(x) = r_tilde x omega(x) / P_SID for x > 0 and m_hat(0) at x = 0.
/// Throws InfeasibleTarget when r_tilde exceeds the feasible region.
TargetFunction target_function(const WeightFunction& weights,
                               const FittedModel& model,
                               const SidSelection& sid, double r_tilde);

/// Nearest point to `estimated` on the curve nu(l, s) = target inside the box
/// -x <= l <= 0, 0 <= s <= cap - x - l. Throws SolverError if no point of the
/// curve meets the box.
LocationScale solve_location(double x, double cap, ShapeParams shape,
                             LocationScale estimated, double target);

struct AdjustedLevel {
  double x = 0.0;
  BetaParams estimated;
  BetaParams adjusted;
};

struct AdjustedParams {
  std::vector<AdjustedLevel> levels;  // same order as TargetFunction::levels

  const AdjustedLevel& at(double x) const;
};

/// Re-targets each SID level's law to its MAE target keeping the shapes.
/// Zero inputs keep their estimated law.
AdjustedParams adjust_params(const FittedModel& model,
                             const TargetFunction& target);

}  // namespace mareforge
