#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "mareforge/beta_params.hpp"
#include "mareforge/dataio.hpp"

namespace mareforge {

inline constexpr double kDefaultWindowFraction = 0.05;

/// Empirical-quantile window around one input level.
///
/// [lo, hi] = [G^-1(G(x) - a), G^-1(G(x) + a)] where G is the empirical CDF of
/// the input values; `first`/`last` delimit the half-open range of sorted
/// positions whose value lies in [lo, hi].
struct EstimationWindow {
  double lo = 0.0;
  double hi = 0.0;
  double center = 0.0;
  std::size_t first = 0;
  std::size_t last = 0;

  std::size_t count() const { return last - first; }
};

/// Empirical CDF G(v) = #{x_i <= v} / n over an ascending sample.
double empirical_cdf(std::span<const double> sorted_x, double v);

/// Smallest sample value whose empirical CDF reaches p; p is clamped to [0,1].
double empirical_quantile(std::span<const double> sorted_x, double p);

EstimationWindow estimation_window(std::span<const double> sorted_x, double x,
                                   double a);

struct SampleStats {
  std::size_t count = 0;
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double variance = 0.0;  // population (divide by count)

  bool operator==(const SampleStats&) const = default;
};

SampleStats sample_stats(std::span<const double> errors);

struct LocationScale {
  double l = 0.0;
  double s = 0.0;
};

/// Support bounds keeping x + e inside [0, cap]: l = max(min, -x) (and never
/// above zero), s = min(max, cap - x) - l (and never negative).
LocationScale fit_location(double min_error, double max_error, double x,
                           double cap);
LocationScale fit_location(std::span<const double> errors, double x, double cap);

struct ShapeParams {
  double alpha = 1.0;
  double beta = 1.0;
};

/// Method-of-moments shapes for a beta law on [l, l + s] with the given mean
/// and variance. Throws DomainError when the moments do not fit the support.
ShapeParams fit_shape_moments(double mean, double variance, double l, double s);
ShapeParams fit_shape_moments(std::span<const double> errors, double l, double s);

/// Total version used by the pipeline: clamps the normalized mean into the
/// open unit interval and shrinks an infeasible variance to 0.99 m (1 - m).
/// `fallback` reports whether either adjustment fired.
BetaParams fit_beta(const SampleStats& stats, double x, double cap,
                    bool* fallback = nullptr);

struct FittedLevel {
  double x_bar = 0.0;
  double window_lo = 0.0;
  double window_hi = 0.0;
  SampleStats stats;
  BetaParams params;  // bounds evaluated at x_bar
  bool fallback = false;

  bool operator==(const FittedLevel&) const = default;
};

/// Conditional beta laws indexed by window center.
class FittedModel {
 public:
  FittedModel(double cap, double a, std::vector<FittedLevel> levels);

  double cap() const { return cap_; }
  double a() const { return a_; }
  std::span<const FittedLevel> levels() const { return levels_; }

  /// Level whose center is closest to x (lower center on ties).
  const FittedLevel& nearest_level(double x) const;

  /// Conditional law for input level x: the nearest level's sample with the
  /// location bounds re-evaluated at x. Equals nearest_level(x).params when
  /// x is a center.
  BetaParams params_for(double x) const;

  bool operator==(const FittedModel&) const = default;

 private:
  double cap_;
  double a_;
  std::vector<FittedLevel> levels_;
};

/// One window per distinct input value; requires 2/n <= a <= 0.5.
FittedModel fit_all(const PairedSeries& series, double a = kDefaultWindowFraction);

/// Discretized squared distance between the empirical joint density of
/// (x, error) and the fitted one, on a ceil(sqrt(n))^2 histogram over
/// [0, cap] x [-cap, cap].
double density_discrepancy(const PairedSeries& series, const FittedModel& model);

struct WindowSelection {
  double best_a = kDefaultWindowFraction;
  std::vector<std::pair<double, double>> curve;  // (a, D^2(a))
};

WindowSelection select_a(const PairedSeries& series,
                         std::span<const double> candidate_as);

}  // namespace mareforge
