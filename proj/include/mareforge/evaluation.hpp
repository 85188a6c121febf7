#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace mareforge {

struct ScoreOptions {
  /// Root-mean over scenarios. When false, the root of the plain sum over
  /// scenarios is used instead.
  bool normalized = true;
  /// Use the mean signed second difference in the curvature score instead of
  /// the mean absolute one.
  bool signed_second_difference = false;
};

using Scenarios = std::span<const std::vector<double>>;

/// Per-scenario MAPE deviation from 100 r_tilde, in percentage points.
double score_mare(Scenarios scenarios, std::span<const double> x, double r_tilde,
                  const ScoreOptions& options = {});

/// rho(j) = sum_i e_{i+j} e_i / ((n - j) var) over the mean-centered series,
/// var the population variance, j = 1 .. max_lag. Throws DomainError for a
/// constant series or max_lag >= n.
std::vector<double> autocorrelation(std::span<const double> e, std::size_t max_lag);

/// Distance between the autocorrelations of the input errors and of each
/// scenario's errors (scenario - x), summed over lags 1 .. max_lag.
double score_autocorrelation(Scenarios scenarios, std::span<const double> x,
                             std::span<const double> input_errors,
                             std::size_t max_lag, const ScoreOptions& options = {});

/// Mean |second difference| (or mean signed second difference).
double mean_second_difference(std::span<const double> y, bool signed_form = false);

double score_second_difference(Scenarios scenarios, std::span<const double> reference,
                               const ScoreOptions& options = {});

struct ScoreWeights {
  double mare = 1.0;
  double autocorr = 1.0;
  double second_diff = 1.0;
};

double composite_score(double s_mare, double s_autocorr, double s_second_diff,
                       const ScoreWeights& weights);

struct ScoreReport {
  double s_mare = 0.0;
  double s_autocorr = 0.0;
  double s_second_diff = 0.0;
  double composite = 0.0;
  std::size_t m = 0;
  std::size_t n_t = 0;
  std::string mode;
  std::size_t p_lags = 0;
  ScoreWeights weights;
  ScoreOptions options;
};

/// All three scores and their weighted sum. `input_errors` and `reference`
/// come from the historical data.
ScoreReport evaluate(Scenarios scenarios, std::span<const double> x, double r_tilde,
                     std::span<const double> input_errors,
                     std::span<const double> reference, std::size_t max_lag,
                     const ScoreWeights& weights, std::string mode,
                     const ScoreOptions& options = {});

/// Fixed-width text table of a report.
std::string format_report(const ScoreReport& report);

}  // namespace mareforge
