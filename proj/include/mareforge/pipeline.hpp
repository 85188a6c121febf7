#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mareforge/base_process.hpp"
#include "mareforge/conditional_fit.hpp"
#include "mareforge/dataio.hpp"
#include "mareforge/evaluation.hpp"
#include "mareforge/scenario_engine.hpp"
#include "mareforge/target_alloc.hpp"

namespace mareforge {

inline const std::vector<double> kDefaultACandidates{0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5};

struct RunConfig {
  std::filesystem::path input_csv;
  CsvColumns columns;
  bool invert_roles = false;  // simulate forecasts from actuals
  std::optional<double> cap;
  double target_mape = 0.0;   // percent
  std::optional<double> a;    // unset: choose by density discrepancy
  std::vector<double> a_candidates = kDefaultACandidates;
  SimulationMode mode = SimulationMode::iid;
  std::size_t n_scenarios = 10;
  std::optional<std::string> sid_start;
  std::optional<std::string> sid_end;
  std::optional<std::filesystem::path> sid_csv;
  std::uint64_t seed = 0;
  std::optional<double> curvature_d;  // unset: mean |second difference| of the historical output
  double w_s = 1.0;
  double w_eps = 1.0;
  double gap = 0.05;
  std::size_t node_budget = 10000;
  int max_p = 5;
  int max_q = 5;
  std::size_t score_lags = 5;
  ScoreWeights score_weights;
  ScoreOptions score_options;
  std::filesystem::path output_dir = "out";
};

struct RunResult {
  FittedModel model;
  double r_mhat = 0.0;
  double plausibility_score = 0.0;
  double max_feasible_mape = 0.0;
  std::optional<ArmaModel> arma;
  ScenarioSet scenarios;
  std::optional<ScoreReport> scores;
};

/// Loads the input with the configured roles.
PairedSeries load_input(const RunConfig& config);

/// SID from an external CSV, a datetime range, or the whole input.
SidSelection select_sid(const RunConfig& config, const PairedSeries& series);

/// Fixed a, or the best candidate by density discrepancy.
FittedModel fit_model(const RunConfig& config, const PairedSeries& series,
                      std::ostream& log);

/// ARMA orders shrink when the series is too short for the full grid.
ArmaFit fit_base_process(const PairedSeries& series, const FittedModel& model,
                         int max_p, int max_q);

/// Curvature settings from the config; d defaults to the mean absolute second
/// difference of the historical output series.
CurvatureSpec curvature_spec(const RunConfig& config, const PairedSeries& series);

/// Full pipeline. Writes fitted_model.json, arma_model.json (ARMA modes),
/// target.json, scenarios.csv, scenarios.json, scores.json and run.log into
/// output_dir and echoes the log lines (key=value) to `log`. Throws
/// InfeasibleTarget after logging the feasible maximum.
RunResult run(const RunConfig& config, std::ostream& log);

}  // namespace mareforge
