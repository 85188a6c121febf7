#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mareforge/base_process.hpp"
#include "mareforge/beta_params.hpp"
#include "mareforge/conditional_fit.hpp"
#include "mareforge/curvature_opt.hpp"
#include "mareforge/dataio.hpp"
#include "mareforge/target_alloc.hpp"

namespace mareforge {

/// iid: independent uniforms. arma: uniforms from the ARMA base process.
/// curvature: arma followed by curvature smoothing.
enum class SimulationMode { iid, arma, curvature };

std::string_view to_string(SimulationMode mode);
/// Accepts iid|arma|curvature and the letters A|B|C.
SimulationMode parse_mode(std::string_view text);

struct SimulationRequest {
  SidSelection sid;
  double r_tilde = 0.0;
  std::size_t n_scenarios = 1;
  SimulationMode mode = SimulationMode::iid;
  std::uint64_t seed = 0;
  std::optional<CurvatureSpec> curvature;  // required for curvature mode
};

struct SmoothingStats {
  double objective = 0.0;
  double gap = 0.0;
  std::size_t nodes = 0;
  double seconds = 0.0;
};

struct ScenarioProvenance {
  SimulationMode mode = SimulationMode::iid;
  std::uint64_t seed = 0;
  double r_tilde = 0.0;
  double plausibility_score = 0.0;
  double max_r_tilde = 0.0;
  std::string model_fingerprint;
  std::optional<ArmaModel> arma;
  std::optional<CurvatureSpec> curvature;
  std::vector<SmoothingStats> smoothing;  // one entry per scenario in curvature mode
};

struct ScenarioSet {
  std::vector<Timestamp> timestamps;
  std::vector<double> x;
  double cap = 0.0;
  std::vector<std::vector<double>> scenarios;
  ScenarioProvenance provenance;

  std::size_t size() const { return scenarios.size(); }
};

/// Quantile of the conditional law: l + s I^-1_u(alpha, beta).
inline double inverse_conditional_cdf(const BetaParams& params, double u) {
  return params.quantile(u);
}

/// 64-bit FNV-1a digest of the fitted laws, printed as 16 hex digits.
std::string model_fingerprint(const FittedModel& model);

/// Scenario k draws from RandomStream(seed, k), so the result does not depend
/// on the thread count. Throws InfeasibleTarget for an infeasible r_tilde.
ScenarioSet simulate(const FittedModel& model, const WeightFunction& weights,
                     const std::optional<ArmaModel>& arma,
                     const SimulationRequest& request);

/// Same, with the target and adjusted laws already computed for request.sid.
ScenarioSet simulate(const FittedModel& model, const TargetFunction& target,
                     const AdjustedParams& adjusted,
                     const std::optional<ArmaModel>& arma,
                     const SimulationRequest& request);

/// Columns datetime, x, scenario_1 .. scenario_M.
ColumnTable scenario_table(const ScenarioSet& set);
ScenarioSet scenarios_from_table(const ColumnTable& table, double cap);

}  // namespace mareforge
