#pragma once

#include <string>
#include <string_view>

#include "mareforge/base_process.hpp"
#include "mareforge/conditional_fit.hpp"
#include "mareforge/evaluation.hpp"
#include "mareforge/scenario_engine.hpp"
#include "mareforge/target_alloc.hpp"

namespace mareforge {

/// JSON documents written by the command-line tool. Doubles are written in
/// shortest round-trip form, so reading a document back gives equal values.
std::string to_json(const FittedModel& model);
FittedModel fitted_model_from_json(std::string_view text);

std::string to_json(const ArmaModel& model);
ArmaModel arma_model_from_json(std::string_view text);

std::string to_json(const WeightFunction& weights, const TargetFunction& target,
                    const AdjustedParams& adjusted);

std::string to_json(const ScoreReport& report);

/// Provenance sidecar of a scenario file.
std::string to_json(const ScenarioProvenance& provenance, std::size_t n_scenarios,
                    std::size_t length);

}  // namespace mareforge
