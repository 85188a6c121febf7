#include "mareforge/scenario_engine.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>

#include "mareforge/error.hpp"
#include "mareforge/parallel.hpp"
#include "mareforge/rng.hpp"

namespace mareforge {

std::string_view to_string(SimulationMode mode) {
  switch (mode) {
    case SimulationMode::iid: return "iid";
    case SimulationMode::arma: return "arma";
    case SimulationMode::curvature: return "curvature";
  }
  return "iid";
}

SimulationMode parse_mode(std::string_view text) {
  if (text == "iid" || text == "A" || text == "a") return SimulationMode::iid;
  if (text == "arma" || text == "B" || text == "b") return SimulationMode::arma;
  if (text == "curvature" || text == "C" || text == "c") return SimulationMode::curvature;
  throw DomainError("unknown simulation mode '" + std::string(text) + "'");
}

std::string model_fingerprint(const FittedModel& model) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto mix = [&](double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  };
  mix(model.cap());
  mix(model.a());
  for (const auto& lv : model.levels()) {
    mix(lv.x_bar);
    mix(lv.params.alpha);
    mix(lv.params.beta);
    mix(lv.params.l);
    mix(lv.params.s);
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ScenarioSet simulate(const FittedModel& model, const WeightFunction& weights,
                     const std::optional<ArmaModel>& arma,
                     const SimulationRequest& request) {
  const TargetFunction target = target_function(weights, model, request.sid, request.r_tilde);
  const AdjustedParams adjusted = adjust_params(model, target);
  return simulate(model, target, adjusted, arma, request);
}

ScenarioSet simulate(const FittedModel& model, const TargetFunction& target,
                     const AdjustedParams& adjusted,
                     const std::optional<ArmaModel>& arma,
                     const SimulationRequest& request) {
  const auto& sid = request.sid;
  if (request.n_scenarios < 1) throw DomainError("need at least one scenario");
  if (sid.size() == 0) throw DomainError("empty simulation input");
  if (request.mode != SimulationMode::iid && !arma)
    throw DomainError("arma and curvature modes need a fitted ARMA model");
  if (request.mode == SimulationMode::curvature) {
    if (!request.curvature) throw DomainError("curvature mode needs a curvature spec");
    request.curvature->validate(sid.cap);
  }

  const std::size_t n = sid.size();
  const double cap = sid.cap;
  std::vector<const BetaParams*> law(n);
  for (std::size_t t = 0; t < n; ++t) law[t] = &adjusted.at(sid.x[t]).adjusted;

  ScenarioSet out;
  out.timestamps = sid.timestamps;
  out.x = sid.x;
  out.cap = cap;
  out.scenarios.assign(request.n_scenarios, {});
  auto& prov = out.provenance;
  prov.mode = request.mode;
  prov.seed = request.seed;
  prov.r_tilde = request.r_tilde;
  prov.plausibility_score = target.plausibility_score;
  prov.max_r_tilde = target.max_r_tilde;
  prov.model_fingerprint = model_fingerprint(model);
  if (request.mode != SimulationMode::iid) prov.arma = arma;
  if (request.mode == SimulationMode::curvature) {
    prov.curvature = request.curvature;
    prov.smoothing.resize(request.n_scenarios);
  }

  parallel_for(request.n_scenarios, [&](std::size_t k) {
    RandomStream stream(request.seed, k);
    std::vector<double> u(n);
    if (request.mode == SimulationMode::iid) {
      for (auto& v : u) v = stream.uniform();
    } else {
      const auto z = simulate_base_process(*arma, n, stream, default_burn_in(*arma));
      for (std::size_t t = 0; t < n; ++t) u[t] = normal_cdf(z[t]);
    }
    std::vector<double> y(n), eps(n);
    for (std::size_t t = 0; t < n; ++t) {
      eps[t] = inverse_conditional_cdf(*law[t], u[t]);
      y[t] = std::clamp(sid.x[t] + eps[t], 0.0, cap);
    }
    if (request.mode == SimulationMode::curvature) {
      const auto sol = smooth(y, sid.x, eps, *request.curvature, cap);
      y = sol.y;
      prov.smoothing[k] = {sol.objective, sol.gap_achieved, sol.nodes, sol.seconds};
    }
    out.scenarios[k] = std::move(y);
  });
  return out;
}

ColumnTable scenario_table(const ScenarioSet& set) {
  ColumnTable table;
  table.timestamps = set.timestamps;
  table.names.push_back("x");
  table.columns.push_back(set.x);
  for (std::size_t k = 0; k < set.scenarios.size(); ++k) {
    table.names.push_back("scenario_" + std::to_string(k + 1));
    table.columns.push_back(set.scenarios[k]);
  }
  return table;
}

ScenarioSet scenarios_from_table(const ColumnTable& table, double cap) {
  ScenarioSet set;
  set.timestamps = table.timestamps;
  set.x = table.column("x");
  set.cap = cap;
  for (std::size_t i = 0; i < table.names.size(); ++i)
    if (table.names[i].starts_with("scenario_")) set.scenarios.push_back(table.columns[i]);
  if (set.scenarios.empty()) throw DataError("no scenario_ columns in scenario table");
  return set;
}

}  // namespace mareforge
