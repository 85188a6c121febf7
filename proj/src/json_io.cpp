#include "mareforge/json_io.hpp"

#include <json.hpp>

#include "mareforge/error.hpp"

namespace mareforge {

using nlohmann::json;

namespace {

json params_json(const BetaParams& p) {
  return {{"alpha", p.alpha}, {"beta", p.beta}, {"l", p.l}, {"s", p.s}};
}

BetaParams params_from(const json& j) {
  return {j.at("alpha").get<double>(), j.at("beta").get<double>(), j.at("l").get<double>(),
          j.at("s").get<double>()};
}

json arma_json(const ArmaModel& m) {
  return {{"p", m.p}, {"q", m.q}, {"a", m.a}, {"b", m.b},
          {"sigma_delta", m.sigma_delta}, {"bic", m.bic}};
}

json parse(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace

std::string to_json(const FittedModel& model) {
  json levels = json::array();
  for (const auto& lv : model.levels()) {
    levels.push_back({{"x_bar", lv.x_bar},
                      {"window_lo", lv.window_lo},
                      {"window_hi", lv.window_hi},
                      {"count", lv.stats.count},
                      {"min", lv.stats.min},
                      {"max", lv.stats.max},
                      {"mean", lv.stats.mean},
                      {"variance", lv.stats.variance},
                      {"params", params_json(lv.params)},
                      {"fallback", lv.fallback}});
  }
  return json{{"cap", model.cap()}, {"a", model.a()}, {"levels", levels}}.dump(2) + "\n";
}

FittedModel fitted_model_from_json(std::string_view text) {
  const json j = parse(text);
  try {
    std::vector<FittedLevel> levels;
    for (const auto& e : j.at("levels")) {
      FittedLevel lv;
      lv.x_bar = e.at("x_bar").get<double>();
      lv.window_lo = e.at("window_lo").get<double>();
      lv.window_hi = e.at("window_hi").get<double>();
      lv.stats.count = e.at("count").get<std::size_t>();
      lv.stats.min = e.at("min").get<double>();
      lv.stats.max = e.at("max").get<double>();
      lv.stats.mean = e.at("mean").get<double>();
      lv.stats.variance = e.at("variance").get<double>();
      lv.params = params_from(e.at("params"));
      lv.fallback = e.at("fallback").get<bool>();
      levels.push_back(lv);
    }
    return FittedModel(j.at("cap").get<double>(), j.at("a").get<double>(), std::move(levels));
  } catch (const json::exception& e) {
    throw DataError(std::string("fitted model JSON: ") + e.what());
  }
}

std::string to_json(const ArmaModel& model) { return arma_json(model).dump(2) + "\n"; }

ArmaModel arma_model_from_json(std::string_view text) {
  const json j = parse(text);
  try {
    ArmaModel m;
    m.p = j.at("p").get<int>();
    m.q = j.at("q").get<int>();
    m.a = j.at("a").get<std::vector<double>>();
    m.b = j.at("b").get<std::vector<double>>();
    m.sigma_delta = j.at("sigma_delta").get<double>();
    m.bic = j.at("bic").get<double>();
    if (m.a.size() != static_cast<std::size_t>(m.p) || m.b.size() != static_cast<std::size_t>(m.q))
      throw DataError("ARMA JSON: coefficient count does not match the order");
    return m;
  } catch (const json::exception& e) {
    throw DataError(std::string("ARMA JSON: ") + e.what());
  }
}

std::string to_json(const WeightFunction& weights, const TargetFunction& target,
                    const AdjustedParams& adjusted) {
  json w = json::array();
  for (const auto& lv : weights.levels())
    w.push_back({{"x", lv.x}, {"m_hat", lv.m_hat}, {"omega", lv.omega}, {"count", lv.count}});
  json levels = json::array();
  for (std::size_t i = 0; i < target.levels.size(); ++i) {
    const auto& t = target.levels[i];
    const auto& a = adjusted.levels.at(i);
    levels.push_back({{"x", t.x},
                      {"omega_tilde", t.omega_tilde},
                      {"m_tilde", t.m_tilde},
                      {"m_max", t.m_max},
                      {"estimated", params_json(a.estimated)},
                      {"adjusted", params_json(a.adjusted)}});
  }
  return json{{"r_tilde", target.r_tilde},
              {"target_mape", 100.0 * target.r_tilde},
              {"r_mhat", weights.r_mhat()},
              {"plausibility_score", target.plausibility_score},
              {"max_r_tilde", target.max_r_tilde},
              {"max_feasible_mape", 100.0 * target.max_r_tilde},
              {"weights", w},
              {"levels", levels}}
             .dump(2) +
         "\n";
}

std::string to_json(const ScoreReport& r) {
  return json{{"s_mare", r.s_mare},
              {"s_autocorr", r.s_autocorr},
              {"s_second_diff", r.s_second_diff},
              {"composite", r.composite},
              {"M", r.m},
              {"n_t", r.n_t},
              {"mode", r.mode},
              {"p_lags", r.p_lags},
              {"weights", {r.weights.mare, r.weights.autocorr, r.weights.second_diff}},
              {"normalized", r.options.normalized},
              {"signed_second_difference", r.options.signed_second_difference}}
             .dump(2) +
         "\n";
}

std::string to_json(const ScenarioProvenance& p, std::size_t n_scenarios, std::size_t length) {
  json j{{"mode", std::string(to_string(p.mode))},
         {"seed", p.seed},
         {"r_tilde", p.r_tilde},
         {"target_mape", 100.0 * p.r_tilde},
         {"plausibility_score", p.plausibility_score},
         {"max_r_tilde", p.max_r_tilde},
         {"model_fingerprint", p.model_fingerprint},
         {"n_scenarios", n_scenarios},
         {"length", length}};
  if (p.arma) j["arma"] = arma_json(*p.arma);
  if (p.curvature) {
    j["curvature"] = {{"d", p.curvature->d},         {"w_s", p.curvature->w_s},
                      {"w_eps", p.curvature->w_eps}, {"d_max", p.curvature->d_max},
                      {"gap", p.curvature->gap},     {"node_budget", p.curvature->node_budget}};
    json stats = json::array();
    for (const auto& s : p.smoothing)
      stats.push_back({{"objective", s.objective}, {"gap", s.gap}, {"nodes", s.nodes}});
    j["smoothing"] = stats;
  }
  return j.dump(2) + "\n";
}

}  // namespace mareforge
