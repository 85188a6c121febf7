#include "mareforge/pipeline.hpp"

#include <algorithm>
#include <ostream>
#include <sstream>

#include "mareforge/curvature_opt.hpp"
#include "mareforge/error.hpp"
#include "mareforge/json_io.hpp"

namespace mareforge {

namespace {

// Writes each line both to the caller's stream and to the run log.
class RunLog {
 public:
  explicit RunLog(std::ostream& out) : out_(out) {}

  template <class T>
  void put(const std::string& key, const T& value) {
    std::ostringstream line;
    line << key << '=' << value << '\n';
    out_ << line.str();
    text_ += line.str();
  }
  void put(const std::string& key, double value) { put(key, format_value(value)); }

  const std::string& text() const { return text_; }

 private:
  std::ostream& out_;
  std::string text_;
};

}  // namespace

PairedSeries load_input(const RunConfig& config) {
  LoadOptions opts;
  opts.cap = config.cap;
  opts.columns = config.columns;
  PairedSeries series = load_csv(config.input_csv, opts);
  return config.invert_roles ? series.swapped() : series;
}

SidSelection select_sid(const RunConfig& config, const PairedSeries& series) {
  if (config.sid_csv) {
    const std::string column = config.invert_roles ? config.columns.y : config.columns.x;
    return load_sid_csv(*config.sid_csv, series.cap(), config.columns.datetime, column);
  }
  if (config.sid_start || config.sid_end) {
    const auto ts = series.timestamps();
    const Timestamp start = config.sid_start ? parse_datetime(*config.sid_start) : ts.front();
    const Timestamp end = config.sid_end ? parse_datetime(*config.sid_end) : ts.back();
    if (start > end) throw DataError("sid start is after sid end");
    return slice_sid(series, start, end);
  }
  return sid_from_series(series);
}

FittedModel fit_model(const RunConfig& config, const PairedSeries& series, std::ostream& log) {
  if (config.a) return fit_all(series, *config.a);
  const double floor_a = 2.0 / static_cast<double>(series.size());
  std::vector<double> candidates;
  for (double a : config.a_candidates)
    if (a >= floor_a && a <= 0.5) candidates.push_back(a);
  if (candidates.empty()) candidates.push_back(std::clamp(kDefaultWindowFraction, floor_a, 0.5));
  const WindowSelection sel = select_a(series, candidates);
  for (const auto& [a, d2] : sel.curve) log << "select_a a=" << format_value(a) << " d2=" << format_value(d2) << '\n';
  return fit_all(series, sel.best_a);
}

ArmaFit fit_base_process(const PairedSeries& series, const FittedModel& model, int max_p,
                         int max_q) {
  const auto z = to_base_process(series, model);
  // Largest symmetric shrink of the order grid satisfying n >= 10 (p + q + 1).
  while (max_p + max_q > 0 && z.size() < 10u * static_cast<std::size_t>(max_p + max_q + 1)) {
    if (max_p >= max_q) --max_p;
    else --max_q;
  }
  return fit_arma(z, max_p, max_q);
}

CurvatureSpec curvature_spec(const RunConfig& config, const PairedSeries& series) {
  CurvatureSpec spec;
  if (config.curvature_d) {
    spec.d = *config.curvature_d;
  } else {
    const auto s = second_difference(series.y());
    double acc = 0.0;
    for (double v : s) acc += std::abs(v);
    spec.d = acc / static_cast<double>(s.size());
  }
  spec.w_s = config.w_s;
  spec.w_eps = config.w_eps;
  spec.gap = config.gap;
  spec.node_budget = config.node_budget;
  spec.d_max = 4.0 * series.cap();
  return spec;
}

RunResult run(const RunConfig& config, std::ostream& out) {
  RunLog log(out);
  std::filesystem::create_directories(config.output_dir);
  const auto dir = config.output_dir;

  const PairedSeries series = load_input(config);
  log.put("n_input", series.size());
  log.put("cap", series.cap());
  log.put("roles", config.invert_roles ? std::string("actuals->forecasts") : std::string("forecasts->actuals"));

  std::ostringstream sel_log;
  FittedModel model = fit_model(config, series, sel_log);
  out << sel_log.str();
  log.put("a", model.a());
  log.put("levels", model.levels().size());
  write_file_atomic(dir / "fitted_model.json", to_json(model));

  const SidSelection sid = select_sid(config, series);
  log.put("n_sid", sid.size());
  const WeightFunction weights = weight_function(model, series);
  const FeasibleRegion region = feasible_region(weights, sid, model);
  const double p_sid = plausibility_score(weights, sid);
  log.put("r_mhat", weights.r_mhat());
  log.put("p_sid", p_sid);
  log.put("max_feasible_mape", 100.0 * region.max_r_tilde);
  log.put("binding_x", region.binding_x);
  log.put("target_mape", config.target_mape);

  const double r_tilde = config.target_mape / 100.0;
  TargetFunction target;
  try {
    target = target_function(weights, model, sid, r_tilde);
  } catch (const InfeasibleTarget& e) {
    log.put("error", std::string(e.what()));
    write_file_atomic(dir / "run.log", log.text());
    throw;
  }
  const AdjustedParams adjusted = adjust_params(model, target);
  write_file_atomic(dir / "target.json", to_json(weights, target, adjusted));

  std::optional<ArmaModel> arma;
  if (config.mode != SimulationMode::iid) {
    const ArmaFit fit = fit_base_process(series, model, config.max_p, config.max_q);
    arma = fit.model;
    log.put("arma_p", arma->p);
    log.put("arma_q", arma->q);
    log.put("arma_sigma_delta", arma->sigma_delta);
    log.put("arma_bic", arma->bic);
    write_file_atomic(dir / "arma_model.json", to_json(*arma));
  }

  SimulationRequest req;
  req.sid = sid;
  req.r_tilde = r_tilde;
  req.n_scenarios = config.n_scenarios;
  req.mode = config.mode;
  req.seed = config.seed;
  if (config.mode == SimulationMode::curvature) {
    req.curvature = curvature_spec(config, series);
    log.put("curvature_d", req.curvature->d);
  }
  log.put("mode", std::string(to_string(config.mode)));
  log.put("scenarios", config.n_scenarios);
  log.put("seed", config.seed);

  ScenarioSet set = simulate(model, target, adjusted, arma, req);
  if (!set.provenance.smoothing.empty()) {
    double worst = 0.0, total = 0.0;
    std::size_t nodes = 0;
    for (const auto& s : set.provenance.smoothing) {
      worst = std::max(worst, s.gap);
      total += s.gap;
      nodes += s.nodes;
    }
    log.put("miqp_gap_max", worst);
    log.put("miqp_gap_mean", total / static_cast<double>(set.provenance.smoothing.size()));
    log.put("miqp_nodes", nodes);
  }
  write_file_atomic(dir / "scenarios.csv", to_csv(scenario_table(set)));
  write_file_atomic(dir / "scenarios.json", to_json(set.provenance, set.size(), sid.size()));

  RunResult result{std::move(model), weights.r_mhat(), p_sid, 100.0 * region.max_r_tilde, arma,
                   std::move(set), std::nullopt};
  try {
    const auto errors = error_series(series);
    const std::size_t lags = std::min(config.score_lags, sid.size() - 1);
    ScoreReport report = evaluate(result.scenarios.scenarios, result.scenarios.x, r_tilde, errors,
                                  series.y(), lags, config.score_weights,
                                  std::string(to_string(config.mode)), config.score_options);
    log.put("s_mare", report.s_mare);
    log.put("s_autocorr", report.s_autocorr);
    log.put("s_second_diff", report.s_second_diff);
    log.put("composite", report.composite);
    write_file_atomic(dir / "scores.json", to_json(report));
    result.scores = std::move(report);
  } catch (const DomainError& e) {
    log.put("score_skipped", std::string(e.what()));
  }
  write_file_atomic(dir / "run.log", log.text());
  return result;
}

}  // namespace mareforge
