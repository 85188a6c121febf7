// mareforge: fit conditional error laws and generate scenarios at a target MAPE.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <sstream>

#include "mareforge/curvature_opt.hpp"
#include "mareforge/error.hpp"
#include "mareforge/fixture.hpp"
#include "mareforge/json_io.hpp"
#include "mareforge/pipeline.hpp"

using namespace mareforge;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kInfeasible = 3, kSolver = 4 };

struct Options {
  RunConfig cfg;
  std::string mode = "iid";
  std::string a_text;
  bool select_a = false;
  std::vector<double> score_weights{1.0, 1.0, 1.0};
  bool literal_scores = false;
  bool signed_second_diff = false;
  std::filesystem::path model_json;
  std::filesystem::path arma_json;
  std::filesystem::path scenarios_csv;
  std::filesystem::path output;
  bool no_arma = false;
  std::string fixture_kind = "ar1-error";
  std::size_t fixture_n = 2000;
};

void add_input(CLI::App* app, Options& o, bool required = true) {
  auto* in = app->add_option("--input", o.cfg.input_csv, "paired CSV (datetime, forecasts, actuals)");
  if (required) in->required();
  app->add_option("--cap", o.cfg.cap, "capacity; default ceil(max value)");
  app->add_flag("--invert-roles", o.cfg.invert_roles, "simulate forecasts from actuals");
  app->add_option("--datetime-column", o.cfg.columns.datetime);
  app->add_option("--forecast-column", o.cfg.columns.x);
  app->add_option("--actual-column", o.cfg.columns.y);
}

void add_fit(CLI::App* app, Options& o) {
  app->add_option("--a", o.a_text, "window fraction in (0, 0.5], or auto");
  app->add_flag("--select-a", o.select_a, "choose a by density discrepancy");
}

void add_sid(CLI::App* app, Options& o) {
  app->add_option("--sid-start", o.cfg.sid_start);
  app->add_option("--sid-end", o.cfg.sid_end);
  app->add_option("--sid-csv", o.cfg.sid_csv, "external SID (datetime + x column)");
}

void add_target(CLI::App* app, Options& o) {
  app->add_option("--target-mape", o.cfg.target_mape, "target MAPE in percent")->required();
}

void add_simulation(CLI::App* app, Options& o) {
  app->add_option("--mode", o.mode, "iid, arma or curvature (A, B, C)");
  app->add_option("--scenarios", o.cfg.n_scenarios, "scenario count M");
  app->add_option("--seed", o.cfg.seed);
}

void add_curvature(CLI::App* app, Options& o) {
  app->add_option("--curvature-d", o.cfg.curvature_d, "target |second difference|");
  app->add_option("--ws", o.cfg.w_s, "curvature weight");
  app->add_option("--weps", o.cfg.w_eps, "error fidelity weight");
  app->add_option("--gap", o.cfg.gap, "relative optimality gap");
  app->add_option("--node-budget", o.cfg.node_budget);
}

void add_scoring(CLI::App* app, Options& o) {
  app->add_option("--score-lags", o.cfg.score_lags, "autocorrelation lags p");
  app->add_option("--score-weights", o.score_weights, "wm,wac,wsd")->delimiter(',')->expected(3);
  app->add_flag("--literal-scores", o.literal_scores, "sum over scenarios without dividing by M");
  app->add_flag("--signed-second-diff", o.signed_second_diff, "signed mean second difference");
}

void finalize(Options& o) {
  if (!o.a_text.empty() && o.a_text != "auto") o.cfg.a = std::stod(o.a_text);
  if (o.select_a || o.a_text == "auto") o.cfg.a.reset();
  else if (!o.cfg.a) o.cfg.a = kDefaultWindowFraction;
  o.cfg.mode = parse_mode(o.mode);
  o.cfg.score_weights = {o.score_weights.at(0), o.score_weights.at(1), o.score_weights.at(2)};
  o.cfg.score_options.normalized = !o.literal_scores;
  o.cfg.score_options.signed_second_difference = o.signed_second_diff;
}

FittedModel load_model(const Options& o) { return fitted_model_from_json(read_file(o.model_json)); }

int cmd_fit(Options& o) {
  const auto series = load_input(o.cfg);
  const auto model = fit_model(o.cfg, series, std::cout);
  std::filesystem::create_directories(o.cfg.output_dir);
  write_file_atomic(o.cfg.output_dir / "fitted_model.json", to_json(model));
  std::cout << "a=" << format_value(model.a()) << "\nlevels=" << model.levels().size() << '\n';
  if (!o.no_arma) {
    const auto fit = fit_base_process(series, model, o.cfg.max_p, o.cfg.max_q);
    write_file_atomic(o.cfg.output_dir / "arma_model.json", to_json(fit.model));
    std::cout << "arma_p=" << fit.model.p << "\narma_q=" << fit.model.q << '\n';
  }
  return kOk;
}

int cmd_target(Options& o) {
  const auto series = load_input(o.cfg);
  const auto model = load_model(o);
  const auto sid = select_sid(o.cfg, series);
  const auto weights = weight_function(model, series);
  const auto region = feasible_region(weights, sid, model);
  std::cout << "r_mhat=" << format_value(weights.r_mhat())
            << "\np_sid=" << format_value(plausibility_score(weights, sid))
            << "\nmax_feasible_mape=" << format_value(100.0 * region.max_r_tilde) << '\n';
  const auto target = target_function(weights, model, sid, o.cfg.target_mape / 100.0);
  const auto adjusted = adjust_params(model, target);
  std::filesystem::create_directories(o.cfg.output_dir);
  write_file_atomic(o.cfg.output_dir / "target.json", to_json(weights, target, adjusted));
  return kOk;
}

int cmd_simulate(Options& o) {
  const auto series = load_input(o.cfg);
  const auto model = load_model(o);
  const auto sid = select_sid(o.cfg, series);
  const auto weights = weight_function(model, series);
  std::optional<ArmaModel> arma;
  if (o.cfg.mode != SimulationMode::iid) {
    arma = o.arma_json.empty() ? fit_base_process(series, model, o.cfg.max_p, o.cfg.max_q).model
                               : arma_model_from_json(read_file(o.arma_json));
  }
  SimulationRequest req;
  req.sid = sid;
  req.r_tilde = o.cfg.target_mape / 100.0;
  req.n_scenarios = o.cfg.n_scenarios;
  req.mode = o.cfg.mode;
  req.seed = o.cfg.seed;
  if (req.mode == SimulationMode::curvature) req.curvature = curvature_spec(o.cfg, series);
  const auto set = simulate(model, weights, arma, req);
  std::filesystem::create_directories(o.cfg.output_dir);
  write_file_atomic(o.cfg.output_dir / "scenarios.csv", to_csv(scenario_table(set)));
  write_file_atomic(o.cfg.output_dir / "scenarios.json", to_json(set.provenance, set.size(), sid.size()));
  std::cout << "scenarios=" << set.size() << "\nlength=" << sid.size() << '\n';
  return kOk;
}

int cmd_smooth(Options& o) {
  const auto table = load_table(o.scenarios_csv);
  const auto& x = table.column("x");
  double cap = o.cfg.cap.value_or(0.0);
  if (!o.cfg.input_csv.empty()) {
    const auto series = load_input(o.cfg);
    cap = series.cap();
    if (!o.cfg.curvature_d) o.cfg.curvature_d = curvature_spec(o.cfg, series).d;
  }
  if (!(cap > 0.0)) throw DomainError("smooth needs --cap or --input");
  if (!o.cfg.curvature_d) throw DomainError("smooth needs --curvature-d or --input");
  CurvatureSpec spec;
  spec.d = *o.cfg.curvature_d;
  spec.w_s = o.cfg.w_s;
  spec.w_eps = o.cfg.w_eps;
  spec.gap = o.cfg.gap;
  spec.node_budget = o.cfg.node_budget;
  spec.d_max = 4.0 * cap;

  ColumnTable out = table;
  for (std::size_t c = 0; c < table.names.size(); ++c) {
    if (!table.names[c].starts_with("scenario_")) continue;
    const auto& y = table.columns[c];
    std::vector<double> eps(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) eps[i] = y[i] - x[i];
    const auto sol = smooth(y, x, eps, spec, cap);
    out.columns[c] = sol.y;
    std::cout << table.names[c] << " objective=" << format_value(sol.objective)
              << " gap=" << format_value(sol.gap_achieved) << " nodes=" << sol.nodes << '\n';
  }
  const auto path = o.output.empty() ? o.scenarios_csv : o.output;
  write_file_atomic(path, to_csv(out));
  return kOk;
}

int cmd_score(Options& o) {
  const auto series = load_input(o.cfg);
  const auto set = scenarios_from_table(load_table(o.scenarios_csv), series.cap());
  const auto errors = error_series(series);
  const auto report = evaluate(set.scenarios, set.x, o.cfg.target_mape / 100.0, errors, series.y(),
                               o.cfg.score_lags, o.cfg.score_weights, o.mode, o.cfg.score_options);
  std::cout << format_report(report);
  std::filesystem::create_directories(o.cfg.output_dir);
  write_file_atomic(o.cfg.output_dir / "scores.json", to_json(report));
  return kOk;
}

int cmd_fixture(Options& o) {
  const auto series = make_fixture(parse_fixture_kind(o.fixture_kind), o.fixture_n, o.cfg.seed,
                                   o.cfg.cap.value_or(100.0));
  const auto path = o.output.empty() ? std::filesystem::path("fixture.csv") : o.output;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  save_csv(series, path);
  std::cout << "rows=" << series.size() << "\nwrote=" << path.string() << '\n';
  return kOk;
}

int cmd_run(Options& o) {
  run(o.cfg, std::cout);
  return kOk;
}

// CLI11 does not read a config file attached to a subcommand, so
// `run --config FILE` is expanded here: every key = value line becomes
// --key=value right after the subcommand name, ahead of the explicit flags,
// which therefore win.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  const auto sub = std::find(args.begin(), args.end(), "run");
  if (sub == args.end()) return args;
  for (auto it = sub + 1; it != args.end(); ++it) {
    std::string path;
    auto last = it + 1;
    if (*it == "--config" && it + 1 != args.end()) {
      path = *(it + 1);
      last = it + 2;
    } else if (it->rfind("--config=", 0) == 0) {
      path = it->substr(9);
    } else {
      continue;
    }
    std::vector<std::string> tokens;
    for (const auto& item : CLI::ConfigTOML().from_file(path)) {
      if (item.inputs.empty()) continue;
      std::string name = item.name;
      std::replace(name.begin(), name.end(), '_', '-');
      std::string value;
      for (const auto& v : item.inputs) value += (value.empty() ? "" : ",") + v;
      tokens.push_back("--" + name + "=" + value);
    }
    const auto pos = sub - args.begin() + 1;
    args.erase(it, last);
    args.insert(args.begin() + pos, tokens.begin(), tokens.end());
    break;
  }
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conditional beta error laws and target-MAPE scenario generation"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  Options o;

  auto* fit = app.add_subcommand("fit", "fit conditional error laws (and the ARMA base process)");
  add_input(fit, o);
  add_fit(fit, o);
  fit->add_flag("--no-arma", o.no_arma);
  fit->add_option("--output-dir", o.cfg.output_dir);

  auto* target = app.add_subcommand("target", "target function and re-targeted laws");
  add_input(target, o);
  add_sid(target, o);
  add_target(target, o);
  target->add_option("--model", o.model_json)->required();
  target->add_option("--output-dir", o.cfg.output_dir);

  auto* sim = app.add_subcommand("simulate", "generate scenarios from a fitted model");
  add_input(sim, o);
  add_sid(sim, o);
  add_target(sim, o);
  add_simulation(sim, o);
  add_curvature(sim, o);
  sim->add_option("--model", o.model_json)->required();
  sim->add_option("--arma", o.arma_json, "ARMA JSON; fitted from the input when omitted");
  sim->add_option("--output-dir", o.cfg.output_dir);

  auto* sm = app.add_subcommand("smooth", "curvature smoothing of a scenario CSV");
  add_input(sm, o, false);
  add_curvature(sm, o);
  sm->add_option("--scenarios-csv", o.scenarios_csv)->required();
  sm->add_option("--output", o.output, "defaults to overwriting the input file");

  auto* score = app.add_subcommand("score", "score a scenario CSV against the input data");
  add_input(score, o);
  add_target(score, o);
  add_scoring(score, o);
  score->add_option("--scenarios-csv", o.scenarios_csv)->required();
  score->add_option("--mode", o.mode, "label stored in the report");
  score->add_option("--output-dir", o.cfg.output_dir);

  auto* fx = app.add_subcommand("make-fixture", "write a synthetic paired CSV");
  fx->add_option("--kind", o.fixture_kind, "iid-error, ar1-error or heteroscedastic");
  fx->add_option("--n", o.fixture_n);
  fx->add_option("--seed", o.cfg.seed);
  fx->add_option("--cap", o.cfg.cap);
  fx->add_option("--output", o.output);

  auto* run_cmd = app.add_subcommand("run", "full pipeline: fit, target, simulate, score");
  std::string config_path;  // consumed by expand_config before parsing
  run_cmd->add_option("--config", config_path, "flat key = value file mirroring the flags; flags override it");
  add_input(run_cmd, o);
  add_fit(run_cmd, o);
  add_sid(run_cmd, o);
  add_target(run_cmd, o);
  add_simulation(run_cmd, o);
  add_curvature(run_cmd, o);
  add_scoring(run_cmd, o);
  run_cmd->add_option("--output-dir", o.cfg.output_dir);

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = expand_config(std::move(args));
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    finalize(o);
    if (*fit) return cmd_fit(o);
    if (*target) return cmd_target(o);
    if (*sim) return cmd_simulate(o);
    if (*sm) return cmd_smooth(o);
    if (*score) return cmd_score(o);
    if (*fx) return cmd_fixture(o);
    if (*run_cmd) return cmd_run(o);
  } catch (const InfeasibleTarget& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInfeasible;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return kSolver;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
