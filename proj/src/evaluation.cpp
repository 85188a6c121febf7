#include "mareforge/evaluation.hpp"

#include <cmath>
#include <cstdio>

#include "mareforge/curvature_opt.hpp"
#include "mareforge/dataio.hpp"
#include "mareforge/error.hpp"

namespace mareforge {

namespace {

double combine(double sum_sq, std::size_t m, const ScoreOptions& options) {
  return std::sqrt(options.normalized ? sum_sq / static_cast<double>(m) : sum_sq);
}

void require_scenarios(Scenarios scenarios, std::size_t n) {
  if (scenarios.empty()) throw DomainError("no scenarios to score");
  for (const auto& s : scenarios)
    if (s.size() != n) throw DomainError("scenario length differs from the input series");
}

}  // namespace

double score_mare(Scenarios scenarios, std::span<const double> x, double r_tilde,
                  const ScoreOptions& options) {
  require_scenarios(scenarios, x.size());
  double sum_sq = 0.0;
  for (const auto& y : scenarios) {
    const double dev = 100.0 * r_tilde - mape(x, y);
    sum_sq += dev * dev;
  }
  return combine(sum_sq, scenarios.size(), options);
}

std::vector<double> autocorrelation(std::span<const double> e, std::size_t max_lag) {
  const std::size_t n = e.size();
  if (max_lag >= n) throw DomainError("lag count must be below the series length");
  double mean = 0.0;
  for (double v : e) mean += v;
  mean /= static_cast<double>(n);
  std::vector<double> c(n);
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    c[i] = e[i] - mean;
    var += c[i] * c[i];
  }
  var /= static_cast<double>(n);
  if (!(var > 0.0)) throw DomainError("autocorrelation of a constant series");
  std::vector<double> rho(max_lag);
  for (std::size_t j = 1; j <= max_lag; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i + j < n; ++i) acc += c[i + j] * c[i];
    rho[j - 1] = acc / (static_cast<double>(n - j) * var);
  }
  return rho;
}

double score_autocorrelation(Scenarios scenarios, std::span<const double> x,
                             std::span<const double> input_errors,
                             std::size_t max_lag, const ScoreOptions& options) {
  require_scenarios(scenarios, x.size());
  const auto target = autocorrelation(input_errors, max_lag);
  double sum_sq = 0.0;
  std::vector<double> err(x.size());
  for (const auto& y : scenarios) {
    for (std::size_t i = 0; i < x.size(); ++i) err[i] = y[i] - x[i];
    const auto rho = autocorrelation(err, max_lag);
    for (std::size_t j = 0; j < max_lag; ++j) sum_sq += (target[j] - rho[j]) * (target[j] - rho[j]);
  }
  return combine(sum_sq, scenarios.size(), options);
}

double mean_second_difference(std::span<const double> y, bool signed_form) {
  const auto s = second_difference(y);
  double acc = 0.0;
  for (double v : s) acc += signed_form ? v : std::abs(v);
  return acc / static_cast<double>(s.size());
}

double score_second_difference(Scenarios scenarios, std::span<const double> reference,
                               const ScoreOptions& options) {
  if (scenarios.empty()) throw DomainError("no scenarios to score");
  const double target = mean_second_difference(reference, options.signed_second_difference);
  double sum_sq = 0.0;
  for (const auto& y : scenarios) {
    const double dev = target - mean_second_difference(y, options.signed_second_difference);
    sum_sq += dev * dev;
  }
  return combine(sum_sq, scenarios.size(), options);
}

double composite_score(double s_mare, double s_autocorr, double s_second_diff,
                       const ScoreWeights& w) {
  if (w.mare < 0.0 || w.autocorr < 0.0 || w.second_diff < 0.0)
    throw DomainError("score weights must be nonnegative");
  return w.mare * s_mare + w.autocorr * s_autocorr + w.second_diff * s_second_diff;
}

ScoreReport evaluate(Scenarios scenarios, std::span<const double> x, double r_tilde,
                     std::span<const double> input_errors,
                     std::span<const double> reference, std::size_t max_lag,
                     const ScoreWeights& weights, std::string mode,
                     const ScoreOptions& options) {
  ScoreReport r;
  r.s_mare = score_mare(scenarios, x, r_tilde, options);
  r.s_autocorr = score_autocorrelation(scenarios, x, input_errors, max_lag, options);
  r.s_second_diff = score_second_difference(scenarios, reference, options);
  r.composite = composite_score(r.s_mare, r.s_autocorr, r.s_second_diff, weights);
  r.m = scenarios.size();
  r.n_t = x.size();
  r.mode = std::move(mode);
  r.p_lags = max_lag;
  r.weights = weights;
  r.options = options;
  return r;
}

std::string format_report(const ScoreReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "%-16s %14s\n%-16s %14.6f\n%-16s %14.6f\n%-16s %14.6f\n%-16s %14.6f\n"
                "%-16s %14zu\n%-16s %14zu\n%-16s %14zu\n%-16s %14s\n",
                "score", "value", "s_mare", r.s_mare, "s_autocorr", r.s_autocorr,
                "s_second_diff", r.s_second_diff, "composite", r.composite, "M", r.m,
                "n_t", r.n_t, "p_lags", r.p_lags, "mode", r.mode.c_str());
  return buf;
}

}  // namespace mareforge
