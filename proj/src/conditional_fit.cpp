#include "mareforge/conditional_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "mareforge/error.hpp"

namespace mareforge {

namespace {

// m (1 - m) / v - 1 must stay positive for the closed form.
constexpr double kMeanClamp = 1e-6;
constexpr double kVarianceShrink = 0.99;
constexpr double kVarianceFloor = 1e-6;

}  // namespace

double empirical_cdf(std::span<const double> sorted_x, double v) {
  const auto it = std::upper_bound(sorted_x.begin(), sorted_x.end(), v);
  return static_cast<double>(it - sorted_x.begin()) /
         static_cast<double>(sorted_x.size());
}

double empirical_quantile(std::span<const double> sorted_x, double p) {
  const auto n = sorted_x.size();
  if (p <= 0.0) return sorted_x.front();
  // 1e-9 guards k/n products like 0.45 * 100 = 45.000000000000007.
  auto k = static_cast<std::size_t>(
      std::ceil(p * static_cast<double>(n) - 1e-9));
  k = std::clamp<std::size_t>(k, 1, n);
  return sorted_x[k - 1];
}

EstimationWindow estimation_window(std::span<const double> sorted_x, double x,
                                   double a) {
  if (sorted_x.empty()) throw DomainError("estimation window: empty sample");
  if (!(a > 0.0 && a <= 0.5))
    throw DomainError("estimation window: fraction a must lie in (0, 0.5]");
  const double g = empirical_cdf(sorted_x, x);
  EstimationWindow w;
  w.lo = empirical_quantile(sorted_x, g - a);
  w.hi = empirical_quantile(sorted_x, g + a);
  w.center = 0.5 * (w.lo + w.hi);
  w.first = static_cast<std::size_t>(
      std::lower_bound(sorted_x.begin(), sorted_x.end(), w.lo) - sorted_x.begin());
  w.last = static_cast<std::size_t>(
      std::upper_bound(sorted_x.begin(), sorted_x.end(), w.hi) - sorted_x.begin());
  if (w.count() == 0) throw DomainError("estimation window: empty sample");
  return w;
}

SampleStats sample_stats(std::span<const double> errors) {
  if (errors.empty()) throw DomainError("sample statistics of an empty sample");
  SampleStats st;
  st.count = errors.size();
  st.min = *std::min_element(errors.begin(), errors.end());
  st.max = *std::max_element(errors.begin(), errors.end());
  double sum = 0.0;
  for (double e : errors) sum += e;
  st.mean = sum / static_cast<double>(st.count);
  double ss = 0.0;
  for (double e : errors) ss += (e - st.mean) * (e - st.mean);
  st.variance = ss / static_cast<double>(st.count);
  return st;
}

LocationScale fit_location(double min_error, double max_error, double x,
                           double cap) {
  LocationScale ls;
  ls.l = std::min(std::max(min_error, -x), 0.0) + 0.0;  // + 0.0 turns -0 into 0
  const double upper = std::min(max_error, cap - x);
  ls.s = std::max(upper - ls.l, 0.0);
  return ls;
}

LocationScale fit_location(std::span<const double> errors, double x,
                           double cap) {
  if (errors.empty()) throw DomainError("fit_location: empty sample");
  const auto [lo, hi] = std::minmax_element(errors.begin(), errors.end());
  return fit_location(*lo, *hi, x, cap);
}

ShapeParams fit_shape_moments(double mean, double variance, double l, double s) {
  if (!(s > 0.0)) throw DomainError("moment fit: zero scale");
  if (!(variance > 0.0)) throw DomainError("moment fit: zero variance");
  const double m = (mean - l) / s;
  if (!(m > 0.0 && m < 1.0))
    throw DomainError("moment fit: mean outside the beta support");
  const double v = variance / (s * s);
  const double k = m * (1.0 - m) / v - 1.0;
  if (!(k > 0.0))
    throw DomainError("variance incompatible with beta support");
  return ShapeParams{m * k, (1.0 - m) * k};
}

ShapeParams fit_shape_moments(std::span<const double> errors, double l, double s) {
  const auto st = sample_stats(errors);
  return fit_shape_moments(st.mean, st.variance, l, s);
}

BetaParams fit_beta(const SampleStats& stats, double x, double cap,
                    bool* fallback) {
  const auto ls = fit_location(stats.min, stats.max, x, cap);
  BetaParams p{1.0, 1.0, ls.l, ls.s};
  bool adjusted = false;
  if (ls.s <= cap * 1e-12) {
    p.s = 0.0;
    adjusted = true;
  } else {
    double m = (stats.mean - ls.l) / ls.s;
    if (!(m >= kMeanClamp && m <= 1.0 - kMeanClamp)) {
      m = std::clamp(m, kMeanClamp, 1.0 - kMeanClamp);
      adjusted = true;
    }
    const double bound = m * (1.0 - m);
    double v = stats.variance / (ls.s * ls.s);
    if (v >= bound) {
      v = kVarianceShrink * bound;
      adjusted = true;
    } else if (v < kVarianceFloor * bound) {
      v = kVarianceFloor * bound;
      adjusted = true;
    }
    const double k = bound / v - 1.0;
    p.alpha = m * k;
    p.beta = (1.0 - m) * k;
  }
  if (fallback) *fallback = adjusted;
  return p;
}

FittedModel::FittedModel(double cap, double a, std::vector<FittedLevel> levels)
    : cap_(cap), a_(a), levels_(std::move(levels)) {
  if (levels_.empty()) throw DomainError("fitted model has no levels");
  std::stable_sort(levels_.begin(), levels_.end(),
                   [](const FittedLevel& l, const FittedLevel& r) {
                     return l.x_bar < r.x_bar;
                   });
}

const FittedLevel& FittedModel::nearest_level(double x) const {
  auto it = std::lower_bound(
      levels_.begin(), levels_.end(), x,
      [](const FittedLevel& l, double v) { return l.x_bar < v; });
  if (it == levels_.end()) return levels_.back();
  if (it == levels_.begin()) return *it;
  auto prev = std::prev(it);
  // Several levels can share a center; prefer the first of the closer group.
  if (x - prev->x_bar <= it->x_bar - x) {
    while (prev != levels_.begin() && std::prev(prev)->x_bar == prev->x_bar) --prev;
    return *prev;
  }
  return *it;
}

BetaParams FittedModel::params_for(double x) const {
  const auto& level = nearest_level(x);
  if (x == level.x_bar) return level.params;
  return fit_beta(level.stats, x, cap_);
}

FittedModel fit_all(const PairedSeries& series, double a) {
  const auto n = series.size();
  if (!(a <= 0.5) || !(a >= 2.0 / static_cast<double>(n)))
    throw DomainError("window fraction a must lie in [2/n, 0.5]");
  const auto perm = sorted_view(series);
  std::vector<double> xs(n), es(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = series.x()[perm[i]];
    es[i] = series.y()[perm[i]] - series.x()[perm[i]];
  }

  std::vector<FittedLevel> levels;
  std::map<std::pair<std::size_t, std::size_t>, bool> seen;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0 && xs[i] == xs[i - 1]) continue;
    const auto w = estimation_window(xs, xs[i], a);
    if (!seen.emplace(std::pair{w.first, w.last}, true).second) continue;
    FittedLevel level;
    level.x_bar = w.center;
    level.window_lo = w.lo;
    level.window_hi = w.hi;
    level.stats = sample_stats(std::span(es).subspan(w.first, w.count()));
    level.params = fit_beta(level.stats, w.center, series.cap(), &level.fallback);
    levels.push_back(level);
  }
  return FittedModel(series.cap(), a, std::move(levels));
}

double density_discrepancy(const PairedSeries& series, const FittedModel& model) {
  const auto n = series.size();
  const double cap = series.cap();
  const auto bins = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
  const double dx = cap / static_cast<double>(bins);
  const double de = 2.0 * cap / static_cast<double>(bins);
  const auto x_bin = [&](double x) {
    return std::min(static_cast<std::size_t>(x / dx), bins - 1);
  };
  const auto e_bin = [&](double e) {
    const double t = std::clamp((e + cap) / de, 0.0, static_cast<double>(bins));
    return std::min(static_cast<std::size_t>(t), bins - 1);
  };

  std::vector<double> empirical(bins * bins, 0.0), fitted(bins * bins, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = series.x()[i];
    const double e = series.y()[i] - x;
    const auto bx = x_bin(x);
    empirical[bx * bins + e_bin(e)] += 1.0;

    const auto p = model.params_for(x);
    if (p.s <= 0.0) {
      fitted[bx * bins + e_bin(p.l)] += 1.0;
      continue;
    }
    const auto j0 = e_bin(p.lower());
    const auto j1 = e_bin(p.upper());
    double prev = 0.0;
    for (std::size_t j = j0; j <= j1; ++j) {
      const double edge = -cap + static_cast<double>(j + 1) * de;
      const double c = (j == j1) ? 1.0 : p.cdf(edge);
      fitted[bx * bins + j] += c - prev;
      prev = c;
    }
  }
  double d2 = 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k < empirical.size(); ++k) {
    const double diff = (empirical[k] - fitted[k]) * inv_n;
    d2 += diff * diff;
  }
  // Cell masses -> densities: (mass / area)^2 * area.
  return d2 / (dx * de);
}

WindowSelection select_a(const PairedSeries& series,
                         std::span<const double> candidate_as) {
  if (candidate_as.empty()) throw DomainError("select_a: no candidates");
  WindowSelection sel;
  double best = std::numeric_limits<double>::infinity();
  for (double a : candidate_as) {
    const auto model = fit_all(series, a);
    const double d2 = density_discrepancy(series, model);
    sel.curve.emplace_back(a, d2);
    if (d2 < best) {
      best = d2;
      sel.best_a = a;
    }
  }
  return sel;
}

}  // namespace mareforge
