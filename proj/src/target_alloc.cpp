#include "mareforge/target_alloc.hpp"

#include <algorithm>
#include <array>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>

#include "mareforge/error.hpp"
#include "mareforge/parallel.hpp"

namespace mareforge {

double nu(double l, double s, double alpha, double beta) {
  if (s <= 0.0) return std::abs(l);
  const double mu = alpha / (alpha + beta);
  const double t0 = std::clamp(-l / s, 0.0, 1.0);
  double i0 = 0.0, i1 = 0.0;
  if (t0 >= 1.0) {
    i0 = i1 = 1.0;
  } else if (t0 > 0.0) {
    i0 = boost::math::ibeta(alpha, beta, t0);
    i1 = boost::math::ibeta(alpha + 1.0, beta, t0);
  }
  // Cancellation can leave a tiny negative value when the law hugs zero.
  return std::max(0.0, l * (1.0 - 2.0 * i0) + s * mu * (1.0 - 2.0 * i1));
}

double m_max(double x, double alpha, double beta, double cap) {
  const double room = std::max(cap - x, 0.0);
  const double mu = alpha / (alpha + beta);
  // Vertices (0,0), (-x,0), (0,cap-x), (-x,cap).
  return std::max({0.0, x, room * mu, nu(-x, cap, alpha, beta)});
}

WeightFunction WeightFunction::from_mae(std::span<const double> xs,
                                        std::span<const double> m_hats) {
  if (xs.size() != m_hats.size())
    throw DomainError("weight function: length mismatch");
  std::vector<WeightLevel> levels;
  std::vector<std::size_t> order(xs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  double sum = 0.0;
  std::size_t n_pos = 0;
  for (auto i : order) {
    const double x = xs[i];
    if (!(x > 0.0)) continue;
    sum += m_hats[i] / x;
    ++n_pos;
    if (!levels.empty() && levels.back().x == x) {
      ++levels.back().count;
    } else {
      levels.push_back(WeightLevel{x, m_hats[i], 0.0, 1});
    }
  }
  if (n_pos == 0) throw DomainError("weight function: every input is zero");
  const double r = sum / static_cast<double>(n_pos);
  if (!(r > 0.0))
    throw DomainError("weight function: model MARE is zero (degenerate errors)");
  for (auto& lv : levels) lv.omega = lv.m_hat / (lv.x * r);
  return WeightFunction(std::move(levels), r);
}

const WeightLevel& WeightFunction::nearest(double x) const {
  auto it = std::lower_bound(
      levels_.begin(), levels_.end(), x,
      [](const WeightLevel& l, double v) { return l.x < v; });
  if (it == levels_.end()) return levels_.back();
  if (it == levels_.begin()) return *it;
  auto prev = std::prev(it);
  return (x - prev->x <= it->x - x) ? *prev : *it;
}

double WeightFunction::omega(double x) const { return nearest(x).omega; }

double WeightFunction::mean_weight() const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& lv : levels_) {
    sum += lv.omega * static_cast<double>(lv.count);
    n += lv.count;
  }
  return sum / static_cast<double>(n);
}

WeightFunction weight_function(const FittedModel& model,
                               const PairedSeries& series) {
  const auto xs = series.x();
  std::vector<double> m_hats(xs.size());
  // Many observations share a value; evaluate each distinct x once.
  const auto perm = sorted_view(xs);
  for (std::size_t k = 0; k < perm.size(); ++k) {
    const auto i = perm[k];
    if (k > 0 && xs[perm[k - 1]] == xs[i]) {
      m_hats[i] = m_hats[perm[k - 1]];
      continue;
    }
    m_hats[i] = nu(model.params_for(xs[i]));
  }
  return WeightFunction::from_mae(xs, m_hats);
}

double plausibility_score(const WeightFunction& weights, const SidSelection& sid) {
  double sum = 0.0;
  std::size_t n = 0;
  for (double x : sid.x) {
    if (!(x > 0.0)) continue;
    sum += weights.omega(x);
    ++n;
  }
  if (n == 0) throw DomainError("plausibility score: SID has no positive input");
  return sum / static_cast<double>(n);
}

namespace {

std::vector<double> distinct_sorted(std::span<const double> v) {
  std::vector<double> out(v.begin(), v.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

FeasibleRegion feasible_region(const WeightFunction& weights,
                               const SidSelection& sid,
                               const FittedModel& model) {
  const double p = plausibility_score(weights, sid);
  FeasibleRegion region{std::numeric_limits<double>::infinity(), 0.0};
  double best = std::numeric_limits<double>::infinity();
  for (double x : distinct_sorted(sid.x)) {
    if (!(x > 0.0)) continue;
    const double w = weights.omega(x);
    if (!(w > 0.0)) continue;
    const auto params = model.params_for(x);
    const double ratio = m_max(x, params.alpha, params.beta, model.cap()) / (x * w);
    if (ratio < best) {
      best = ratio;
      region.binding_x = x;
    }
  }
  region.max_r_tilde = p * best;
  return region;
}

const TargetLevel& TargetFunction::at(double x) const {
  auto it = std::lower_bound(levels.begin(), levels.end(), x,
                             [](const TargetLevel& l, double v) { return l.x < v; });
  if (it == levels.end() || it->x != x)
    throw DomainError("target function has no level at x = " + std::to_string(x));
  return *it;
}

double TargetFunction::expected_mare(const SidSelection& sid) const {
  double sum = 0.0;
  std::size_t n = 0;
  for (double x : sid.x) {
    if (!(x > 0.0)) continue;
    sum += at(x).m_tilde / x;
    ++n;
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

TargetFunction target_function(const WeightFunction& weights,
                               const FittedModel& model,
                               const SidSelection& sid, double r_tilde) {
  if (!(r_tilde >= 0.0)) throw DomainError("target MARE must be nonnegative");
  const auto region = feasible_region(weights, sid, model);
  if (r_tilde > region.max_r_tilde)
    throw InfeasibleTarget(
        "target MAPE " + format_value(100.0 * r_tilde) +
            "% exceeds the maximum feasible MAPE " +
            format_value(100.0 * region.max_r_tilde) + "% (binding x = " +
            format_value(region.binding_x) + ")",
        region.max_r_tilde, region.binding_x);

  TargetFunction target;
  target.r_tilde = r_tilde;
  target.plausibility_score = plausibility_score(weights, sid);
  target.max_r_tilde = region.max_r_tilde;
  for (double x : distinct_sorted(sid.x)) {
    const auto params = model.params_for(x);
    TargetLevel lv;
    lv.x = x;
    lv.m_max = m_max(x, params.alpha, params.beta, model.cap());
    if (x > 0.0) {
      lv.omega_tilde = weights.omega(x) / target.plausibility_score;
      lv.m_tilde = r_tilde * x * lv.omega_tilde;
    } else {
      lv.m_tilde = nu(params);
    }
    target.levels.push_back(lv);
  }
  return target;
}

namespace {

struct CurveSolver {
  double x;
  double cap;
  ShapeParams shape;
  LocationScale est;
  double target;

  static constexpr std::size_t kGrid = 256;
  static constexpr int kRefine = 60;

  // Point of the level curve nu = target in direction theta; l = cos, s = sin.
  std::array<double, 2> point(double theta) const {
    const double c = std::cos(theta), s = std::sin(theta);
    const double r = target / nu(c, s, shape.alpha, shape.beta);
    return {r * c, r * s};
  }
  double violation(const std::array<double, 2>& p) const {
    return std::max(-x - p[0], p[0] + p[1] - (cap - x));
  }
  double dist2(const std::array<double, 2>& p) const {
    return (p[0] - est.l) * (p[0] - est.l) + (p[1] - est.s) * (p[1] - est.s);
  }
  bool feasible(double theta) const {
    return violation(point(theta)) <= 1e-12 * cap;
  }

  // Boundary between a feasible and an infeasible angle.
  double boundary(double feasible_theta, double infeasible_theta) const {
    for (int k = 0; k < kRefine; ++k) {
      const double mid = 0.5 * (feasible_theta + infeasible_theta);
      (feasible(mid) ? feasible_theta : infeasible_theta) = mid;
    }
    return feasible_theta;
  }

  double golden(double a, double b) const {
    constexpr double g = 0.6180339887498949;
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = dist2(point(c)), fd = dist2(point(d));
    for (int k = 0; k < kRefine && b - a > 1e-15; ++k) {
      if (fc < fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - g * (b - a);
        fc = dist2(point(c));
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + g * (b - a);
        fd = dist2(point(d));
      }
    }
    return fc < fd ? c : d;
  }

  std::optional<LocationScale> solve() const {
    constexpr double lo = std::numbers::pi / 2.0, hi = std::numbers::pi;
    std::vector<double> thetas;
    thetas.reserve(kGrid + 8);
    for (std::size_t k = 0; k <= kGrid; ++k)
      thetas.push_back(lo + (hi - lo) * static_cast<double>(k) / kGrid);
    // Box vertices and the estimated point's direction.
    thetas.push_back(std::atan2(cap, -x));
    if (est.l != 0.0 || est.s != 0.0) {
      const double th = std::atan2(est.s, est.l);
      if (th >= lo && th <= hi) thetas.push_back(th);
    }
    std::sort(thetas.begin(), thetas.end());
    thetas.erase(std::unique(thetas.begin(), thetas.end()), thetas.end());

    std::vector<char> ok(thetas.size());
    std::vector<double> f(thetas.size());
    for (std::size_t k = 0; k < thetas.size(); ++k) {
      const auto p = point(thetas[k]);
      ok[k] = violation(p) <= 1e-12 * cap;
      f[k] = dist2(p);
    }

    double best_theta = 0.0;
    double best = std::numeric_limits<double>::infinity();
    auto consider = [&](double theta) {
      if (!feasible(theta)) return;
      const double v = dist2(point(theta));
      if (v < best) {
        best = v;
        best_theta = theta;
      }
    };

    for (std::size_t k = 0; k < thetas.size(); ++k) {
      if (!ok[k]) continue;
      // Feasible-interval edges.
      if (k > 0 && !ok[k - 1]) consider(boundary(thetas[k], thetas[k - 1]));
      if (k + 1 < thetas.size() && !ok[k + 1])
        consider(boundary(thetas[k], thetas[k + 1]));
      consider(thetas[k]);
      // Local minima of the distance along the curve.
      const bool left = k == 0 || !ok[k - 1] || f[k] <= f[k - 1];
      const bool right = k + 1 == thetas.size() || !ok[k + 1] || f[k] <= f[k + 1];
      if (left && right) {
        double a = k > 0 ? thetas[k - 1] : thetas[k];
        double b = k + 1 < thetas.size() ? thetas[k + 1] : thetas[k];
        if (k > 0 && !ok[k - 1]) a = boundary(thetas[k], thetas[k - 1]);
        if (k + 1 < thetas.size() && !ok[k + 1]) b = boundary(thetas[k], thetas[k + 1]);
        if (b > a) consider(golden(a, b));
      }
    }
    if (!std::isfinite(best)) return std::nullopt;
    const auto p = point(best_theta);
    LocationScale out;
    out.l = std::clamp(p[0], -x, 0.0);
    out.s = std::clamp(p[1], 0.0, std::max(cap - x - out.l, 0.0));
    return out;
  }
};

}  // namespace

LocationScale solve_location(double x, double cap, ShapeParams shape,
                             LocationScale estimated, double target) {
  if (!(target > 0.0)) return LocationScale{0.0, 0.0};
  const double top = m_max(x, shape.alpha, shape.beta, cap);
  if (target > top) {
    if (target > top * (1.0 + 1e-9))
      throw SolverError("MAE target " + format_value(target) +
                        " exceeds the attainable maximum " + format_value(top) +
                        " at x = " + format_value(x));
    target = top;
  }
  const CurveSolver solver{x, cap, shape, estimated, target};
  const auto sol = solver.solve();
  if (!sol || std::abs(nu(sol->l, sol->s, shape.alpha, shape.beta) - target) >
                  1e-6 * cap)
    throw SolverError("location solve did not converge at x = " + format_value(x));
  return *sol;
}

const AdjustedLevel& AdjustedParams::at(double x) const {
  auto it = std::lower_bound(levels.begin(), levels.end(), x,
                             [](const AdjustedLevel& l, double v) { return l.x < v; });
  if (it == levels.end() || it->x != x)
    throw DomainError("adjusted parameters have no level at x = " + std::to_string(x));
  return *it;
}

AdjustedParams adjust_params(const FittedModel& model,
                             const TargetFunction& target) {
  AdjustedParams out;
  out.levels.resize(target.levels.size());
  parallel_for(target.levels.size(), [&](std::size_t k) {
    const auto& tl = target.levels[k];
    auto& lv = out.levels[k];
    lv.x = tl.x;
    lv.estimated = model.params_for(tl.x);
    lv.adjusted = lv.estimated;
    if (!(tl.x > 0.0)) return;
    const auto ls = solve_location(tl.x, model.cap(),
                                   {lv.estimated.alpha, lv.estimated.beta},
                                   {lv.estimated.l, lv.estimated.s}, tl.m_tilde);
    lv.adjusted.l = ls.l;
    lv.adjusted.s = ls.s;
  });
  return out;
}

}  // namespace mareforge
