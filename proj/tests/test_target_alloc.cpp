#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "mareforge/error.hpp"
#include "mareforge/fixture.hpp"
#include "mareforge/rng.hpp"
#include "mareforge/target_alloc.hpp"
#include "oracles.hpp"

using namespace mareforge;

namespace {

// Grid maximum of the closed-form nu (checked against quadrature in the Nu tests) over the box -x <= l <= 0, 0 <= s <= cap - x - l.
double m_max_grid(double x, double alpha, double beta, double cap, int steps) {
  double best = 0.0;
  for (int i = 0; i <= steps; ++i) {
    const double l = -x * i / steps;
    const double smax = cap - x - l;
    for (int j = 0; j <= steps; ++j) best = std::max(best, nu(l, smax * j / steps, alpha, beta));
  }
  return best;
}

// Twenty input levels 0, 5, ..., 95 with N(0, 8) errors clipped to the range.
PairedSeries twenty_levels(std::uint64_t seed) {
  RandomStream rs(seed, 0);
  const std::size_t n = 2000;
  std::vector<Timestamp> ts(n);
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    ts[i] = Timestamp{std::chrono::hours{i}};
    x[i] = 5.0 * static_cast<double>(i % 20);
    y[i] = std::clamp(x[i] + 8.0 * rs.normal(), 0.0, 100.0);
  }
  return PairedSeries(ts, x, y, 100.0);
}

}  // namespace

TEST(Nu, ClosedFormExamples) {
  EXPECT_NEAR(nu(-1, 2, 1, 1), 0.5, 1e-14);
  EXPECT_NEAR(nu(-2, 2, 1, 1), 1.0, 1e-14);
  EXPECT_NEAR(nu(-1, 3, 2, 5), oracle::nu_quadrature(-1, 3, 2, 5), 1e-10);
  EXPECT_EQ(nu(-3, 0, 2, 2), 3.0);
}

TEST(Nu, MatchesQuadratureOnRandomLaws) {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> logshape(std::log(0.5), std::log(20.0));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const double a = std::exp(logshape(gen)), b = std::exp(logshape(gen));
    const double s = 0.1 + 100.0 * unit(gen);
    const double l = -s * (1.2 * unit(gen) - 0.1);
    const double ref = oracle::nu_quadrature(l, s, a, b);
    EXPECT_NEAR(nu(l, s, a, b), ref, 1e-8 * ref) << a << ' ' << b << ' ' << l << ' ' << s;
  }
}

TEST(Nu, LargeScaleLimit) {
  for (auto [a, b] : {std::pair{2.0, 3.0}, std::pair{0.7, 4.0}, std::pair{5.0, 1.5}}) {
    const double l = -1.0, s = 1e6;
    EXPECT_NEAR(nu(l, s, a, b) * (a + b) / (s * a), 1.0, 1e-3);
  }
}

TEST(Nu, ConvexAndHomogeneous) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    const double a = 0.5 + 5 * u(gen), b = 0.5 + 5 * u(gen);
    const double l1 = -10 * u(gen), s1 = 10 * u(gen), l2 = -10 * u(gen), s2 = 10 * u(gen), t = u(gen);
    const double mid = nu(t * l1 + (1 - t) * l2, t * s1 + (1 - t) * s2, a, b);
    EXPECT_LE(mid, t * nu(l1, s1, a, b) + (1 - t) * nu(l2, s2, a, b) + 1e-12);
    EXPECT_NEAR(nu(3 * l1, 3 * s1, a, b), 3 * nu(l1, s1, a, b), 1e-10 * (1 + nu(l1, s1, a, b)));
  }
}

TEST(MMax, ZeroInputAndGridOracle) {
  EXPECT_NEAR(m_max(0.0, 2.0, 3.0, 100.0), 100.0 * 2.0 / 5.0, 1e-10);
  EXPECT_GE(m_max(50.0, 1.0, 1.0, 100.0), nu(-50, 100, 1, 1) - 1e-12);
  EXPECT_NEAR(nu(-50, 100, 1, 1), 25.0, 1e-12);
  for (auto [x, a, b] : {std::tuple{10.0, 2.0, 5.0}, std::tuple{50.0, 1.0, 1.0}, std::tuple{90.0, 0.6, 0.8},
                         std::tuple{30.0, 8.0, 2.0}}) {
    const double grid = m_max_grid(x, a, b, 100.0, 60);
    const double exact = m_max(x, a, b, 100.0);
    EXPECT_GE(exact, grid - 1e-9);
    EXPECT_LE(exact, grid * (1.0 + 1e-9));  // the vertices are on the grid
  }
}

TEST(MMax, DominatesEstimatedMae) {
  const auto s = make_fixture(FixtureKind::heteroscedastic, 800, 2);
  const auto model = fit_all(s, 0.05);
  for (const auto& lv : model.levels())
    EXPECT_GE(m_max(lv.x_bar, lv.params.alpha, lv.params.beta, s.cap()), nu(lv.params) - 1e-12);
}

TEST(WeightFunction, TwoLevelToy) {
  const std::vector<double> xs{10, 100}, m{1, 1};
  const auto w = WeightFunction::from_mae(xs, m);
  EXPECT_NEAR(w.r_mhat(), 0.055, 1e-15);
  EXPECT_NEAR(w.omega(10), 1.0 / 0.55, 1e-12);
  EXPECT_NEAR(w.omega(100), 0.1 / 0.55, 1e-12);
  EXPECT_NEAR(w.mean_weight(), 1.0, 1e-12);
}

TEST(WeightFunction, AveragesToOneAndHyperbolicWhenHomoscedastic) {
  const auto s = make_fixture(FixtureKind::ar1_error, 1000, 4);
  const auto w = weight_function(fit_all(s, 0.05), s);
  double sum = 0.0;
  std::size_t n = 0;
  for (double x : s.x())
    if (x > 0) {
      sum += w.omega(x);
      ++n;
    }
  EXPECT_NEAR(sum / n, 1.0, 1e-9);

  std::vector<double> xs{5, 10, 20, 40, 80}, m(5, 2.0);
  const auto h = WeightFunction::from_mae(xs, m);
  for (double x : xs) EXPECT_NEAR(h.omega(x) * x, h.omega(5) * 5, 1e-12);
}

TEST(Plausibility, Examples) {
  const auto s = make_fixture(FixtureKind::ar1_error, 1000, 4);
  const auto w = weight_function(fit_all(s, 0.05), s);
  EXPECT_NEAR(plausibility_score(w, sid_from_series(s)), 1.0, 1e-9);

  SidSelection low;
  low.cap = s.cap();
  for (double x : s.x())
    if (x > 0 && x < 20) low.x.push_back(x);
  low.timestamps.resize(low.x.size());
  EXPECT_GT(plausibility_score(w, low), 1.0);

  const std::vector<double> xs{10, 20}, m{3, 2};
  const auto toy = WeightFunction::from_mae(xs, m);
  SidSelection one;
  one.x = {20};
  one.timestamps.resize(1);
  EXPECT_NEAR(plausibility_score(toy, one), 0.5, 1e-12);
}

TEST(TargetFunction, IdentitiesAndLinearity) {
  const auto s = make_fixture(FixtureKind::heteroscedastic, 1000, 9);
  const auto model = fit_all(s, 0.05);
  const auto w = weight_function(model, s);
  const auto sid = sid_from_series(s);
  const auto at_r = target_function(w, model, sid, w.r_mhat());
  for (const auto& lv : at_r.levels) EXPECT_NEAR(lv.m_tilde, nu(model.params_for(lv.x)), 1e-9 * s.cap());
  EXPECT_NEAR(at_r.expected_mare(sid), w.r_mhat(), 1e-12);

  const auto zero = target_function(w, model, sid, 0.0);
  for (const auto& lv : zero.levels)
    if (lv.x > 0) EXPECT_EQ(lv.m_tilde, 0.0);

  const double r = 0.3 * at_r.max_r_tilde;
  const auto t1 = target_function(w, model, sid, r);
  const auto t2 = target_function(w, model, sid, 2 * r);
  for (std::size_t i = 0; i < t1.levels.size(); ++i)
    if (t1.levels[i].x > 0) EXPECT_NEAR(t2.levels[i].m_tilde, 2 * t1.levels[i].m_tilde, 1e-12 * s.cap());
  EXPECT_NEAR(t1.expected_mare(sid), r, 1e-12);
}

TEST(FeasibleRegion, BoundaryContractAndOracle) {
  const auto s = make_fixture(FixtureKind::ar1_error, 600, 21);
  const auto model = fit_all(s, 0.05);
  const auto w = weight_function(model, s);
  const auto sid = sid_from_series(s);
  const auto region = feasible_region(w, sid, model);
  EXPECT_NO_THROW(target_function(w, model, sid, region.max_r_tilde));
  EXPECT_THROW(target_function(w, model, sid, region.max_r_tilde * (1 + 1e-6)), InfeasibleTarget);

  // Direct evaluation of P * min m_max / (x omega) with the grid oracle for m_max.
  double best = 1e300;
  for (const auto& lv : w.levels()) {
    const auto p = model.params_for(lv.x);
    best = std::min(best, m_max_grid(lv.x, p.alpha, p.beta, s.cap(), 30) / (lv.x * lv.omega));
  }
  EXPECT_GE(region.max_r_tilde, best * (1 - 1e-9));
  EXPECT_LE(region.max_r_tilde, best * 1.01);
}

TEST(FeasibleRegion, LargerCapNeverShrinks) {
  const auto s = make_fixture(FixtureKind::iid_error, 600, 5);
  const PairedSeries wide(std::vector<Timestamp>(s.timestamps().begin(), s.timestamps().end()),
                          std::vector<double>(s.x().begin(), s.x().end()),
                          std::vector<double>(s.y().begin(), s.y().end()), 150.0);
  const auto m1 = fit_all(s, 0.05), m2 = fit_all(wide, 0.05);
  const auto r1 = feasible_region(weight_function(m1, s), sid_from_series(s), m1);
  const auto r2 = feasible_region(weight_function(m2, wide), sid_from_series(wide), m2);
  EXPECT_GE(r2.max_r_tilde, r1.max_r_tilde * (1 - 1e-12));
}

TEST(AdjustParams, IdentityAtEstimatedTarget) {
  const auto s = twenty_levels(1);
  const auto model = fit_all(s, 0.05);
  const auto w = weight_function(model, s);
  const auto sid = sid_from_series(s);
  const auto adj = adjust_params(model, target_function(w, model, sid, w.r_mhat()));
  for (const auto& lv : adj.levels) {
    EXPECT_NEAR(lv.adjusted.l, lv.estimated.l, 1e-6 * s.cap());
    EXPECT_NEAR(lv.adjusted.s, lv.estimated.s, 1e-6 * s.cap());
  }
}

TEST(AdjustParams, ZeroTargetAndZeroLevel) {
  const auto s = twenty_levels(2);
  const auto model = fit_all(s, 0.05);
  const auto w = weight_function(model, s);
  const auto sid = sid_from_series(s);
  const auto adj = adjust_params(model, target_function(w, model, sid, 0.0));
  for (const auto& lv : adj.levels) {
    if (lv.x > 0) {
      EXPECT_EQ(lv.adjusted.s, 0.0);
      EXPECT_EQ(nu(lv.adjusted), 0.0);
    } else {
      EXPECT_EQ(lv.adjusted, lv.estimated);
    }
  }
}

TEST(AdjustParams, RandomTargetsAreOptimalOnTheCurve) {
  const auto s = twenty_levels(3);
  const auto model = fit_all(s, 0.05);
  ASSERT_EQ(model.levels().size(), 20u);
  const double cap = s.cap();
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& lv : model.levels()) {
    const double x = lv.x_bar;
    if (x == 0.0) continue;
    const auto p = lv.params;
    const double target = u(gen) * m_max(x, p.alpha, p.beta, cap);
    const auto ls = solve_location(x, cap, {p.alpha, p.beta}, {p.l, p.s}, target);
    EXPECT_NEAR(nu(ls.l, ls.s, p.alpha, p.beta), target, 1e-6 * cap);
    EXPECT_GE(ls.l, -x - 1e-12);
    EXPECT_LE(ls.l, 0.0);
    EXPECT_LE(x + ls.l + ls.s, cap + 1e-9);
    const double got = std::hypot(ls.l - p.l, ls.s - p.s);
    // random points on the curve: random l, every root in s of nu(l, s) = target
    int points = 0;
    for (int k = 0; k < 500; ++k) {
      const double l = -x * u(gen);
      const double smax = cap - x - l;
      const int grid = 40;
      double prev_s = 0.0, prev_f = nu(l, 0.0, p.alpha, p.beta) - target;
      for (int j = 1; j <= grid; ++j) {
        const double sj = smax * j / grid;
        const double fj = nu(l, sj, p.alpha, p.beta) - target;
        if ((prev_f <= 0) != (fj <= 0)) {
          double lo = prev_s, hi = sj, flo = prev_f;
          for (int it = 0; it < 80; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double fm = nu(l, mid, p.alpha, p.beta) - target;
            if ((fm <= 0) == (flo <= 0)) {
              lo = mid;
              flo = fm;
            } else {
              hi = mid;
            }
          }
          const double sc = 0.5 * (lo + hi);
          ++points;
          EXPECT_LE(got, std::hypot(l - p.l, sc - p.s) + 1e-6 * cap);
        }
        prev_s = sj;
        prev_f = fj;
      }
    }
    EXPECT_GT(points, 0);
  }
}

TEST(AdjustParams, ShapesKeptAndBoxRespected) {
  const auto s = make_fixture(FixtureKind::heteroscedastic, 1500, 13);
  const auto model = fit_all(s, 0.05);
  const auto w = weight_function(model, s);
  const auto sid = sid_from_series(s);
  const auto region = feasible_region(w, sid, model);
  for (double frac : {0.1, 0.5, 0.99}) {
    const auto adj = adjust_params(model, target_function(w, model, sid, frac * region.max_r_tilde));
    for (const auto& lv : adj.levels) {
      EXPECT_EQ(lv.adjusted.alpha, lv.estimated.alpha);
      EXPECT_EQ(lv.adjusted.beta, lv.estimated.beta);
      EXPECT_GE(lv.x + lv.adjusted.l, -1e-9);
      EXPECT_LE(lv.x + lv.adjusted.l + lv.adjusted.s, s.cap() + 1e-9);
      if (lv.x == 0) EXPECT_EQ(lv.adjusted, lv.estimated);
    }
  }
}
