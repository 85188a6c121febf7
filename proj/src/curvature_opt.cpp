#include "mareforge/curvature_opt.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>

#include "mareforge/error.hpp"
#include "mareforge/qp_solver.hpp"

namespace mareforge {

void CurvatureSpec::validate(double cap) const {
  if (!(w_s >= 0.0) || !(w_eps >= 0.0) || !(w_s + w_eps > 0.0))
    throw DomainError("curvature weights must be nonnegative with a positive sum");
  if (!(d >= 0.0)) throw DomainError("curvature target d must be nonnegative");
  if (!(gap >= 0.0)) throw DomainError("optimality gap must be nonnegative");
  const double dm = d_max > 0.0 ? d_max : 4.0 * cap;
  if (dm < 4.0 * cap * (1.0 - 1e-12)) throw DomainError("d_max must be at least 4 cap");
}

std::vector<double> second_difference(std::span<const double> y) {
  if (y.size() < 3) throw DomainError("second difference needs at least 3 points");
  std::vector<double> s(y.size() - 2);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = y[i + 2] - 2.0 * y[i + 1] + y[i];
  return s;
}

double curvature_objective(std::span<const double> y, std::span<const double> x,
                           std::span<const double> eps_tilde,
                           const CurvatureSpec& spec) {
  double fid = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double r = y[i] - x[i] - eps_tilde[i];
    fid += r * r;
  }
  double curv = 0.0;
  if (y.size() >= 3)
    for (double s : second_difference(y)) curv += (std::abs(s) - spec.d) * (std::abs(s) - spec.d);
  return spec.w_eps * fid + spec.w_s * curv;
}

namespace {

constexpr Eigen::Index kDenseLimit = 120;

// Problem in units of cap. fix[i] is +1/-1 for a fixed sign and 0 for free.
struct Scaled {
  std::size_t n = 0;
  std::vector<double> t;  // (x + eps) / cap
  double d = 0.0;
  double w_s = 0.0;
  double w_eps = 0.0;  // includes a tiny ridge when the user weight is zero
};

struct NodeResult {
  std::vector<double> y;
  std::vector<double> s;
  double lower = 0.0;
};

double scaled_objective(const Scaled& p, std::span<const double> y) {
  double f = 0.0;
  for (std::size_t i = 0; i < p.n; ++i) f += p.w_eps * (y[i] - p.t[i]) * (y[i] - p.t[i]);
  for (std::size_t i = 0; i + 2 < p.n; ++i) {
    const double a = std::abs(y[i + 2] - 2.0 * y[i + 1] + y[i]) - p.d;
    f += p.w_s * a * a;
  }
  return f;
}

// Relaxation: fixed positions pay (sigma s - d)^2 with sigma s >= 0, free
// positions pay (max(|s|, d) - d)^2 through an epigraph variable w >= |s|.
// The |s| <= 4 <= d_max bound is implied by the box on y and is left out.
NodeResult solve_node(const Scaled& p, const std::vector<std::int8_t>& fix) {
  const auto n = static_cast<Eigen::Index>(p.n);
  const auto m = static_cast<Eigen::Index>(fix.size());
  std::vector<Eigen::Index> free_idx;
  for (Eigen::Index i = 0; i < m; ++i)
    if (fix[static_cast<std::size_t>(i)] == 0) free_idx.push_back(i);
  const auto k = static_cast<Eigen::Index>(free_idx.size());
  const Eigen::Index nv = n + k;

  std::vector<Eigen::Triplet<double>> gt, at;
  Eigen::VectorXd g = Eigen::VectorXd::Zero(nv);
  for (Eigen::Index i = 0; i < n; ++i) {
    gt.emplace_back(i, i, 2.0 * p.w_eps);
    g(i) = -2.0 * p.w_eps * p.t[static_cast<std::size_t>(i)];
  }
  const double coef[3] = {1.0, -2.0, 1.0};
  for (Eigen::Index i = 0; i < m; ++i) {
    const double sigma = fix[static_cast<std::size_t>(i)];
    if (sigma == 0.0) continue;
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) gt.emplace_back(i + a, i + b, 2.0 * p.w_s * coef[a] * coef[b]);
      g(i + a) -= 2.0 * p.w_s * p.d * sigma * coef[a];
    }
  }
  for (Eigen::Index j = 0; j < k; ++j) {
    gt.emplace_back(n + j, n + j, 2.0 * p.w_s);
    g(n + j) = -2.0 * p.w_s * p.d;
  }

  const Eigen::Index rows = 2 * n + (m - k) + 2 * k;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(rows);
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    at.emplace_back(r, i, 1.0);
    b(r++) = 0.0;
    at.emplace_back(r, i, -1.0);
    b(r++) = -1.0;
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    const double sigma = fix[static_cast<std::size_t>(i)];
    if (sigma == 0.0) continue;
    for (int a = 0; a < 3; ++a) at.emplace_back(r, i + a, sigma * coef[a]);
    ++r;
  }
  for (Eigen::Index j = 0; j < k; ++j) {
    const Eigen::Index i = free_idx[static_cast<std::size_t>(j)];
    for (int sgn : {1, -1}) {
      at.emplace_back(r, n + j, 1.0);
      for (int a = 0; a < 3; ++a) at.emplace_back(r, i + a, -sgn * coef[a]);
      ++r;
    }
  }
  Eigen::SparseMatrix<double> G(nv, nv), A(rows, nv);
  G.setFromTriplets(gt.begin(), gt.end());
  A.setFromTriplets(at.begin(), at.end());

  // Dense active-set for small nodes, sparse interior point beyond.
  const QpResult qp = nv <= kDenseLimit ? solve_qp(Eigen::MatrixXd(G), g, Eigen::MatrixXd(A), b)
                                        : solve_qp_sparse(G, g, A, b);
  if (!qp.feasible) throw SolverError("curvature node relaxation reported infeasible");

  NodeResult out;
  out.y.resize(p.n);
  for (std::size_t i = 0; i < p.n; ++i) out.y[i] = std::clamp(qp.x(static_cast<Eigen::Index>(i)), 0.0, 1.0);
  out.s.resize(fix.size());
  for (std::size_t i = 0; i < fix.size(); ++i)
    out.s[i] = out.y[i + 2] - 2.0 * out.y[i + 1] + out.y[i];

  double lower = 0.0;
  for (std::size_t i = 0; i < p.n; ++i) lower += p.w_eps * (out.y[i] - p.t[i]) * (out.y[i] - p.t[i]);
  for (std::size_t i = 0; i < fix.size(); ++i) {
    const double a = fix[i] != 0 ? fix[i] * out.s[i] - p.d : std::max(std::abs(out.s[i]) - p.d, 0.0);
    lower += p.w_s * a * a;
  }
  out.lower = lower;
  return out;
}

struct Pending {
  std::vector<std::int8_t> fix;
  double parent_lower = 0.0;
};

}  // namespace

CurvatureSolution smooth(std::span<const double> y0, std::span<const double> x,
                         std::span<const double> eps_tilde,
                         const CurvatureSpec& spec, double cap) {
  const auto start = std::chrono::steady_clock::now();
  if (x.size() != eps_tilde.size()) throw DomainError("x and eps_tilde lengths differ");
  if (!y0.empty() && y0.size() != x.size()) throw DomainError("y0 and x lengths differ");
  if (!(cap > 0.0)) throw DomainError("cap must be positive");
  spec.validate(cap);

  const std::size_t n = x.size();
  CurvatureSolution sol;
  std::vector<double> clamped(n);
  for (std::size_t i = 0; i < n; ++i) clamped[i] = std::clamp(x[i] + eps_tilde[i], 0.0, cap);

  const auto finish = [&](std::vector<double> y, double bound) {
    sol.y = std::move(y);
    sol.objective = curvature_objective(sol.y, x, eps_tilde, spec);
    sol.bound = std::min(bound, sol.objective);
    sol.gap_achieved = sol.objective > 0.0 ? (sol.objective - sol.bound) / sol.objective : 0.0;
    if (n >= 3) {
      const auto s = second_difference(sol.y);
      sol.b.resize(s.size());
      sol.lambda_plus.resize(s.size());
      sol.lambda_minus.resize(s.size());
      for (std::size_t i = 0; i < s.size(); ++i) {
        sol.b[i] = s[i] >= 0.0;
        sol.lambda_plus[i] = std::max(s[i], 0.0);
        sol.lambda_minus[i] = std::max(-s[i], 0.0);
      }
    }
    sol.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return sol;
  };

  // The objective is separable when there is no curvature term.
  if (spec.w_s == 0.0 || n < 3) {
    auto y = clamped;
    return finish(y, curvature_objective(y, x, eps_tilde, spec));
  }

  Scaled p;
  p.n = n;
  p.t.resize(n);
  for (std::size_t i = 0; i < n; ++i) p.t[i] = (x[i] + eps_tilde[i]) / cap;
  p.d = spec.d / cap;
  p.w_s = spec.w_s;
  p.w_eps = spec.w_eps > 0.0 ? spec.w_eps : 1e-10 * spec.w_s;
  const std::size_t m = n - 2;
  const double sign_tol = 1e-9;

  std::vector<double> best_y;
  double best = std::numeric_limits<double>::infinity();
  const auto offer = [&](const std::vector<double>& y) {
    const double f = scaled_objective(p, y);
    if (f < best) {
      best = f;
      best_y = y;
    }
  };

  std::vector<double> start_y(n);
  for (std::size_t i = 0; i < n; ++i)
    start_y[i] = std::clamp((y0.empty() ? clamped[i] : y0[i]) / cap, 0.0, 1.0);
  offer(start_y);
  // Fix the signs of y, solve, repeat until the pattern stops changing. Each
  // pass cannot increase the objective.
  const auto polish = [&](std::vector<double> y) {
    std::vector<std::int8_t> fix(m);
    for (int pass = 0; pass < 20 && sol.nodes < spec.node_budget; ++pass) {
      bool changed = pass == 0;
      for (std::size_t i = 0; i < m; ++i) {
        const std::int8_t sg = y[i + 2] - 2.0 * y[i + 1] + y[i] >= 0.0 ? 1 : -1;
        changed = changed || sg != fix[i];
        fix[i] = sg;
      }
      if (!changed) break;
      y = solve_node(p, fix).y;
      ++sol.nodes;
      offer(y);
    }
  };
  polish(start_y);

  double pruned_bound = std::numeric_limits<double>::infinity();
  const auto threshold = [&] { return best - spec.gap * std::abs(best) - 1e-12 * std::max(1.0, std::abs(best)); };

  const std::size_t root_at = sol.nodes;
  std::vector<Pending> stack;
  stack.push_back({std::vector<std::int8_t>(m, 0), 0.0});
  while (!stack.empty()) {
    if (sol.nodes >= spec.node_budget) break;
    Pending node = std::move(stack.back());
    stack.pop_back();
    if (node.parent_lower >= threshold()) {
      pruned_bound = std::min(pruned_bound, node.parent_lower);
      continue;
    }
    const bool root = sol.nodes == root_at;
    const NodeResult r = solve_node(p, node.fix);
    ++sol.nodes;
    offer(r.y);
    if (root) polish(r.y);
    if (r.lower >= threshold()) {
      pruned_bound = std::min(pruned_bound, r.lower);
      continue;
    }
    std::size_t branch = m;
    double worst = sign_tol;
    for (std::size_t i = 0; i < m; ++i) {
      if (node.fix[i] != 0) continue;
      const double short_by = p.d - std::abs(r.s[i]);
      if (short_by > worst) {
        worst = short_by;
        branch = i;
      }
    }
    // Every free position already reaches d: the relaxation is exact here.
    if (branch == m) {
      pruned_bound = std::min(pruned_bound, r.lower);
      continue;
    }
    const std::int8_t preferred = r.s[branch] >= 0.0 ? 1 : -1;
    Pending other{node.fix, r.lower};
    other.fix[branch] = static_cast<std::int8_t>(-preferred);
    node.fix[branch] = preferred;
    node.parent_lower = r.lower;
    stack.push_back(std::move(other));
    stack.push_back(std::move(node));
  }
  for (const auto& rest : stack) pruned_bound = std::min(pruned_bound, rest.parent_lower);

  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = best_y[i] * cap;
  // Bound carried back to the caller's units; the ridge term (if any) is
  // below rounding at these scales.
  return finish(std::move(y), pruned_bound * cap * cap);
}

}  // namespace mareforge
