#include "mareforge/base_process.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

#include "mareforge/error.hpp"
#include "mareforge/parallel.hpp"

namespace mareforge {

std::vector<double> to_base_process(const PairedSeries& series,
                                    const FittedModel& model) {
  const auto n = series.size();
  const double floor = 1.0 / (2.0 * static_cast<double>(n));
  std::vector<double> z(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double x = series.x()[t];
    const double u = model.params_for(x).cdf(series.y()[t] - x);
    z[t] = normal_quantile(std::clamp(u, floor, 1.0 - floor));
  }
  return z;
}

namespace {

// Largest root modulus of z^k - c_1 z^{k-1} - ... - c_k, i.e. the reciprocal
// roots of 1 - sum c_i z^i.
double companion_radius(std::span<const double> c) {
  const auto k = static_cast<Eigen::Index>(c.size());
  if (k == 0) return 0.0;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i) m(0, i) = c[static_cast<std::size_t>(i)];
  for (Eigen::Index i = 1; i < k; ++i) m(i, i - 1) = 1.0;
  return m.eigenvalues().cwiseAbs().maxCoeff();
}

// PACF values in (-1, 1) -> coefficients of a stationary 1 - sum c_i z^i.
std::vector<double> pacf_to_coeffs(std::span<const double> r) {
  std::vector<double> c;
  for (std::size_t k = 0; k < r.size(); ++k) {
    std::vector<double> next(k + 1);
    for (std::size_t j = 0; j < k; ++j) next[j] = c[j] - r[k] * c[k - 1 - j];
    next[k] = r[k];
    c = std::move(next);
  }
  return c;
}

std::vector<double> coeffs_to_pacf(std::vector<double> c) {
  std::vector<double> r(c.size());
  for (std::size_t k = c.size(); k-- > 0;) {
    const double rk = std::clamp(c[k], -0.999, 0.999);
    r[k] = rk;
    std::vector<double> prev(k);
    for (std::size_t j = 0; j < k; ++j)
      prev[j] = (c[j] + rk * c[k - 1 - j]) / (1.0 - rk * rk);
    c = std::move(prev);
  }
  return r;
}

struct ArmaParams {
  std::vector<double> a;
  std::vector<double> b;
};

ArmaParams unpack(std::span<const double> theta, int p, int q) {
  std::vector<double> ra(static_cast<std::size_t>(p)), rb(static_cast<std::size_t>(q));
  for (int i = 0; i < p; ++i) ra[static_cast<std::size_t>(i)] = std::tanh(theta[static_cast<std::size_t>(i)]);
  for (int j = 0; j < q; ++j)
    rb[static_cast<std::size_t>(j)] = std::tanh(theta[static_cast<std::size_t>(p + j)]);
  ArmaParams out{pacf_to_coeffs(ra), pacf_to_coeffs(rb)};
  for (auto& v : out.b) v = -v;
  return out;
}

std::vector<double> pack(const ArmaParams& params) {
  std::vector<double> theta;
  for (double r : coeffs_to_pacf(params.a)) theta.push_back(std::atanh(r));
  std::vector<double> neg_b(params.b.size());
  for (std::size_t j = 0; j < neg_b.size(); ++j) neg_b[j] = -params.b[j];
  for (double r : coeffs_to_pacf(neg_b)) theta.push_back(std::atanh(r));
  return theta;
}

// Plain Nelder-Mead; returns the best vertex.
std::vector<double> nelder_mead(const std::function<double(std::span<const double>)>& f,
                                std::vector<double> x0, double step, int max_evals) {
  const std::size_t dim = x0.size();
  std::vector<std::vector<double>> simplex(dim + 1, x0);
  std::vector<double> fv(dim + 1);
  for (std::size_t i = 0; i < dim; ++i) simplex[i + 1][i] += step;
  int evals = 0;
  for (std::size_t i = 0; i <= dim; ++i) {
    fv[i] = f(simplex[i]);
    ++evals;
  }
  std::vector<std::size_t> order(dim + 1);
  while (evals < max_evals) {
    for (std::size_t i = 0; i <= dim; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto l, auto r) { return fv[l] < fv[r]; });
    const auto best = order.front(), worst = order.back(), second = order[dim - 1];
    if (std::abs(fv[worst] - fv[best]) <= 1e-10 * (1.0 + std::abs(fv[best]))) break;
    std::vector<double> centroid(dim, 0.0);
    for (std::size_t i = 0; i <= dim; ++i) {
      if (i == worst) continue;
      for (std::size_t d = 0; d < dim; ++d) centroid[d] += simplex[i][d] / static_cast<double>(dim);
    }
    auto along = [&](double t) {
      std::vector<double> p(dim);
      for (std::size_t d = 0; d < dim; ++d)
        p[d] = centroid[d] + t * (simplex[worst][d] - centroid[d]);
      return p;
    };
    auto xr = along(-1.0);
    const double fr = f(xr);
    ++evals;
    if (fr < fv[best]) {
      auto xe = along(-2.0);
      const double fe = f(xe);
      ++evals;
      if (fe < fr) {
        simplex[worst] = std::move(xe);
        fv[worst] = fe;
      } else {
        simplex[worst] = std::move(xr);
        fv[worst] = fr;
      }
    } else if (fr < fv[second]) {
      simplex[worst] = std::move(xr);
      fv[worst] = fr;
    } else {
      auto xc = along(fr < fv[worst] ? -0.5 : 0.5);
      const double fc = f(xc);
      ++evals;
      if (fc < std::min(fr, fv[worst])) {
        simplex[worst] = std::move(xc);
        fv[worst] = fc;
      } else {
        for (std::size_t i = 0; i <= dim; ++i) {
          if (i == best) continue;
          for (std::size_t d = 0; d < dim; ++d)
            simplex[i][d] = simplex[best][d] + 0.5 * (simplex[i][d] - simplex[best][d]);
          fv[i] = f(simplex[i]);
          ++evals;
        }
      }
    }
  }
  const auto it = std::min_element(fv.begin(), fv.end());
  return simplex[static_cast<std::size_t>(it - fv.begin())];
}

// Yule-Walker AR(m) residuals for the Hannan-Rissanen start.
std::vector<double> long_ar_residuals(std::span<const double> z, int m) {
  const auto n = z.size();
  std::vector<double> gamma(static_cast<std::size_t>(m) + 1, 0.0);
  for (int k = 0; k <= m; ++k) {
    double s = 0.0;
    for (std::size_t t = static_cast<std::size_t>(k); t < n; ++t) s += z[t] * z[t - static_cast<std::size_t>(k)];
    gamma[static_cast<std::size_t>(k)] = s / static_cast<double>(n);
  }
  // Levinson-Durbin.
  std::vector<double> phi;
  double err = gamma[0];
  for (int k = 1; k <= m && err > 0.0; ++k) {
    double acc = gamma[static_cast<std::size_t>(k)];
    for (int j = 1; j < k; ++j)
      acc -= phi[static_cast<std::size_t>(j - 1)] * gamma[static_cast<std::size_t>(k - j)];
    const double rk = acc / err;
    std::vector<double> next(static_cast<std::size_t>(k));
    for (int j = 1; j < k; ++j)
      next[static_cast<std::size_t>(j - 1)] =
          phi[static_cast<std::size_t>(j - 1)] - rk * phi[static_cast<std::size_t>(k - j - 1)];
    next[static_cast<std::size_t>(k - 1)] = rk;
    phi = std::move(next);
    err *= (1.0 - rk * rk);
  }
  std::vector<double> res(n, 0.0);
  for (std::size_t t = phi.size(); t < n; ++t) {
    double pred = 0.0;
    for (std::size_t j = 0; j < phi.size(); ++j) pred += phi[j] * z[t - 1 - j];
    res[t] = z[t] - pred;
  }
  return res;
}

ArmaParams hannan_rissanen(std::span<const double> z, int p, int q) {
  ArmaParams out{std::vector<double>(static_cast<std::size_t>(p), 0.0),
                 std::vector<double>(static_cast<std::size_t>(q), 0.0)};
  if (p + q == 0) return out;
  const auto n = static_cast<int>(z.size());
  const int m = std::min(std::max(10, p + q + 5), n / 10);
  const auto res = long_ar_residuals(z, m);
  const int start = m + std::max(p, q);
  const int rows = n - start;
  if (rows <= p + q) return out;
  Eigen::MatrixXd X(rows, p + q);
  Eigen::VectorXd Y(rows);
  for (int r = 0; r < rows; ++r) {
    const int t = start + r;
    Y(r) = z[static_cast<std::size_t>(t)];
    for (int i = 0; i < p; ++i) X(r, i) = z[static_cast<std::size_t>(t - 1 - i)];
    for (int j = 0; j < q; ++j) X(r, p + j) = res[static_cast<std::size_t>(t - 1 - j)];
  }
  const Eigen::VectorXd beta = X.colPivHouseholderQr().solve(Y);
  for (int i = 0; i < p; ++i) out.a[static_cast<std::size_t>(i)] = beta(i);
  for (int j = 0; j < q; ++j) out.b[static_cast<std::size_t>(j)] = beta(p + j);
  for (int k = 0; k < 200; ++k) {
    if (companion_radius(out.a) < 0.98 && companion_radius([&] {
          std::vector<double> nb(out.b.size());
          for (std::size_t j = 0; j < nb.size(); ++j) nb[j] = -out.b[j];
          return nb;
        }()) < 0.98)
      break;
    for (auto& v : out.a) v *= 0.9;
    for (auto& v : out.b) v *= 0.9;
  }
  return out;
}

}  // namespace

bool is_stationary(std::span<const double> ar) { return companion_radius(ar) < 1.0; }

bool is_invertible(std::span<const double> ma) {
  std::vector<double> neg(ma.size());
  for (std::size_t j = 0; j < ma.size(); ++j) neg[j] = -ma[j];
  return companion_radius(neg) < 1.0;
}

double stationary_variance(const ArmaModel& model) {
  if (!is_stationary(model.a)) throw DomainError("ARMA model is not stationary");
  const int p = static_cast<int>(model.a.size());
  const int q = static_cast<int>(model.b.size());
  // psi weights up to lag q.
  std::vector<double> psi(static_cast<std::size_t>(q) + 1, 0.0);
  psi[0] = 1.0;
  for (int j = 1; j <= q; ++j) {
    double v = model.b[static_cast<std::size_t>(j - 1)];
    for (int i = 1; i <= std::min(j, p); ++i)
      v += model.a[static_cast<std::size_t>(i - 1)] * psi[static_cast<std::size_t>(j - i)];
    psi[static_cast<std::size_t>(j)] = v;
  }
  auto theta = [&](int j) {
    return j == 0 ? 1.0 : model.b[static_cast<std::size_t>(j - 1)];
  };
  // gamma_k - sum_i a_i gamma_|k-i| = sigma^2 sum_{j=k}^q theta_j psi_{j-k}.
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(p + 1, p + 1);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p + 1);
  const double s2 = model.sigma_delta * model.sigma_delta;
  for (int k = 0; k <= p; ++k) {
    A(k, k) += 1.0;
    for (int i = 1; i <= p; ++i) A(k, std::abs(k - i)) -= model.a[static_cast<std::size_t>(i - 1)];
    for (int j = k; j <= q; ++j) rhs(k) += s2 * theta(j) * psi[static_cast<std::size_t>(j - k)];
  }
  const Eigen::VectorXd gamma = A.fullPivLu().solve(rhs);
  return gamma(0);
}

ArmaLikelihood arma_log_likelihood(std::span<const double> z,
                                   std::span<const double> ar,
                                   std::span<const double> ma) {
  const int p = static_cast<int>(ar.size());
  const int q = static_cast<int>(ma.size());
  const int r = std::max(p, q + 1);
  const auto n = z.size();

  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(r, r);
  for (int i = 0; i < p; ++i) T(i, 0) = ar[static_cast<std::size_t>(i)];
  for (int i = 0; i + 1 < r; ++i) T(i, i + 1) = 1.0;
  Eigen::VectorXd R = Eigen::VectorXd::Zero(r);
  R(0) = 1.0;
  for (int j = 0; j < q; ++j) R(j + 1) = ma[static_cast<std::size_t>(j)];
  const Eigen::MatrixXd RR = R * R.transpose();

  // Stationary state covariance: (I - T (x) T) vec P = vec RR'.
  const int r2 = r * r;
  Eigen::MatrixXd L = Eigen::MatrixXd::Identity(r2, r2);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j)
      for (int k = 0; k < r; ++k)
        for (int l = 0; l < r; ++l) L(i + j * r, k + l * r) -= T(i, k) * T(j, l);
  Eigen::VectorXd vecQ(r2);
  for (int j = 0; j < r; ++j)
    for (int i = 0; i < r; ++i) vecQ(i + j * r) = RR(i, j);
  const Eigen::VectorXd vecP = L.fullPivLu().solve(vecQ);
  Eigen::MatrixXd P(r, r);
  for (int j = 0; j < r; ++j)
    for (int i = 0; i < r; ++i) P(i, j) = vecP(i + j * r);

  Eigen::VectorXd a = Eigen::VectorXd::Zero(r);
  double sumsq = 0.0, sumlog = 0.0;
  std::vector<double> innov(n, 0.0);
  std::size_t t = 0;
  for (; t < n; ++t) {
    const double F = P(0, 0);
    if (!(F > 0.0)) throw DomainError("ARMA likelihood: degenerate covariance");
    const double v = z[t] - a(0);
    innov[t] = v;
    sumsq += v * v / F;
    sumlog += std::log(F);
    const Eigen::VectorXd K = T * P.col(0) / F;
    a = T * a + K * v;
    P = T * P * T.transpose() + RR - K * K.transpose() * F;
    if (t >= static_cast<std::size_t>(r) && std::abs(P(0, 0) - 1.0) < 1e-13) {
      ++t;
      break;
    }
  }
  // Steady state: the filter reduces to inverting the MA polynomial.
  for (; t < n; ++t) {
    double pred = 0.0;
    for (int i = 0; i < p; ++i) pred += ar[static_cast<std::size_t>(i)] * z[t - 1 - static_cast<std::size_t>(i)];
    for (int j = 0; j < q; ++j) pred += ma[static_cast<std::size_t>(j)] * innov[t - 1 - static_cast<std::size_t>(j)];
    const double v = z[t] - pred;
    innov[t] = v;
    sumsq += v * v;
  }
  const double nn = static_cast<double>(n);
  ArmaLikelihood out;
  out.sigma2 = sumsq / nn;
  out.log_likelihood =
      -0.5 * (nn * std::log(2.0 * std::numbers::pi * out.sigma2) + nn + sumlog);
  return out;
}

ArmaFit fit_arma(std::span<const double> z, int max_p, int max_q) {
  if (max_p < 0 || max_q < 0) throw DomainError("ARMA orders must be nonnegative");
  const auto n = z.size();
  if (n < 10u * static_cast<std::size_t>(max_p + max_q + 1))
    throw DomainError("ARMA fit needs at least 10 (p_max + q_max + 1) points");
  const double log_n = std::log(static_cast<double>(n));

  std::vector<ArmaCandidate> grid;
  for (int p = 0; p <= max_p; ++p)
    for (int q = 0; q <= max_q; ++q) {
      ArmaCandidate c;
      c.p = p;
      c.q = q;
      grid.push_back(std::move(c));
    }

  parallel_for(grid.size(), [&](std::size_t k) {
    auto& c = grid[k];
    const auto nll = [&](std::span<const double> theta) {
      const auto params = unpack(theta, c.p, c.q);
      try {
        return -arma_log_likelihood(z, params.a, params.b).log_likelihood;
      } catch (const DomainError&) {
        return std::numeric_limits<double>::infinity();
      }
    };
    std::vector<double> theta = pack(hannan_rissanen(z, c.p, c.q));
    if (!theta.empty()) {
      const int budget = 300 * static_cast<int>(theta.size());
      theta = nelder_mead(nll, theta, 0.2, budget);
      theta = nelder_mead(nll, theta, 0.05, budget);
    }
    const auto params = unpack(theta, c.p, c.q);
    c.a = params.a;
    c.b = params.b;
    if (!is_stationary(c.a) || !is_invertible(c.b)) return;
    ArmaLikelihood ll;
    try {
      ll = arma_log_likelihood(z, c.a, c.b);
    } catch (const DomainError&) {
      return;
    }
    if (!std::isfinite(ll.log_likelihood) || !(ll.sigma2 > 0.0)) return;
    c.ok = true;
    c.log_likelihood = ll.log_likelihood;
    c.sigma2 = ll.sigma2;
    c.bic = static_cast<double>(c.p + c.q + 1) * log_n - 2.0 * ll.log_likelihood;
  });

  const ArmaCandidate* best = nullptr;
  for (const auto& c : grid)
    if (c.ok && (!best || c.bic < best->bic)) best = &c;
  if (!best) throw DomainError("every ARMA candidate was non-stationary or degenerate");

  ArmaFit fit;
  fit.grid = grid;
  fit.model.p = best->p;
  fit.model.q = best->q;
  fit.model.a = best->a;
  fit.model.b = best->b;
  fit.model.bic = best->bic;
  fit.model.sigma_delta = 1.0;
  fit.model.sigma_delta = 1.0 / std::sqrt(stationary_variance(fit.model));
  return fit;
}

std::size_t default_burn_in(const ArmaModel& model) {
  return 100 + 10 * static_cast<std::size_t>(model.p + model.q);
}

std::vector<double> simulate_base_process(const ArmaModel& model,
                                          std::size_t length,
                                          RandomStream& stream,
                                          std::size_t burn_in) {
  const std::size_t p = model.a.size(), q = model.b.size();
  const std::size_t total = burn_in + length;
  std::vector<double> zs(total, 0.0), ds(total, 0.0);
  for (std::size_t t = 0; t < total; ++t) {
    const double d = model.sigma_delta * stream.normal();
    double v = d;
    for (std::size_t h = 1; h <= p && h <= t; ++h) v += model.a[h - 1] * zs[t - h];
    for (std::size_t h = 1; h <= q && h <= t; ++h) v += model.b[h - 1] * ds[t - h];
    zs[t] = v;
    ds[t] = d;
  }
  return {zs.begin() + static_cast<std::ptrdiff_t>(burn_in), zs.end()};
}

std::vector<double> simulate_base_process(const ArmaModel& model,
                                          std::size_t length, std::uint64_t seed,
                                          std::uint64_t stream_id) {
  RandomStream stream(seed, stream_id);
  return simulate_base_process(model, length, stream, default_burn_in(model));
}

}  // namespace mareforge
