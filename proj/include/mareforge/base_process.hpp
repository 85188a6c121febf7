#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mareforge/conditional_fit.hpp"
#include "mareforge/dataio.hpp"
#include "mareforge/rng.hpp"

namespace mareforge {

/// Gaussian-scale series z_t = Phi^-1(F_{E|X=x_t}(eps_t)) in time order. The
/// CDF value is clamped to [1/(2n), 1 - 1/(2n)] so every entry is finite.
std::vector<double> to_base_process(const PairedSeries& series,
                                    const FittedModel& model);

/// Zero-mean ARMA(p, q):
///   Z_t = sum_h a_h Z_{t-h} + sum_h b_h d_{t-h} + d_t,  d_t ~ N(0, sigma^2).
struct ArmaModel {
  int p = 0;
  int q = 0;
  std::vector<double> a;
  std::vector<double> b;
  double sigma_delta = 1.0;
  double bic = 0.0;

  bool operator==(const ArmaModel&) const = default;
};

bool is_stationary(std::span<const double> ar);
bool is_invertible(std::span<const double> ma);

/// Exact variance of the stationary process from the autocovariance
/// equations. Throws DomainError for a non-stationary model.
double stationary_variance(const ArmaModel& model);

/// Exact Gaussian log-likelihood with sigma^2 concentrated out; also returns
/// the maximizing innovation variance.
struct ArmaLikelihood {
  double log_likelihood = 0.0;
  double sigma2 = 0.0;
};
ArmaLikelihood arma_log_likelihood(std::span<const double> z,
                                   std::span<const double> ar,
                                   std::span<const double> ma);

struct ArmaCandidate {
  int p = 0;
  int q = 0;
  bool ok = false;
  double log_likelihood = 0.0;
  double bic = 0.0;
  std::vector<double> a;
  std::vector<double> b;
  double sigma2 = 0.0;
};

struct ArmaFit {
  ArmaModel model;  // sigma_delta rescaled to unit stationary variance
  std::vector<ArmaCandidate> grid;
};

/// BIC grid search over [0, max_p] x [0, max_q] (BIC = (p+q+1) ln n - 2 lnL).
/// Requires z.size() >= 10 (max_p + max_q + 1).
ArmaFit fit_arma(std::span<const double> z, int max_p = 5, int max_q = 5);

/// Sample path of length `length` after discarding 100 + 10 (p + q) burn-in
/// steps. Deterministic in (seed, stream_id).
std::vector<double> simulate_base_process(const ArmaModel& model,
                                          std::size_t length, std::uint64_t seed,
                                          std::uint64_t stream_id = 0);
std::vector<double> simulate_base_process(const ArmaModel& model,
                                          std::size_t length,
                                          RandomStream& stream,
                                          std::size_t burn_in);

std::size_t default_burn_in(const ArmaModel& model);

}  // namespace mareforge
