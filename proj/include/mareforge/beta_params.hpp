#pragma once

namespace mareforge {

/// Four-parameter beta law on [l, l + s].
struct BetaParams {
  double alpha = 1.0;
  double beta = 1.0;
  double l = 0.0;
  double s = 0.0;

  double lower() const { return l; }
  double upper() const { return l + s; }
  double mean() const;
  double variance() const;

  /// P(E <= e). A zero-scale law is a point mass at l.
  double cdf(double e) const;

  /// Inverse of cdf on [0, 1]; quantile(0) == l, quantile(1) == l + s.
  double quantile(double u) const;

  bool operator==(const BetaParams&) const = default;
};

}  // namespace mareforge
