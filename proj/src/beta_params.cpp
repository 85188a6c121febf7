#include "mareforge/beta_params.hpp"

#include <algorithm>
#include <boost/math/special_functions/beta.hpp>

namespace mareforge {

double BetaParams::mean() const { return l + s * alpha / (alpha + beta); }

double BetaParams::variance() const {
  const double ab = alpha + beta;
  return s * s * alpha * beta / (ab * ab * (ab + 1.0));
}

double BetaParams::cdf(double e) const {
  if (s <= 0.0) return e >= l ? 1.0 : 0.0;
  const double t = (e - l) / s;
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  return boost::math::ibeta(alpha, beta, t);
}

double BetaParams::quantile(double u) const {
  if (u <= 0.0 || s <= 0.0) return l;
  if (u >= 1.0) return l + s;
  return l + s * boost::math::ibeta_inv(alpha, beta, u);
}

}  // namespace mareforge
