#include "mareforge/fixture.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <string>

#include "mareforge/error.hpp"
#include "mareforge/rng.hpp"

namespace mareforge {

FixtureKind parse_fixture_kind(std::string_view text) {
  if (text == "iid-error") return FixtureKind::iid_error;
  if (text == "ar1-error") return FixtureKind::ar1_error;
  if (text == "heteroscedastic") return FixtureKind::heteroscedastic;
  throw DomainError("unknown fixture kind '" + std::string(text) + "'");
}

std::string_view to_string(FixtureKind kind) {
  switch (kind) {
    case FixtureKind::iid_error: return "iid-error";
    case FixtureKind::ar1_error: return "ar1-error";
    case FixtureKind::heteroscedastic: return "heteroscedastic";
  }
  return "iid-error";
}

PairedSeries make_fixture(FixtureKind kind, std::size_t n, std::uint64_t seed, double cap) {
  if (n < 100) throw DomainError("fixture needs n >= 100");
  if (!(cap > 0.0)) throw DomainError("cap must be positive");
  using namespace std::chrono;
  const Timestamp t0 = sys_days{year{2013} / July / 1};

  RandomStream input_noise(seed, 0);
  RandomStream error_noise(seed, 1);
  const double rho_w = 0.97;
  const double rho_e = kind == FixtureKind::ar1_error ? 0.8 : 0.0;
  double w = input_noise.normal();
  double eta = error_noise.normal();

  std::vector<Timestamp> ts(n);
  std::vector<double> x(n), y(n);
  const double quantum = cap / 200.0;
  for (std::size_t t = 0; t < n; ++t) {
    if (t > 0) {
      w = rho_w * w + std::sqrt(1.0 - rho_w * rho_w) * input_noise.normal();
      eta = rho_e * eta + std::sqrt(1.0 - rho_e * rho_e) * error_noise.normal();
    }
    ts[t] = t0 + hours{t};
    const double phase = 2.0 * std::numbers::pi * static_cast<double>(t) / 24.0;
    const double u = std::clamp(0.45 + 0.2 * std::sin(phase) + 0.3 * w, 0.0, 0.95);
    x[t] = std::min(std::round(u * cap / quantum) * quantum, cap);
    const double v = x[t] / cap;
    const double sigma = kind == FixtureKind::heteroscedastic ? cap * (0.01 + 0.6 * v * (1.0 - v))
                                                              : 0.08 * cap;
    y[t] = std::clamp(x[t] + sigma * eta, 0.0, cap);
  }
  return PairedSeries(std::move(ts), std::move(x), std::move(y), cap);
}

}  // namespace mareforge
