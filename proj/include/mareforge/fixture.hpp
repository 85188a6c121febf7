#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

#include "mareforge/dataio.hpp"

namespace mareforge {

enum class FixtureKind { iid_error, ar1_error, heteroscedastic };

FixtureKind parse_fixture_kind(std::string_view text);
std::string_view to_string(FixtureKind kind);

/// Synthetic hourly forecast/actual pairs starting 2013-07-01 00:00.
///
/// Forecasts: x_t = cap clamp(0.45 + 0.2 sin(2 pi t / 24) + 0.3 w_t, 0, 0.95)
/// rounded to multiples of cap/200, where w is a unit-variance AR(1) with
/// coefficient 0.97. The clamp produces exact zeros.
///
/// Actuals: y_t = clamp(x_t + sigma(x_t) eta_t, 0, cap) with
///   iid_error        sigma = 0.08 cap, eta iid N(0, 1)
///   ar1_error        sigma = 0.08 cap, eta unit-variance AR(1), coefficient 0.8
///   heteroscedastic  sigma = cap (0.01 + 0.6 u (1 - u)), u = x / cap, eta iid
/// Requires n >= 100.
PairedSeries make_fixture(FixtureKind kind, std::size_t n, std::uint64_t seed,
                          double cap = 100.0);

}  // namespace mareforge
