#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mareforge {

using Timestamp = std::chrono::sys_seconds;

/// Accepts "YYYY-MM-DD HH:MM[:SS]" with either a space or 'T' separator,
/// or a bare date. Throws DataError on anything else.
Timestamp parse_datetime(std::string_view text);

/// Canonical "YYYY-MM-DD HH:MM:SS".
std::string format_datetime(Timestamp t);

/// Shortest decimal string that parses back to exactly `v`.
std::string format_value(double v);

/// Header names used to locate the three columns of a paired CSV.
struct CsvColumns {
  std::string datetime = "datetime";
  std::string x = "forecasts";
  std::string y = "actuals";
};

/// Timestamped (x, y) pairs with a capacity. Which of forecasts/actuals plays
/// the x role is decided by the caller (see CsvColumns and swapped()).
class PairedSeries {
 public:
  PairedSeries(std::vector<Timestamp> timestamps, std::vector<double> x,
               std::vector<double> y, double cap);

  std::size_t size() const { return x_.size(); }
  double cap() const { return cap_; }
  std::span<const Timestamp> timestamps() const { return timestamps_; }
  std::span<const double> x() const { return x_; }
  std::span<const double> y() const { return y_; }

  /// Spacing between consecutive timestamps; zero for a single row.
  std::chrono::seconds step() const;

  /// Same data with the x and y roles exchanged.
  PairedSeries swapped() const;

 private:
  std::vector<Timestamp> timestamps_;
  std::vector<double> x_;
  std::vector<double> y_;
  double cap_;
};

struct LoadOptions {
  std::optional<double> cap;
  CsvColumns columns;
};

PairedSeries load_csv(const std::filesystem::path& path,
                      const LoadOptions& options = {});
PairedSeries parse_csv(std::string_view text, const LoadOptions& options = {});

void save_csv(const PairedSeries& series, const std::filesystem::path& path,
              const CsvColumns& columns = {});
std::string to_csv(const PairedSeries& series, const CsvColumns& columns = {});

/// eps_i = y_i - x_i.
std::vector<double> error_series(const PairedSeries& series);

/// (y - x) / x. Throws DomainError when x == 0.
double relative_error(double x, double y);

/// Mean |RE| over indices with x_i > 0; zero inputs are dropped from both the
/// sum and the count.
double mare(std::span<const double> x, std::span<const double> y);
inline double mape(std::span<const double> x, std::span<const double> y) {
  return 100.0 * mare(x, y);
}

/// Stable permutation sorting x ascending.
std::vector<std::size_t> sorted_view(std::span<const double> x);
std::vector<std::size_t> sorted_view(const PairedSeries& series);

/// Simulation input data: the x series scenarios are generated over.
struct SidSelection {
  std::vector<Timestamp> timestamps;
  std::vector<double> x;
  double cap = 0.0;
  bool subset_of_input = false;

  std::size_t size() const { return x.size(); }
};

SidSelection sid_from_series(const PairedSeries& series);

/// Rows with start <= t <= end. Throws DataError if the range selects nothing.
SidSelection slice_sid(const PairedSeries& series, Timestamp start,
                       Timestamp end);

/// External SID file: a datetime column plus one value column.
SidSelection load_sid_csv(const std::filesystem::path& path, double cap,
                          const std::string& datetime_column = "datetime",
                          const std::string& value_column = "forecasts");

/// Named value columns sharing one datetime column.
struct ColumnTable {
  std::vector<Timestamp> timestamps;
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;

  const std::vector<double>& column(std::string_view name) const;
};

std::string to_csv(const ColumnTable& table,
                   std::string_view datetime_column = "datetime");
ColumnTable parse_table(std::string_view text,
                        std::string_view datetime_column = "datetime");
ColumnTable load_table(const std::filesystem::path& path,
                       std::string_view datetime_column = "datetime");

/// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view content);
std::string read_file(const std::filesystem::path& path);

}  // namespace mareforge
