#include "mareforge/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <system_error>

#include "mareforge/error.hpp"

namespace mareforge {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return out;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto nl = text.find('\n', start);
    auto line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos
                                                               : nl - start);
    if (!trim(line).empty()) lines.push_back(line);
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return lines;
}

template <typename Int>
bool parse_int(std::string_view s, Int& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

double parse_number(std::string_view field, std::size_t row) {
  if (field.empty()) throw DataError("missing value", row);
  if (field.front() == '+') field.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v))
    throw DataError("non-numeric value '" + std::string(field) + "'", row);
  return v;
}

std::size_t find_column(const std::vector<std::string_view>& header,
                        std::string_view name) {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end())
    throw DataError("missing column '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - header.begin());
}

void check_uniform_step(std::span<const Timestamp> ts) {
  if (ts.size() < 2) return;
  const auto step = ts[1] - ts[0];
  for (std::size_t i = 1; i < ts.size(); ++i) {
    const auto d = ts[i] - ts[i - 1];
    if (d.count() <= 0)
      throw DataError("timestamps not strictly increasing", i);
    if (d != step)
      throw DataError("non-uniform timestep: expected " +
                          std::to_string(step.count()) + "s, got " +
                          std::to_string(d.count()) + "s",
                      i);
  }
}

}  // namespace

Timestamp parse_datetime(std::string_view text) {
  const auto bad = [&] {
    return DataError("malformed datetime '" + std::string(text) + "'");
  };
  auto s = trim(text);
  if (s.size() < 10 || s[4] != '-' || s[7] != '-') throw bad();
  int y = 0;
  unsigned mo = 0, d = 0;
  if (!parse_int(s.substr(0, 4), y) || !parse_int(s.substr(5, 2), mo) ||
      !parse_int(s.substr(8, 2), d))
    throw bad();
  int hh = 0, mm = 0, ss = 0;
  if (s.size() > 10) {
    if (s[10] != ' ' && s[10] != 'T') throw bad();
    auto t = s.substr(11);
    if (t.size() != 5 && t.size() != 8) throw bad();
    if (t[2] != ':' || !parse_int(t.substr(0, 2), hh) ||
        !parse_int(t.substr(3, 2), mm))
      throw bad();
    if (t.size() == 8 && (t[5] != ':' || !parse_int(t.substr(6, 2), ss)))
      throw bad();
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y},
                                        std::chrono::month{mo},
                                        std::chrono::day{d}};
  if (!ymd.ok() || hh > 23 || mm > 59 || ss > 59 || hh < 0 || mm < 0 || ss < 0)
    throw bad();
  return std::chrono::sys_days{ymd} + std::chrono::hours{hh} +
         std::chrono::minutes{mm} + std::chrono::seconds{ss};
}

std::string format_datetime(Timestamp t) {
  const auto day = std::chrono::floor<std::chrono::days>(t);
  const std::chrono::year_month_day ymd{day};
  const std::chrono::hh_mm_ss hms{t - day};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u %02ld:%02ld:%02ld",
                static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()),
                static_cast<long>(hms.hours().count()),
                static_cast<long>(hms.minutes().count()),
                static_cast<long>(hms.seconds().count()));
  return buf;
}

std::string format_value(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

PairedSeries::PairedSeries(std::vector<Timestamp> timestamps,
                           std::vector<double> x, std::vector<double> y,
                           double cap)
    : timestamps_(std::move(timestamps)),
      x_(std::move(x)),
      y_(std::move(y)),
      cap_(cap) {
  if (!(cap_ > 0.0) || !std::isfinite(cap_))
    throw DataError("cap must be positive");
  if (x_.size() != y_.size() || x_.size() != timestamps_.size())
    throw DataError("timestamps, x and y must have equal length");
  if (x_.empty()) throw DataError("series is empty");
  for (std::size_t i = 0; i < x_.size(); ++i) {
    if (!(x_[i] >= 0.0 && x_[i] <= cap_) || !(y_[i] >= 0.0 && y_[i] <= cap_))
      throw DataError("value out of [0,cap]", i);
  }
  check_uniform_step(timestamps_);
}

std::chrono::seconds PairedSeries::step() const {
  if (timestamps_.size() < 2) return std::chrono::seconds{0};
  return timestamps_[1] - timestamps_[0];
}

PairedSeries PairedSeries::swapped() const {
  return PairedSeries(timestamps_, y_, x_, cap_);
}

PairedSeries parse_csv(std::string_view text, const LoadOptions& options) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw DataError("empty CSV");
  const auto header = split_fields(lines.front());
  const auto it = find_column(header, options.columns.datetime);
  const auto ix = find_column(header, options.columns.x);
  const auto iy = find_column(header, options.columns.y);

  std::vector<Timestamp> ts;
  std::vector<double> xs, ys;
  ts.reserve(lines.size());
  xs.reserve(lines.size());
  ys.reserve(lines.size());
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto fields = split_fields(lines[r]);
    const std::size_t row = r - 1;
    if (fields.size() != header.size())
      throw DataError("expected " + std::to_string(header.size()) +
                          " fields, got " + std::to_string(fields.size()),
                      row);
    try {
      ts.push_back(parse_datetime(fields[it]));
    } catch (const DataError& e) {
      throw DataError(e.what(), row);
    }
    xs.push_back(parse_number(fields[ix], row));
    ys.push_back(parse_number(fields[iy], row));
    const double cap_check = options.cap.value_or(INFINITY);
    if (!(xs.back() >= 0.0 && xs.back() <= cap_check) ||
        !(ys.back() >= 0.0 && ys.back() <= cap_check))
      throw DataError("value out of [0,cap]", row);
  }
  if (xs.empty()) throw DataError("CSV has no data rows");
  double cap = 0.0;
  if (options.cap) {
    cap = *options.cap;
  } else {
    const double mx = std::max(*std::max_element(xs.begin(), xs.end()),
                               *std::max_element(ys.begin(), ys.end()));
    cap = std::ceil(mx);
    if (cap <= 0.0) cap = 1.0;
  }
  return PairedSeries(std::move(ts), std::move(xs), std::move(ys), cap);
}

PairedSeries load_csv(const std::filesystem::path& path,
                      const LoadOptions& options) {
  return parse_csv(read_file(path), options);
}

std::string to_csv(const PairedSeries& series, const CsvColumns& columns) {
  std::string out = columns.datetime + "," + columns.x + "," + columns.y + "\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    out += format_datetime(series.timestamps()[i]);
    out += ',';
    out += format_value(series.x()[i]);
    out += ',';
    out += format_value(series.y()[i]);
    out += '\n';
  }
  return out;
}

void save_csv(const PairedSeries& series, const std::filesystem::path& path,
              const CsvColumns& columns) {
  write_file_atomic(path, to_csv(series, columns));
}

std::vector<double> error_series(const PairedSeries& series) {
  std::vector<double> eps(series.size());
  for (std::size_t i = 0; i < eps.size(); ++i)
    eps[i] = series.y()[i] - series.x()[i];
  return eps;
}

double relative_error(double x, double y) {
  if (x == 0.0) throw DomainError("relative error undefined for x = 0");
  return (y - x) / x;
}

double mare(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DomainError("mare: length mismatch");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] > 0.0) {
      sum += std::abs((y[i] - x[i]) / x[i]);
      ++count;
    }
  }
  if (count == 0) throw DomainError("mare: every x is zero");
  return sum / static_cast<double>(count);
}

std::vector<std::size_t> sorted_view(std::span<const double> x) {
  std::vector<std::size_t> perm(x.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::stable_sort(perm.begin(), perm.end(),
                   [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  return perm;
}

std::vector<std::size_t> sorted_view(const PairedSeries& series) {
  return sorted_view(series.x());
}

SidSelection sid_from_series(const PairedSeries& series) {
  return SidSelection{{series.timestamps().begin(), series.timestamps().end()},
                      {series.x().begin(), series.x().end()},
                      series.cap(),
                      true};
}

SidSelection slice_sid(const PairedSeries& series, Timestamp start,
                       Timestamp end) {
  if (end < start) throw DataError("SID start after SID end");
  SidSelection sid;
  sid.cap = series.cap();
  sid.subset_of_input = true;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto t = series.timestamps()[i];
    if (t >= start && t <= end) {
      sid.timestamps.push_back(t);
      sid.x.push_back(series.x()[i]);
    }
  }
  if (sid.x.empty())
    throw DataError("SID range " + format_datetime(start) + " .. " +
                    format_datetime(end) + " selects no rows");
  return sid;
}

SidSelection load_sid_csv(const std::filesystem::path& path, double cap,
                          const std::string& datetime_column,
                          const std::string& value_column) {
  const auto table = load_table(path, datetime_column);
  const auto& col = table.column(value_column);
  for (std::size_t i = 0; i < col.size(); ++i)
    if (!(col[i] >= 0.0 && col[i] <= cap))
      throw DataError("value out of [0,cap]", i);
  check_uniform_step(table.timestamps);
  if (col.empty()) throw DataError("SID file has no rows");
  return SidSelection{table.timestamps, col, cap, false};
}

const std::vector<double>& ColumnTable::column(std::string_view name) const {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end())
    throw DataError("missing column '" + std::string(name) + "'");
  return columns[static_cast<std::size_t>(it - names.begin())];
}

std::string to_csv(const ColumnTable& table, std::string_view datetime_column) {
  std::string out(datetime_column);
  for (const auto& n : table.names) out += "," + n;
  out += '\n';
  for (std::size_t i = 0; i < table.timestamps.size(); ++i) {
    out += format_datetime(table.timestamps[i]);
    for (const auto& c : table.columns) {
      out += ',';
      out += format_value(c[i]);
    }
    out += '\n';
  }
  return out;
}

ColumnTable parse_table(std::string_view text, std::string_view datetime_column) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw DataError("empty CSV");
  const auto header = split_fields(lines.front());
  const auto it = find_column(header, datetime_column);
  ColumnTable table;
  std::vector<std::size_t> value_idx;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c == it) continue;
    table.names.emplace_back(header[c]);
    value_idx.push_back(c);
  }
  table.columns.resize(value_idx.size());
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto fields = split_fields(lines[r]);
    const std::size_t row = r - 1;
    if (fields.size() != header.size())
      throw DataError("expected " + std::to_string(header.size()) +
                          " fields, got " + std::to_string(fields.size()),
                      row);
    try {
      table.timestamps.push_back(parse_datetime(fields[it]));
    } catch (const DataError& e) {
      throw DataError(e.what(), row);
    }
    for (std::size_t k = 0; k < value_idx.size(); ++k)
      table.columns[k].push_back(parse_number(fields[value_idx[k]], row));
  }
  return table;
}

ColumnTable load_table(const std::filesystem::path& path,
                       std::string_view datetime_column) {
  return parse_table(read_file(path), datetime_column);
}

void write_file_atomic(const std::filesystem::path& path,
                       std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace mareforge
