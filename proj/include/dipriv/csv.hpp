#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dipriv/dataset.hpp"
#include "dipriv/errors.hpp"
#include "dipriv/format.hpp"

namespace dipriv {

// CSV schema (exact): header `house_id,timestamp,consumption_kwh[,label]`,
// ISO-8601 hourly timestamps, UTF-8, comma separator, '.' decimal point.

namespace timeutil {

// Days since 1970-01-01 for a proleptic Gregorian date (Howard Hinnant's
// civil-days algorithm).
inline std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const auto doy = static_cast<unsigned>((153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1);
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const auto doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y = static_cast<int>(yy + (m <= 2));
}

/// Parses "YYYY-MM-DDTHH:MM:SS" into hours since the epoch. Minutes and
/// seconds must be zero (hourly cadence).
inline std::int64_t parse_iso_hour(const std::string& s, std::size_t line_no) {
  int y, mo, d, h, mi, sec;
  char t;
  if (std::sscanf(s.c_str(), "%d-%d-%d%c%d:%d:%d", &y, &mo, &d, &t, &h, &mi, &sec) != 7 ||
      (t != 'T' && t != ' '))
    throw DataError("csv line " + std::to_string(line_no) + ": bad timestamp '" + s + "'");
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23)
    throw DataError("csv line " + std::to_string(line_no) + ": timestamp out of range '" + s + "'");
  if (mi != 0 || sec != 0)
    throw DataError("csv line " + std::to_string(line_no) + ": timestamp not on the hour '" + s +
                    "'");
  return days_from_civil(y, mo, d) * 24 + h;
}

inline std::string format_iso_hour(std::int64_t hours) {
  std::int64_t days = hours / 24;
  int h = static_cast<int>(hours % 24);
  if (h < 0) {
    h += 24;
    --days;
  }
  int y, m, d;
  civil_from_days(days, y, m, d);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:00:00", y, m, d, h);
  return buf;
}

}  // namespace timeutil

/// Default export epoch: 2020-01-01T00:00:00.
inline std::int64_t default_start_hour() { return timeutil::days_from_civil(2020, 1, 1) * 24; }

/// Writes a dataset in the schema above: one row per hour, houses in
/// encounter order, each house's days consecutive from `start_hour`.
inline void save_csv(const std::string& path, const Dataset& ds,
                     std::int64_t start_hour = default_start_hour(), bool with_labels = true) {
  std::ofstream os(path);
  if (!os) throw DataError("save_csv: cannot open " + path);
  os << "house_id,timestamp,consumption_kwh" << (with_labels ? ",label" : "") << "\n";
  std::map<int, std::int64_t> next_hour;  // per-house clock
  for (const auto& s : ds.samples) {
    auto [it, inserted] = next_hour.try_emplace(s.house_id, start_hour);
    for (std::size_t t = 0; t < s.y.size(); ++t) {
      os << s.house_id << "," << timeutil::format_iso_hour(it->second++) << ","
         << format_double(s.y[t]);
      if (with_labels) os << "," << s.x[t];
      os << "\n";
    }
  }
  if (!os) throw DataError("save_csv: write failed for " + path);
}

namespace detail {

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace detail

/// Loads the schema above. Rows must be grouped per house with strictly
/// consecutive hourly timestamps; each house's series is cut into daily
/// sequences (trailing partial day dropped). Without a label column all
/// labels are zero.
inline Dataset load_csv(const std::string& path, std::size_t seq_len = 24) {
  std::ifstream is(path);
  if (!is) throw DataError("load_csv: cannot open " + path);

  std::string line;
  if (!std::getline(is, line)) throw DataError("load_csv: empty file " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  bool has_label;
  if (line == "house_id,timestamp,consumption_kwh,label")
    has_label = true;
  else if (line == "house_id,timestamp,consumption_kwh")
    has_label = false;
  else
    throw DataError("load_csv: unrecognized header '" + line + "'");

  struct HouseSeries {
    std::vector<double> y;
    std::vector<int> x;
    std::int64_t last_hour = 0;
  };
  std::vector<int> house_order;
  std::map<int, HouseSeries> series;

  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> f = detail::split_fields(line);
    const std::size_t expected = has_label ? 4u : 3u;
    if (f.size() != expected)
      throw DataError("csv line " + std::to_string(line_no) + ": expected " +
                      std::to_string(expected) + " fields, got " + std::to_string(f.size()));
    int house_id;
    try {
      std::size_t used = 0;
      house_id = std::stoi(f[0], &used);
      if (used != f[0].size()) throw std::invalid_argument(f[0]);
    } catch (const std::exception&) {
      throw DataError("csv line " + std::to_string(line_no) + ": bad house_id '" + f[0] + "'");
    }
    const std::int64_t hour = timeutil::parse_iso_hour(f[1], line_no);
    double consumption;
    try {
      std::size_t used = 0;
      consumption = std::stod(f[2], &used);
      if (used != f[2].size()) throw std::invalid_argument(f[2]);
    } catch (const std::exception&) {
      throw DataError("csv line " + std::to_string(line_no) + ": bad consumption '" + f[2] + "'");
    }
    if (consumption < 0.0)
      throw DataError("csv line " + std::to_string(line_no) + ": negative consumption " + f[2]);
    int label = 0;
    if (has_label) {
      try {
        std::size_t used = 0;
        label = std::stoi(f[3], &used);
        if (used != f[3].size()) throw std::invalid_argument(f[3]);
      } catch (const std::exception&) {
        throw DataError("csv line " + std::to_string(line_no) + ": bad label '" + f[3] + "'");
      }
      if (label < 0)
        throw DataError("csv line " + std::to_string(line_no) + ": negative label " + f[3]);
    }

    auto [it, inserted] = series.try_emplace(house_id);
    if (inserted) {
      house_order.push_back(house_id);
    } else if (hour != it->second.last_hour + 1) {
      throw DataError("csv line " + std::to_string(line_no) + ": timestamp for house " + f[0] +
                      " is not one hour after the previous row");
    }
    it->second.last_hour = hour;
    it->second.y.push_back(consumption);
    it->second.x.push_back(label);
  }

  Dataset ds;
  ds.seq_len = seq_len;
  int max_label = 0;
  for (int house_id : house_order) {
    const HouseSeries& hs = series[house_id];
    for (auto& sample : reshape_daily(hs.y, hs.x, house_id, seq_len))
      ds.samples.push_back(std::move(sample));
    for (int x : hs.x) max_label = std::max(max_label, x);
  }
  for (std::size_t i = 0; i < ds.samples.size(); ++i) ds.samples[i].uid = i;
  ds.alphabet_size = std::max(2, max_label + 1);
  return ds;
}

}  // namespace dipriv
