#include "nbloom/bench/report.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include "nbloom/error.hpp"

namespace nbloom::bench {

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw DataError("csv: no column named '" + name + "'");
}

double CsvTable::number(std::size_t row, const std::string& name) const {
  const std::string& s = rows.at(row).at(column(name));
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError("csv: column '" + name + "' row " + std::to_string(row) + " is not a number: '" + s + "'");
  }
}

namespace {

void write_line(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (fields[i].find_first_of(",\n\r") != std::string::npos) {
      throw DataError("csv: field contains a separator: '" + fields[i] + "'");
    }
    if (i) out << ',';
    out << fields[i];
  }
  out << '\n';
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

void write_csv(std::ostream& out, const CsvTable& table) {
  write_line(out, table.header);
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) throw DataError("csv: row width does not match header");
    write_line(out, row);
  }
}

CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_line(line);
    if (t.header.empty()) {
      t.header = std::move(fields);
    } else {
      if (fields.size() != t.header.size()) {
        throw DataError("csv: line " + std::to_string(lineno) + " has " + std::to_string(fields.size()) +
                        " fields, expected " + std::to_string(t.header.size()));
      }
      t.rows.push_back(std::move(fields));
    }
  }
  if (t.header.empty()) throw DataError("csv: empty input");
  return t;
}

std::string format_number(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

CsvTable curve_table(const std::vector<CurveRow>& rows) {
  CsvTable t;
  t.header = {"model", "n", "state_bits", "backup_bits", "total_bits", "fpr", "fnr", "composite_fnr", "tau", "episodes"};
  for (const auto& r : rows) {
    t.rows.push_back({r.model, std::to_string(r.n), format_number(r.state_bits), format_number(r.backup_bits),
                      format_number(r.total_bits), format_number(r.fpr), format_number(r.fnr),
                      format_number(r.composite_fnr), format_number(r.threshold), std::to_string(r.episodes)});
  }
  return t;
}

CsvTable timing_table(const std::vector<TimingRow>& rows) {
  CsvTable t;
  t.header = {"artifact", "op", "batch", "latency_ms", "throughput_per_s"};
  for (const auto& r : rows) {
    t.rows.push_back({r.artifact, r.op, std::to_string(r.batch), format_number(r.latency_ms),
                      format_number(r.throughput_per_s)});
  }
  return t;
}

void write_curve_csv(std::ostream& out, const std::vector<CurveRow>& rows) { write_csv(out, curve_table(rows)); }
void write_timing_csv(std::ostream& out, const std::vector<TimingRow>& rows) { write_csv(out, timing_table(rows)); }

nlohmann::json to_json(const RateEstimate& r) {
  return {{"rate", r.rate}, {"errors", r.errors}, {"trials", r.trials}, {"ci99", {r.ci_low, r.ci_high}}};
}

nlohmann::json to_json(const MeasuredRates& r) {
  return {{"fpr", to_json(r.fpr)}, {"fnr", to_json(r.fnr)}, {"queries", r.queries}, {"episodes", r.episodes}};
}

nlohmann::json to_json(const CurveRow& r) {
  return {{"model", r.model},
          {"n", r.n},
          {"state_bits", r.state_bits},
          {"backup_bits", r.backup_bits},
          {"total_bits", r.total_bits},
          {"max_total_bits", r.max_total_bits},
          {"fpr", r.fpr},
          {"fnr", r.fnr},
          {"composite_fnr", r.composite_fnr},
          {"tau", r.threshold},
          {"episodes", r.episodes}};
}

nlohmann::json to_json(const TimingRow& r) {
  return {{"artifact", r.artifact},
          {"op", r.op},
          {"batch", r.batch},
          {"latency_ms", r.latency_ms},
          {"throughput_per_s", r.throughput_per_s},
          {"runs", r.runs}};
}

nlohmann::json to_json(const ParamCount& c) {
  return {{"trainable", c.trainable},
          {"total", c.total},
          {"bytes_at_precision", c.bytes_at_precision},
          {"checkpoint_bytes", c.checkpoint_bytes}};
}

}  // namespace nbloom::bench
