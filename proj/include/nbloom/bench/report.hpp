#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nbloom/bench/evaluate.hpp"
#include "nbloom/bench/space.hpp"
#include "nbloom/bench/timing.hpp"

namespace nbloom::bench {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;
  double number(std::size_t row, const std::string& name) const;
};

// Plain comma-separated values: no quoting, so fields may not contain commas.
void write_csv(std::ostream& out, const CsvTable& table);
CsvTable read_csv(std::istream& in);

// Shortest text that parses back to the same double.
std::string format_number(double v);

CsvTable curve_table(const std::vector<CurveRow>& rows);
CsvTable timing_table(const std::vector<TimingRow>& rows);

void write_curve_csv(std::ostream& out, const std::vector<CurveRow>& rows);
void write_timing_csv(std::ostream& out, const std::vector<TimingRow>& rows);

nlohmann::json to_json(const RateEstimate& r);
nlohmann::json to_json(const MeasuredRates& r);
nlohmann::json to_json(const CurveRow& r);
nlohmann::json to_json(const TimingRow& r);
nlohmann::json to_json(const ParamCount& c);

}  // namespace nbloom::bench
