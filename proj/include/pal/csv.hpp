#pragma once

#include <string>
#include <vector>

#include "pal/common.hpp"

namespace pal {

using CsvRows = std::vector<std::vector<std::string>>;

// Splits comma-separated lines; fields never contain commas or quotes in any
// format this project emits.
CsvRows parse_csv(const std::string& text);

std::string csv_to_string(const CsvRows& rows);

// Row view of a report/combined CSV (`iteration,variant,K,selected,map,rank1,rank5`).
struct ReportCsvRow {
  int iteration = 0;
  std::string variant;
  int k_clusters = 0;
  int selected = 0;
  double map = 0.0;
  double rank1 = 0.0;
  double rank5 = 0.0;
};

std::vector<ReportCsvRow> report_rows_from_csv(const std::string& text);

}  // namespace pal
