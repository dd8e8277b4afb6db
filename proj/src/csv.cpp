#include "pal/csv.hpp"

#include <sstream>

namespace pal {

CsvRows parse_csv(const std::string& text) {
  CsvRows rows;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ls(line);
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    rows.push_back(std::move(fields));
  }
  return rows;
}

std::string csv_to_string(const CsvRows& rows) {
  std::string out;
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ",";
      out += row[i];
    }
    out += "\n";
  }
  return out;
}

std::vector<ReportCsvRow> report_rows_from_csv(const std::string& text) {
  const CsvRows rows = parse_csv(text);
  if (rows.empty() || rows.front() !=
                          std::vector<std::string>{"iteration", "variant", "K",
                                                   "selected", "map", "rank1", "rank5"})
    throw IoError("report csv: bad header");
  std::vector<ReportCsvRow> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() != 7) throw IoError("report csv: malformed row");
    ReportCsvRow row;
    row.iteration = std::stoi(r[0]);
    row.variant = r[1];
    row.k_clusters = std::stoi(r[2]);
    row.selected = std::stoi(r[3]);
    row.map = parse_double(r[4]);
    row.rank1 = parse_double(r[5]);
    row.rank5 = parse_double(r[6]);
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace pal
