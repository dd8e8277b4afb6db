#include "pal/dataset.hpp"

#include <fstream>
#include <sstream>

namespace pal {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

const char* to_string(Domain d) {
  switch (d) {
    case Domain::Source: return "Source";
    case Domain::Target: return "Target";
    case Domain::PseudoTarget: return "PseudoTarget";
  }
  return "?";
}

const char* to_string(Role r) {
  switch (r) {
    case Role::SourceTrain: return "SourceTrain";
    case Role::TargetTrain: return "TargetTrain";
    case Role::Query: return "Query";
    case Role::Gallery: return "Gallery";
  }
  return "?";
}

Domain domain_from_string(const std::string& s) {
  if (s == "Source") return Domain::Source;
  if (s == "Target") return Domain::Target;
  if (s == "PseudoTarget") return Domain::PseudoTarget;
  throw IoError("unknown domain tag: '" + s + "'");
}

int Dataset::feature_dim() const {
  return samples.empty() ? 0 : static_cast<int>(samples.front().raw_features.size());
}

std::string dataset_to_csv(const Dataset& d) {
  const int f = d.feature_dim();
  std::string out = "sample_id,domain,camera_id,identity_id,label";
  for (int i = 0; i < f; ++i) out += ",f_" + std::to_string(i);
  out += "\n";
  const bool hide_identity = d.role == Role::TargetTrain;
  for (const Sample& s : d.samples) {
    out += std::to_string(s.sample_id);
    out += ",";
    out += to_string(s.domain);
    out += ",";
    out += std::to_string(s.camera_id);
    out += ",";
    out += std::to_string(hide_identity ? -1 : s.identity_id);
    out += ",";
    out += std::to_string(s.label ? *s.label : -1);
    for (double v : s.raw_features) {
      out += ",";
      out += format_double(v);
    }
    out += "\n";
  }
  return out;
}

Dataset dataset_from_csv(const std::string& text, Role role) {
  Dataset d;
  d.role = role;
  std::stringstream ss(text);
  std::string line;
  if (!std::getline(ss, line)) throw IoError("dataset csv: empty input");
  const auto header = split_csv_line(line);
  if (header.size() < 5 || header[0] != "sample_id") {
    throw IoError("dataset csv: bad header");
  }
  const std::size_t n_features = header.size() - 5;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw IoError("dataset csv: row with " + std::to_string(fields.size()) +
                    " fields, expected " + std::to_string(header.size()));
    }
    Sample s;
    s.sample_id = std::stoll(fields[0]);
    s.domain = domain_from_string(fields[1]);
    s.camera_id = std::stoi(fields[2]);
    s.identity_id = std::stoll(fields[3]);
    const int label = std::stoi(fields[4]);
    if (label >= 0) s.label = label;
    s.raw_features.reserve(n_features);
    for (std::size_t i = 5; i < fields.size(); ++i) {
      s.raw_features.push_back(parse_double(fields[i]));
    }
    d.samples.push_back(std::move(s));
  }
  return d;
}

void write_dataset_csv(const Dataset& d, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << dataset_to_csv(d);
  if (!out) throw IoError("write failed: " + path);
}

Dataset read_dataset_csv(const std::string& path, Role role) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return dataset_from_csv(buf.str(), role);
}

}  // namespace pal
