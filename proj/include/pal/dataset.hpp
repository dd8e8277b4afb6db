#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pal/common.hpp"

namespace pal {

enum class Domain { Source, Target, PseudoTarget };
enum class Role { SourceTrain, TargetTrain, Query, Gallery };

const char* to_string(Domain d);
const char* to_string(Role r);
Domain domain_from_string(const std::string& s);

// One observation. identity_id is -1 when hidden (unlabeled target data);
// label is the class/cluster index and is only present for source,
// pseudo-target, or pseudo-labeled samples.
struct Sample {
  std::int64_t sample_id = 0;
  std::vector<double> raw_features;
  std::int64_t identity_id = -1;
  int camera_id = 0;
  Domain domain = Domain::Source;
  std::optional<int> label;
};

struct Dataset {
  Role role = Role::SourceTrain;
  std::vector<Sample> samples;

  bool empty() const { return samples.empty(); }
  std::size_t size() const { return samples.size(); }
  // Feature dimension of the first sample (0 when empty). All samples in a
  // well-formed dataset share it.
  int feature_dim() const;
};

// Snapshot format: header `sample_id,domain,camera_id,identity_id,label,f_0..f_{F-1}`,
// one row per sample. Missing labels are written as -1. TargetTrain exports
// always write identity_id as -1, whatever is stored in memory.
std::string dataset_to_csv(const Dataset& d);
Dataset dataset_from_csv(const std::string& text, Role role);

void write_dataset_csv(const Dataset& d, const std::string& path);
Dataset read_dataset_csv(const std::string& path, Role role);

}  // namespace pal
