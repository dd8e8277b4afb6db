#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "pal/dataset.hpp"

namespace pal {

// Per-domain rendering map: features = scale .* (mixing * latent) + offset.
// mixing is feature_dim x latent_dim and must have full column rank.
struct StyleMapParams {
  std::vector<double> scale;
  std::vector<double> offset;
  std::vector<std::vector<double>> mixing;

  void validate(int feature_dim, int latent_dim, const char* field) const;
};

struct BenchmarkConfig {
  int n_identities = 16;
  int samples_per_identity_source = 20;
  int samples_per_identity_target = 24;
  int n_cameras = 4;
  int latent_dim = 5;
  int feature_dim = 12;
  double intra_identity_noise_sigma = 0.25;
  double query_fraction = 0.25;
  std::uint64_t seed = 42;
  // When absent, styles are materialized from the seed: a shared orthonormal
  // mixing, identity scale/offset for the source, and a seeded affine shift
  // for the target.
  std::optional<StyleMapParams> source_style;
  std::optional<StyleMapParams> target_style;

  void validate() const;
};

struct IdentitySpec {
  std::int64_t identity_id = 0;
  std::vector<double> latent_center;
};

// Generated two-domain benchmark. target_train carries identity_id = -1 on
// every sample (the unlabeled view); ground_truth maps every target-domain
// sample_id to its hidden identity for evaluation-side bookkeeping only.
// gallery holds the same samples as target_train with identities visible.
struct Benchmark {
  Dataset source_train;
  Dataset target_train;
  Dataset query;
  Dataset gallery;
  std::map<std::int64_t, std::int64_t> ground_truth;
  std::vector<IdentitySpec> source_identities;
  std::vector<IdentitySpec> target_identities;
  StyleMapParams source_style;
  StyleMapParams target_style;
  BenchmarkConfig config;
};

Benchmark generate_benchmark(const BenchmarkConfig& cfg);

// Symmetric moment discrepancy: ||mean_a - mean_b||_2 + ||std_a - std_b||_2
// with per-dimension population statistics.
double domain_gap(const Dataset& a, const Dataset& b);

// FNV-1a over the four dataset CSV snapshots; identifies a benchmark byte
// for byte.
std::uint64_t benchmark_fingerprint(const Benchmark& b);

// Number of query samples drawn per identity for a given config.
int query_count_per_identity(const BenchmarkConfig& cfg);

}  // namespace pal
