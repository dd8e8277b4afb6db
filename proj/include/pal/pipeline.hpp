#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "pal/clusterer.hpp"
#include "pal/encoder.hpp"
#include "pal/metrics.hpp"
#include "pal/synthgen.hpp"
#include "pal/wls.hpp"

namespace pal {

// Ablation variants:
//   PAL            transferred pseudo-target set + weighted-smoothing loss
//   BS             raw source set + cross-entropy
//   CEL            transferred pseudo-target set + cross-entropy
//   OIMG           raw source set + weighted-smoothing loss
//   DirectTransfer source-only training, no adaptation loop
enum class Variant { PAL, BS, CEL, OIMG, DirectTransfer };

const char* to_string(Variant v);
Variant variant_from_string(const std::string& s);

struct PipelineConfig {
  int iterations = 6;
  Variant variant = Variant::PAL;
  std::vector<int> hidden_dims = {32};
  int embed_dim = 16;
  // Cap on the transferred set size; 0 keeps the full set.
  int max_pseudo_target = 0;
  bool cross_camera_exclusion = true;
  int cmc_max_rank = 20;
  bool dump_weights = false;
  bool dump_clusters = false;
  WlsConfig wls;
  ClusterConfig cluster;
  TrainConfig train;
  BenchmarkConfig benchmark;

  void validate() const;
};

struct IterationReport {
  int iteration = 0;
  int k_clusters = 0;
  int selected = 0;
  int generated_count = 0;
  double mean_loss = 0.0;
  EvalReport eval;
};

struct AuditReport {
  // Target-train samples seen by any training phase with a visible identity.
  // Must stay 0: the pipeline view scrubs identities to -1.
  std::int64_t target_identity_leaks = 0;
  std::int64_t wls_log_clamps = 0;
};

struct PipelineReport {
  std::string variant;
  std::vector<IterationReport> iterations;
  AuditReport audit;
  std::uint64_t benchmark_hash = 0;
  bool aborted = false;
  std::string abort_reason;
  // Effective config as canonical JSON text.
  std::string config_echo;

  const EvalReport& final_eval() const;

  nlohmann::json to_json() const;
  static PipelineReport from_json(const nlohmann::json& j);
  // Rows `iteration,variant,K,selected,map,rank1,rank5`, header included.
  std::string to_csv() const;
};

// Per-iteration view of the selection phase, for instrumentation and tests.
struct IterationTrace {
  int iteration = 0;
  // Indices into the target-train dataset, the cluster each was assigned by
  // this iteration's clustering, and the head label it will train with.
  std::vector<int> selected_indices;
  std::vector<int> selected_clusters;
  std::vector<int> supervision_labels;
  std::vector<int> assignment;
  // lambda=0 portion of the next fusion set; constant across iterations.
  int base_count = 0;
};

// Side outputs of a run. dump_dir must be set when either dump flag is on.
struct RunHooks {
  std::string dump_dir;
  std::function<void(const IterationTrace&)> on_iteration;
};

// Writes report.json, report.csv and eval_summary.csv into dir.
void write_report_files(const PipelineReport& report, const std::string& dir);

// Writes the four dataset CSVs plus manifest.json into dir.
void write_benchmark_files(const Benchmark& bench, const std::string& dir);

// Runs all five variants over one shared benchmark. When out_dir is nonempty,
// per-variant subdirectories, combined.csv, plot_cmc.csv and the benchmark
// snapshot are written there.
std::vector<PipelineReport> run_ablation(const PipelineConfig& cfg,
                                         const std::string& out_dir);

// Runs the configured variant over an already generated benchmark.
PipelineReport run_pipeline(const PipelineConfig& cfg, const Benchmark& bench,
                            const RunHooks& hooks = {});

// Generates the benchmark from cfg.benchmark, then runs.
PipelineReport run_pipeline(const PipelineConfig& cfg, const RunHooks& hooks = {});

}  // namespace pal
