#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include <nlohmann/json.hpp>

#include "pal/config.hpp"
#include "pal/csv.hpp"
#include "pal/pipeline.hpp"

using namespace pal;
namespace fs = std::filesystem;

namespace {

PipelineConfig fast_config() {
  PipelineConfig cfg;
  cfg.iterations = 2;
  cfg.hidden_dims = {8};
  cfg.embed_dim = 6;
  cfg.cmc_max_rank = 10;
  cfg.wls.top_m = 3;
  cfg.cluster.reduce_dim = 3;
  cfg.cluster.knn_k = 3;
  cfg.cluster.min_pts = 3;
  cfg.train.epochs_per_iteration = 3;
  cfg.train.batch_size = 16;
  cfg.benchmark.n_identities = 4;
  cfg.benchmark.samples_per_identity_source = 6;
  cfg.benchmark.samples_per_identity_target = 8;
  cfg.benchmark.n_cameras = 3;
  cfg.benchmark.latent_dim = 2;
  cfg.benchmark.feature_dim = 5;
  cfg.benchmark.intra_identity_noise_sigma = 0.3;
  cfg.benchmark.query_fraction = 0.25;
  cfg.benchmark.seed = 11;
  return cfg;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("a single-iteration run yields exactly one report entry") {
  PipelineConfig cfg = fast_config();
  cfg.iterations = 1;
  const PipelineReport rep = run_pipeline(cfg);
  REQUIRE(rep.iterations.size() == 1);
  CHECK(rep.iterations[0].iteration == 1);
  CHECK(!rep.aborted);
  CHECK(rep.final_eval().map > 0.0);
}

TEST_CASE("reruns with the same config are byte-identical") {
  const PipelineConfig cfg = fast_config();
  const PipelineReport a = run_pipeline(cfg);
  const PipelineReport b = run_pipeline(cfg);
  CHECK(a.to_json().dump(2) == b.to_json().dump(2));
  CHECK(a.to_csv() == b.to_csv());

  TempDir dir_a("pal_test_run_a");
  TempDir dir_b("pal_test_run_b");
  write_report_files(a, dir_a.path.string());
  write_report_files(b, dir_b.path.string());
  for (const char* name : {"report.json", "report.csv", "eval_summary.csv"}) {
    CHECK(read_text_file((dir_a.path / name).string()) ==
          read_text_file((dir_b.path / name).string()));
  }
}

TEST_CASE("report JSON round-trips through from_json") {
  const PipelineReport rep = run_pipeline(fast_config());
  const PipelineReport back = PipelineReport::from_json(rep.to_json());
  CHECK(back.to_json().dump(2) == rep.to_json().dump(2));
  CHECK(back.to_csv() == rep.to_csv());
}

TEST_CASE("fusion set resets to the base block and labels match clusters") {
  PipelineConfig cfg = fast_config();
  cfg.iterations = 3;
  const Benchmark bench = generate_benchmark(cfg.benchmark);

  int n_classes = 0;
  for (const Sample& s : bench.source_train.samples)
    n_classes = std::max(n_classes, *s.label + 1);

  std::vector<IterationTrace> traces;
  RunHooks hooks;
  hooks.on_iteration = [&](const IterationTrace& t) { traces.push_back(t); };
  const PipelineReport rep = run_pipeline(cfg, bench, hooks);
  REQUIRE(traces.size() == rep.iterations.size());

  std::set<int> base_counts;
  for (const IterationTrace& t : traces) {
    base_counts.insert(t.base_count);
    REQUIRE(t.selected_indices.size() == t.selected_clusters.size());
    REQUIRE(t.selected_indices.size() == t.supervision_labels.size());
    for (std::size_t j = 0; j < t.selected_indices.size(); ++j) {
      const int idx = t.selected_indices[j];
      const int cluster = t.selected_clusters[j];
      // Selected samples are non-noise and keep their assignment as label.
      CHECK(t.assignment[idx] == cluster);
      CHECK(cluster >= 0);
      CHECK(t.supervision_labels[j] == n_classes + cluster);
    }
  }
  // The lambda=0 block never changes size: D is rebuilt from it every pass.
  CHECK(base_counts.size() == 1);
  CHECK(*base_counts.begin() == static_cast<int>(bench.source_train.size()));
}

TEST_CASE("no target identity is readable by any training phase") {
  const PipelineConfig cfg = fast_config();
  const PipelineReport rep = run_pipeline(cfg);
  CHECK(rep.audit.target_identity_leaks == 0);
}

TEST_CASE("a tampered benchmark with visible identities trips the audit") {
  const PipelineConfig cfg = fast_config();
  Benchmark bench = generate_benchmark(cfg.benchmark);
  for (Sample& s : bench.target_train.samples)
    s.identity_id = bench.ground_truth.at(s.sample_id);
  const PipelineReport rep = run_pipeline(cfg, bench);
  CHECK(rep.audit.target_identity_leaks ==
        static_cast<std::int64_t>(bench.target_train.size()));
}

TEST_CASE("generated-image counts follow the variant table") {
  PipelineConfig cfg = fast_config();
  const Benchmark bench = generate_benchmark(cfg.benchmark);
  for (Variant v : {Variant::PAL, Variant::CEL}) {
    cfg.variant = v;
    const PipelineReport rep = run_pipeline(cfg, bench);
    for (const auto& it : rep.iterations)
      CHECK(it.generated_count == static_cast<int>(bench.source_train.size()));
  }
  for (Variant v : {Variant::BS, Variant::OIMG, Variant::DirectTransfer}) {
    cfg.variant = v;
    const PipelineReport rep = run_pipeline(cfg, bench);
    for (const auto& it : rep.iterations) CHECK(it.generated_count == 0);
  }
}

TEST_CASE("CEL differs from PAL only in the variant field of the echo") {
  PipelineConfig pal_cfg = fast_config();
  pal_cfg.variant = Variant::PAL;
  PipelineConfig cel_cfg = fast_config();
  cel_cfg.variant = Variant::CEL;
  const Benchmark bench = generate_benchmark(pal_cfg.benchmark);
  const PipelineReport pal_rep = run_pipeline(pal_cfg, bench);
  const PipelineReport cel_rep = run_pipeline(cel_cfg, bench);

  nlohmann::json a = nlohmann::json::parse(pal_rep.config_echo);
  nlohmann::json b = nlohmann::json::parse(cel_rep.config_echo);
  CHECK(a.at("variant") == "PAL");
  CHECK(b.at("variant") == "CEL");
  a.erase("variant");
  b.erase("variant");
  CHECK(a == b);
}

TEST_CASE("DirectTransfer rows carry no clustering state") {
  PipelineConfig cfg = fast_config();
  cfg.variant = Variant::DirectTransfer;
  const PipelineReport rep = run_pipeline(cfg);
  REQUIRE(rep.iterations.size() == 2);
  for (const auto& it : rep.iterations) {
    CHECK(it.k_clusters == 0);
    CHECK(it.selected == 0);
  }
}

TEST_CASE("max_pseudo_target caps the generated set") {
  PipelineConfig cfg = fast_config();
  cfg.max_pseudo_target = 10;
  const PipelineReport rep = run_pipeline(cfg);
  for (const auto& it : rep.iterations) CHECK(it.generated_count == 10);
}

TEST_CASE("an impossible clustering aborts with the partial report") {
  PipelineConfig cfg = fast_config();
  cfg.cluster.min_pts = 100000;  // larger than the target set: always noise
  const PipelineReport rep = run_pipeline(cfg);
  CHECK(rep.aborted);
  CHECK(!rep.abort_reason.empty());
  CHECK(rep.iterations.empty());
}

TEST_CASE("dump files appear when requested") {
  TempDir dir("pal_test_dumps");
  PipelineConfig cfg = fast_config();
  cfg.dump_weights = true;
  cfg.dump_clusters = true;
  RunHooks hooks;
  hooks.dump_dir = dir.path.string();
  const PipelineReport rep = run_pipeline(cfg, generate_benchmark(cfg.benchmark), hooks);
  REQUIRE(!rep.aborted);
  for (int i = 1; i <= cfg.iterations; ++i) {
    CHECK(fs::exists(dir.path / ("weights_iter" + std::to_string(i) + ".csv")));
    CHECK(fs::exists(dir.path / ("clusters_iter" + std::to_string(i) + ".csv")));
  }
  // Cluster dump covers the whole target-train set.
  const std::string cluster_csv =
      read_text_file((dir.path / "clusters_iter1.csv").string());
  const auto rows = std::count(cluster_csv.begin(), cluster_csv.end(), '\n') - 1;
  CHECK(rows ==
        static_cast<long>(generate_benchmark(cfg.benchmark).target_train.size()));
  CHECK(cluster_csv.rfind("sample_id,cluster,is_noise,dist_to_centroid\n", 0) == 0);
}

TEST_CASE("dump flags without a directory are a config error") {
  PipelineConfig cfg = fast_config();
  cfg.dump_weights = true;
  CHECK_THROWS_AS(run_pipeline(cfg), ConfigError);
}

TEST_CASE("ablation runs five variants over one benchmark") {
  PipelineConfig cfg = fast_config();
  TempDir dir("pal_test_ablate");
  const auto reports = run_ablation(cfg, dir.path.string());
  REQUIRE(reports.size() == 5);
  std::set<std::string> variants;
  std::set<std::uint64_t> hashes;
  for (const auto& rep : reports) {
    variants.insert(rep.variant);
    hashes.insert(rep.benchmark_hash);
    CHECK(rep.iterations.size() == 2);
  }
  CHECK(variants == std::set<std::string>{"PAL", "BS", "CEL", "OIMG", "DirectTransfer"});
  CHECK(hashes.size() == 1);

  const std::string combined = read_text_file((dir.path / "combined.csv").string());
  CHECK(std::count(combined.begin(), combined.end(), '\n') == 1 + 5 * 2);
  const std::string plot = read_text_file((dir.path / "plot_cmc.csv").string());
  CHECK(plot.rfind("rank,variant,cmc\n", 0) == 0);
  for (const char* name : {"PAL", "BS", "CEL", "OIMG", "DirectTransfer", "benchmark"})
    CHECK(fs::exists(dir.path / name));
  CHECK(fs::exists(dir.path / "benchmark" / "manifest.json"));
}

TEST_CASE("every emitted CSV parses back losslessly") {
  TempDir dir("pal_test_csv_roundtrip");
  PipelineConfig cfg = fast_config();
  cfg.dump_weights = true;
  cfg.dump_clusters = true;
  run_ablation(cfg, dir.path.string());

  int files_checked = 0;
  for (const auto& entry : fs::recursive_directory_iterator(dir.path)) {
    if (entry.path().extension() != ".csv") continue;
    ++files_checked;
    const std::string text = read_text_file(entry.path().string());
    const CsvRows rows = parse_csv(text);
    // Structure survives a parse/serialize cycle byte for byte.
    CHECK(csv_to_string(rows) == text);
    // Every numeric field re-formats to the exact original token.
    for (const auto& row : rows) {
      for (const std::string& token : row) {
        try {
          CHECK(format_double(parse_double(token)) == token);
        } catch (const IoError&) {
          // non-numeric field (header or variant name)
        }
      }
    }
  }
  // 5 variant report+summary pairs, dumps, combined, plot, benchmark snapshot.
  CHECK(files_checked >= 16);

  // The typed report reader reproduces combined.csv exactly.
  const std::string combined = read_text_file((dir.path / "combined.csv").string());
  const auto typed = report_rows_from_csv(combined);
  std::string rebuilt = "iteration,variant,K,selected,map,rank1,rank5\n";
  for (const auto& r : typed) {
    rebuilt += std::to_string(r.iteration) + "," + r.variant + "," +
               std::to_string(r.k_clusters) + "," + std::to_string(r.selected) + "," +
               format_double(r.map) + "," + format_double(r.rank1) + "," +
               format_double(r.rank5) + "\n";
  }
  CHECK(rebuilt == combined);
  CHECK(typed.size() == 5 * 2);
}

TEST_CASE("report CSV layout matches the contract") {
  const PipelineReport rep = run_pipeline(fast_config());
  const std::string csv = rep.to_csv();
  CHECK(csv.rfind("iteration,variant,K,selected,map,rank1,rank5\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') ==
        1 + static_cast<long>(rep.iterations.size()));
}
