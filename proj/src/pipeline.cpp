#include "pal/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "pal/config.hpp"
#include "pal/transfer.hpp"

namespace pal {

namespace {

namespace fs = std::filesystem;

constexpr std::uint64_t kInitPhase = 1;
constexpr std::uint64_t kIterPhase = 2;
constexpr std::uint64_t kHeadPhase = 3;
constexpr std::uint64_t kSubsetPhase = 4;

std::uint64_t phase_salt(std::uint64_t phase, std::uint64_t iter, std::uint64_t epoch) {
  return (phase << 48) | (iter << 24) | epoch;
}

bool uses_generated_images(Variant v) {
  return v == Variant::PAL || v == Variant::CEL;
}

bool uses_wls_loss(Variant v) {
  return v == Variant::PAL || v == Variant::OIMG;
}

struct SelectedSample {
  const Sample* sample = nullptr;
  Supervision supervision;
};

// One pass of epochs_per_iteration over the fusion set, seeded shuffling,
// minibatch gradient descent. Returns the mean step loss.
double train_epochs(Encoder& enc, const std::vector<const Sample*>& base,
                    const std::vector<Supervision>& base_sup,
                    const std::vector<SelectedSample>& selected,
                    const TrainConfig& cfg, double sigma, std::uint64_t salt_iter,
                    std::uint64_t phase, WlsStats* stats, AuditReport* audit) {
  TrainBatch all;
  all.reserve(base.size() + selected.size());
  for (std::size_t i = 0; i < base.size(); ++i) all.emplace_back(base[i], base_sup[i]);
  for (const auto& s : selected) all.emplace_back(s.sample, s.supervision);

  if (audit) {
    for (const auto& [sample, sup] : all) {
      if (sample->domain == Domain::Target && sample->identity_id != -1)
        ++audit->target_identity_leaks;
    }
  }

  double loss_sum = 0.0;
  std::int64_t steps = 0;
  std::vector<std::size_t> order(all.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < cfg.epochs_per_iteration; ++epoch) {
    std::mt19937_64 rng(mix_seed(cfg.seed, phase_salt(phase, salt_iter, static_cast<std::uint64_t>(epoch))));
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      TrainBatch batch;
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      for (std::size_t i = start; i < end; ++i) batch.push_back(all[order[i]]);
      loss_sum += train_step(enc, batch, cfg, sigma, stats);
      ++steps;
    }
  }
  return steps == 0 ? 0.0 : loss_sum / static_cast<double>(steps);
}

std::vector<RetrievalItem> retrieval_items(const Dataset& d) {
  std::vector<RetrievalItem> out;
  out.reserve(d.size());
  for (const Sample& s : d.samples)
    out.push_back({s.sample_id, s.identity_id, s.camera_id});
  return out;
}

std::vector<double> row_to_vector(const Eigen::MatrixXd& m, int row) {
  std::vector<double> v(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index c = 0; c < m.cols(); ++c) v[static_cast<std::size_t>(c)] = m(row, c);
  return v;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

const char* to_string(Variant v) {
  switch (v) {
    case Variant::PAL: return "PAL";
    case Variant::BS: return "BS";
    case Variant::CEL: return "CEL";
    case Variant::OIMG: return "OIMG";
    case Variant::DirectTransfer: return "DirectTransfer";
  }
  return "?";
}

Variant variant_from_string(const std::string& s) {
  if (s == "PAL") return Variant::PAL;
  if (s == "BS") return Variant::BS;
  if (s == "CEL") return Variant::CEL;
  if (s == "OIMG") return Variant::OIMG;
  if (s == "DirectTransfer") return Variant::DirectTransfer;
  throw ConfigError("variant: unknown value '" + s + "'");
}

void PipelineConfig::validate() const {
  if (iterations < 1) throw ConfigError("iterations: must be >= 1");
  if (embed_dim < 1) throw ConfigError("embed_dim: must be >= 1");
  for (int h : hidden_dims)
    if (h < 1) throw ConfigError("hidden_dims: entries must be >= 1");
  if (max_pseudo_target < 0) throw ConfigError("max_pseudo_target: must be >= 0");
  if (cmc_max_rank < 1) throw ConfigError("cmc_max_rank: must be >= 1");
  wls.validate();
  cluster.validate();
  train.validate();
  benchmark.validate();
  if (cluster.reduce_dim > embed_dim)
    throw ConfigError("cluster.reduce_dim: must be <= embed_dim");
}

const EvalReport& PipelineReport::final_eval() const {
  if (iterations.empty())
    throw ContractViolation("PipelineReport: no completed iterations");
  return iterations.back().eval;
}

nlohmann::json PipelineReport::to_json() const {
  nlohmann::json iters = nlohmann::json::array();
  for (const IterationReport& it : iterations) {
    iters.push_back({{"iteration", it.iteration},
                     {"k_clusters", it.k_clusters},
                     {"selected", it.selected},
                     {"generated_count", it.generated_count},
                     {"mean_loss", it.mean_loss},
                     {"eval", it.eval.to_json()}});
  }
  return nlohmann::json{
      {"variant", variant},
      {"iterations", iters},
      {"audit",
       {{"target_identity_leaks", audit.target_identity_leaks},
        {"wls_log_clamps", audit.wls_log_clamps}}},
      {"benchmark_hash", benchmark_hash},
      {"aborted", aborted},
      {"abort_reason", abort_reason},
      {"config", nlohmann::json::parse(config_echo)}};
}

PipelineReport PipelineReport::from_json(const nlohmann::json& j) {
  PipelineReport r;
  r.variant = j.at("variant").get<std::string>();
  for (const auto& it : j.at("iterations")) {
    IterationReport ir;
    ir.iteration = it.at("iteration").get<int>();
    ir.k_clusters = it.at("k_clusters").get<int>();
    ir.selected = it.at("selected").get<int>();
    ir.generated_count = it.at("generated_count").get<int>();
    ir.mean_loss = it.at("mean_loss").get<double>();
    ir.eval = EvalReport::from_json(it.at("eval"));
    r.iterations.push_back(std::move(ir));
  }
  r.audit.target_identity_leaks = j.at("audit").at("target_identity_leaks").get<std::int64_t>();
  r.audit.wls_log_clamps = j.at("audit").at("wls_log_clamps").get<std::int64_t>();
  r.benchmark_hash = j.at("benchmark_hash").get<std::uint64_t>();
  r.aborted = j.at("aborted").get<bool>();
  r.abort_reason = j.at("abort_reason").get<std::string>();
  r.config_echo = j.at("config").dump(2);
  return r;
}

std::string PipelineReport::to_csv() const {
  std::string out = "iteration,variant,K,selected,map,rank1,rank5\n";
  for (const IterationReport& it : iterations) {
    out += std::to_string(it.iteration) + "," + variant + "," +
           std::to_string(it.k_clusters) + "," + std::to_string(it.selected) +
           "," + format_double(it.eval.map) + "," + format_double(it.eval.rank1()) +
           "," + format_double(it.eval.rank5()) + "\n";
  }
  return out;
}

PipelineReport run_pipeline(const PipelineConfig& cfg, const Benchmark& bench,
                            const RunHooks& hooks) {
  cfg.validate();
  if ((cfg.dump_weights || cfg.dump_clusters) && hooks.dump_dir.empty())
    throw ConfigError("dump_weights/dump_clusters: a dump directory is required");

  PipelineReport report;
  report.variant = to_string(cfg.variant);
  report.benchmark_hash = benchmark_fingerprint(bench);
  report.config_echo = pipeline_config_to_text(cfg);

  // Training view of the target domain. Identities must already be hidden;
  // anything visible is counted as a leak and scrubbed.
  Dataset target_view = bench.target_train;
  for (Sample& s : target_view.samples) {
    if (s.identity_id != -1) {
      ++report.audit.target_identity_leaks;
      s.identity_id = -1;
    }
  }

  int n_classes = 0;
  for (const Sample& s : bench.source_train.samples) {
    if (!s.label)
      throw ContractViolation("run_pipeline: unlabeled source sample " +
                              std::to_string(s.sample_id));
    n_classes = std::max(n_classes, *s.label + 1);
  }

  // The lambda=0 block of every fusion set: transferred pseudo-target samples
  // for PAL/CEL, the raw source set otherwise.
  std::vector<Sample> base_storage;
  if (uses_generated_images(cfg.variant)) {
    const StyleTransform t = fit_transfer(bench.source_train, target_view);
    base_storage = transfer_dataset(bench.source_train, t).samples;
    if (cfg.max_pseudo_target > 0 &&
        static_cast<int>(base_storage.size()) > cfg.max_pseudo_target) {
      std::mt19937_64 rng(mix_seed(cfg.train.seed, phase_salt(kSubsetPhase, 0, 0)));
      std::shuffle(base_storage.begin(), base_storage.end(), rng);
      base_storage.resize(static_cast<std::size_t>(cfg.max_pseudo_target));
      std::sort(base_storage.begin(), base_storage.end(),
                [](const Sample& a, const Sample& b) { return a.sample_id < b.sample_id; });
    }
  } else {
    base_storage = bench.source_train.samples;
  }
  const int generated_count =
      uses_generated_images(cfg.variant) ? static_cast<int>(base_storage.size()) : 0;

  std::vector<const Sample*> base;
  std::vector<Supervision> base_sup;
  for (const Sample& s : base_storage) {
    base.push_back(&s);
    base_sup.push_back(Supervision{*s.label, 0, std::nullopt});
  }

  Encoder enc = init_encoder(bench.source_train.feature_dim(), cfg.hidden_dims,
                             cfg.embed_dim, n_classes, cfg.train.seed);

  WlsStats wls_stats;
  train_epochs(enc, base, base_sup, {}, cfg.train, 0.0, 0, kInitPhase,
               &wls_stats, &report.audit);

  const auto query_items = retrieval_items(bench.query);
  const auto gallery_items = retrieval_items(bench.gallery);
  const int max_rank = std::min<int>(cfg.cmc_max_rank, static_cast<int>(bench.gallery.size()));
  auto evaluate_now = [&] {
    return evaluate_retrieval(embed(enc, bench.query), query_items,
                              embed(enc, bench.gallery), gallery_items,
                              cfg.cross_camera_exclusion, max_rank);
  };

  const double sigma = uses_wls_loss(cfg.variant) ? cfg.wls.sigma : 0.0;
  std::vector<SelectedSample> selected;
  int k_prev = 0;

  for (int iter = 1; iter <= cfg.iterations; ++iter) {
    if (cfg.variant == Variant::DirectTransfer) {
      const double mean_loss =
          train_epochs(enc, base, base_sup, {}, cfg.train, 0.0,
                       static_cast<std::uint64_t>(iter), kIterPhase, &wls_stats,
                       &report.audit);
      report.iterations.push_back({iter, 0, 0, 0, mean_loss, evaluate_now()});
      continue;
    }

    // Widen the head for the clusters discovered last iteration; the trunk
    // carries over.
    if (iter >= 2 && k_prev > 0)
      enc = rebuild_head(enc, n_classes + k_prev,
                         mix_seed(cfg.train.seed,
                                  phase_salt(kHeadPhase, static_cast<std::uint64_t>(iter), 0)));

    const double mean_loss =
        train_epochs(enc, base, base_sup, selected, cfg.train, sigma,
                     static_cast<std::uint64_t>(iter), kIterPhase, &wls_stats,
                     &report.audit);

    // Cluster the unlabeled target set in the reduced embedding space.
    const Eigen::MatrixXd ft = embed(enc, target_view);
    const Eigen::MatrixXd f = reduce_dim(ft, cfg.cluster.reduce_dim);
    AdaptiveClusterResult adaptive;
    try {
      adaptive = cluster_with_relaxation(f, cfg.cluster);
    } catch (const EmptyClusteringError& e) {
      report.aborted = true;
      report.abort_reason = e.what();
      break;
    }
    const Eigen::MatrixXd cents = centroids(adaptive.clusters, f);
    const int k_now = adaptive.clusters.k;

    ClusterConfig iter_cluster = cfg.cluster;
    if (iter_cluster.gamma_mode == GammaMode::WithinClusterQuantile) {
      iter_cluster.gamma_quantile =
          std::min(iter_cluster.gamma_quantile +
                       iter_cluster.gamma_quantile_growth * static_cast<double>(iter - 1),
                   iter_cluster.gamma_quantile_max);
    }
    const SelectionResult sel = dynamic_sample(f, adaptive.clusters, cents, iter_cluster);

    std::vector<std::vector<double>> centroid_rows;
    for (int c = 0; c < k_now; ++c)
      centroid_rows.push_back(row_to_vector(cents, c));

    selected.clear();
    IterationTrace trace;
    trace.iteration = iter;
    trace.assignment = adaptive.clusters.assignment;
    trace.base_count = static_cast<int>(base.size());
    std::string weights_csv = "sample_id,y";
    for (int c = 0; c < k_now; ++c) weights_csv += ",w_" + std::to_string(c);
    weights_csv += "\n";

    for (std::size_t j = 0; j < sel.sample_indices.size(); ++j) {
      const int idx = sel.sample_indices[j];
      const int cluster = sel.clusters[j];
      const DistanceVector d = compute_distances(row_to_vector(f, idx), centroid_rows);
      const WeightRow row = compute_weights(compute_alpha(d), d, cfg.wls);

      // Head label space: source classes first, then this iteration's
      // clusters; pad the weight vector accordingly.
      std::vector<double> padded(static_cast<std::size_t>(n_classes + k_now), 0.0);
      for (int c = 0; c < k_now; ++c)
        padded[static_cast<std::size_t>(n_classes + c)] = row.w[static_cast<std::size_t>(c)];
      Supervision sup;
      sup.y = n_classes + cluster;
      sup.lambda = 1;
      sup.w = std::move(padded);
      selected.push_back({&target_view.samples[static_cast<std::size_t>(idx)], sup});

      trace.selected_indices.push_back(idx);
      trace.selected_clusters.push_back(cluster);
      trace.supervision_labels.push_back(sup.y);

      if (cfg.dump_weights) {
        weights_csv += std::to_string(target_view.samples[static_cast<std::size_t>(idx)].sample_id);
        weights_csv += "," + std::to_string(row.y);
        for (int c = 0; c < k_now; ++c)
          weights_csv += "," + format_double(row.w[static_cast<std::size_t>(c)]);
        weights_csv += "\n";
      }
    }
    k_prev = k_now;

    if (cfg.dump_weights)
      write_text(fs::path(hooks.dump_dir) / ("weights_iter" + std::to_string(iter) + ".csv"),
                 weights_csv);
    if (cfg.dump_clusters) {
      std::string csv = "sample_id,cluster,is_noise,dist_to_centroid\n";
      for (std::size_t i = 0; i < target_view.size(); ++i) {
        const int c = adaptive.clusters.assignment[i];
        const bool noise = c == kNoiseLabel;
        const double dc =
            noise ? -1.0 : (f.row(static_cast<Eigen::Index>(i)) - cents.row(c)).norm();
        csv += std::to_string(target_view.samples[i].sample_id) + "," +
               std::to_string(c) + "," + (noise ? "1" : "0") + "," +
               format_double(dc) + "\n";
      }
      write_text(fs::path(hooks.dump_dir) / ("clusters_iter" + std::to_string(iter) + ".csv"),
                 csv);
    }

    if (hooks.on_iteration) hooks.on_iteration(trace);

    report.iterations.push_back({iter, k_now, static_cast<int>(sel.sample_indices.size()),
                                 generated_count, mean_loss, evaluate_now()});
  }

  report.audit.wls_log_clamps = wls_stats.clamped_log_args;
  return report;
}

PipelineReport run_pipeline(const PipelineConfig& cfg, const RunHooks& hooks) {
  cfg.validate();
  return run_pipeline(cfg, generate_benchmark(cfg.benchmark), hooks);
}

void write_report_files(const PipelineReport& report, const std::string& dir) {
  fs::create_directories(dir);
  write_text(fs::path(dir) / "report.json", report.to_json().dump(2) + "\n");
  write_text(fs::path(dir) / "report.csv", report.to_csv());
  std::vector<EvalReport> evals;
  for (const auto& it : report.iterations) evals.push_back(it.eval);
  write_text(fs::path(dir) / "eval_summary.csv", eval_summary_csv(evals, report.variant));
}

void write_benchmark_files(const Benchmark& bench, const std::string& dir) {
  fs::create_directories(dir);
  write_dataset_csv(bench.source_train, (fs::path(dir) / "source_train.csv").string());
  write_dataset_csv(bench.target_train, (fs::path(dir) / "target_train.csv").string());
  write_dataset_csv(bench.query, (fs::path(dir) / "query.csv").string());
  write_dataset_csv(bench.gallery, (fs::path(dir) / "gallery.csv").string());
  nlohmann::json manifest;
  manifest["seed"] = bench.config.seed;
  manifest["fingerprint"] = benchmark_fingerprint(bench);
  manifest["counts"] = {{"source_train", bench.source_train.size()},
                        {"target_train", bench.target_train.size()},
                        {"query", bench.query.size()},
                        {"gallery", bench.gallery.size()}};
  manifest["config"] = benchmark_config_to_json(bench.config);
  write_text(fs::path(dir) / "manifest.json", manifest.dump(2) + "\n");
}

std::vector<PipelineReport> run_ablation(const PipelineConfig& cfg,
                                         const std::string& out_dir) {
  cfg.validate();
  const Benchmark bench = generate_benchmark(cfg.benchmark);
  if (!out_dir.empty()) write_benchmark_files(bench, (fs::path(out_dir) / "benchmark").string());

  const Variant variants[] = {Variant::PAL, Variant::BS, Variant::CEL,
                              Variant::OIMG, Variant::DirectTransfer};
  std::vector<PipelineReport> reports;
  std::string combined = "iteration,variant,K,selected,map,rank1,rank5\n";
  std::string plot = "rank,variant,cmc\n";
  nlohmann::json statuses;
  for (Variant v : variants) {
    PipelineConfig vcfg = cfg;
    vcfg.variant = v;
    RunHooks hooks;
    if (!out_dir.empty() && (vcfg.dump_weights || vcfg.dump_clusters))
      hooks.dump_dir = (fs::path(out_dir) / to_string(v)).string();
    if (!hooks.dump_dir.empty()) fs::create_directories(hooks.dump_dir);
    PipelineReport rep = run_pipeline(vcfg, bench, hooks);
    if (!out_dir.empty())
      write_report_files(rep, (fs::path(out_dir) / to_string(v)).string());

    std::string body = rep.to_csv();
    combined += body.substr(body.find('\n') + 1);
    if (!rep.iterations.empty()) {
      const auto& curve = rep.final_eval().cmc;
      for (std::size_t r = 0; r < curve.size(); ++r)
        plot += std::to_string(r + 1) + "," + rep.variant + "," +
                format_double(curve[r]) + "\n";
    }
    statuses[rep.variant] = rep.aborted ? ("aborted: " + rep.abort_reason)
                                        : std::string("ok");
    reports.push_back(std::move(rep));
  }
  if (!out_dir.empty()) {
    write_text(fs::path(out_dir) / "combined.csv", combined);
    write_text(fs::path(out_dir) / "plot_cmc.csv", plot);
    nlohmann::json manifest;
    manifest["benchmark_fingerprint"] = benchmark_fingerprint(bench);
    manifest["variants"] = statuses;
    write_text(fs::path(out_dir) / "ablate_manifest.json", manifest.dump(2) + "\n");
  }
  return reports;
}

}  // namespace pal
