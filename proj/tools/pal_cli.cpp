// Command-line front end. Everything goes through the C API in pal.h; this
// translation unit never touches the engine's C++ types.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pal.h"

namespace {

struct ConfigDeleter {
  void operator()(pal_config* c) const { pal_config_free(c); }
};
struct ReportDeleter {
  void operator()(pal_report* r) const { pal_report_free(r); }
};
using ConfigPtr = std::unique_ptr<pal_config, ConfigDeleter>;
using ReportPtr = std::unique_ptr<pal_report, ReportDeleter>;

// Shortest round-trip form, matching the engine's CSV number formatting.
std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

int exit_code(pal_status status) {
  switch (status) {
    case PAL_OK: return 0;
    case PAL_ERR_CONFIG: return 2;
    case PAL_ERR_PIPELINE: return 3;
    default: return 1;
  }
}

int report_failure(pal_status status) {
  std::fprintf(stderr, "error: %s\n", pal_last_error());
  return exit_code(status);
}

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::string variant;
  std::vector<std::string> overrides;
  long long seed = -1;
  bool dump_weights = false;
  bool dump_clusters = false;
};

// Loads the config (or defaults), then applies --seed, --variant, dump flags
// and --set overrides in that order, so --set wins.
int build_config(const CommonOpts& opts, ConfigPtr& out) {
  pal_config* raw = nullptr;
  pal_status st = opts.config_path.empty() ? pal_config_default(&raw)
                                           : pal_config_load(opts.config_path.c_str(), &raw);
  if (st != PAL_OK) return report_failure(st);
  out.reset(raw);

  auto set = [&](const char* key, const std::string& value) -> int {
    const pal_status s = pal_config_set(out.get(), key, value.c_str());
    return s == PAL_OK ? 0 : report_failure(s);
  };
  if (opts.seed >= 0) {
    const std::string seed = std::to_string(opts.seed);
    if (int rc = set("benchmark.seed", seed)) return rc;
    if (int rc = set("train.seed", seed)) return rc;
  }
  if (!opts.variant.empty())
    if (int rc = set("variant", "\"" + opts.variant + "\"")) return rc;
  if (opts.dump_weights)
    if (int rc = set("dump_weights", "true")) return rc;
  if (opts.dump_clusters)
    if (int rc = set("dump_clusters", "true")) return rc;
  for (const std::string& kv : opts.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      std::fprintf(stderr, "error: --set expects key=value, got '%s'\n", kv.c_str());
      return 2;
    }
    if (int rc = set(kv.substr(0, eq).c_str(), kv.substr(eq + 1))) return rc;
  }
  return 0;
}

int cmd_generate(const CommonOpts& opts) {
  ConfigPtr cfg;
  if (int rc = build_config(opts, cfg)) return rc;
  const pal_status st = pal_generate(cfg.get(), opts.out_dir.c_str());
  if (st != PAL_OK) return report_failure(st);
  std::printf("wrote benchmark snapshot to %s\n", opts.out_dir.c_str());
  return 0;
}

int cmd_run(const CommonOpts& opts) {
  ConfigPtr cfg;
  if (int rc = build_config(opts, cfg)) return rc;
  pal_report* raw = nullptr;
  const pal_status st = pal_run(cfg.get(), opts.out_dir.c_str(), &raw);
  ReportPtr report(raw);
  if (st != PAL_OK) return report_failure(st);
  std::printf("completed %d iterations, final mAP %.4f; reports in %s\n",
              pal_report_iteration_count(report.get()),
              pal_report_final_map(report.get()), opts.out_dir.c_str());
  return 0;
}

int cmd_ablate(const CommonOpts& opts) {
  ConfigPtr cfg;
  if (int rc = build_config(opts, cfg)) return rc;
  const pal_status st = pal_ablate(cfg.get(), opts.out_dir.c_str());
  if (st != PAL_OK) return report_failure(st);
  std::printf("wrote ablation outputs to %s\n", opts.out_dir.c_str());
  return 0;
}

int cmd_report(const std::string& report_path, const std::string& out_dir) {
  pal_report* raw = nullptr;
  pal_status st = pal_report_load(report_path.c_str(), &raw);
  if (st != PAL_OK) return report_failure(st);
  ReportPtr report(raw);

  char* json_text = nullptr;
  st = pal_report_to_json(report.get(), &json_text);
  if (st != PAL_OK) return report_failure(st);
  const nlohmann::json j = nlohmann::json::parse(json_text);
  pal_string_free(json_text);

  std::printf("variant: %s\n", j.at("variant").get<std::string>().c_str());
  std::printf("%-9s %-6s %-9s %-8s %-8s %-8s\n", "iteration", "K", "selected",
              "mAP", "rank1", "rank5");
  for (const auto& it : j.at("iterations")) {
    const auto& eval = it.at("eval");
    const auto& curve = eval.at("cmc");
    const double rank1 = curve.empty() ? 0.0 : curve.front().get<double>();
    const double rank5 = curve.empty()
                             ? 0.0
                             : curve.at(std::min<std::size_t>(4, curve.size() - 1)).get<double>();
    std::printf("%-9d %-6d %-9d %-8.4f %-8.4f %-8.4f\n",
                it.at("iteration").get<int>(), it.at("k_clusters").get<int>(),
                it.at("selected").get<int>(), eval.at("map").get<double>(), rank1,
                rank5);
  }
  if (j.at("aborted").get<bool>())
    std::printf("aborted: %s\n", j.at("abort_reason").get<std::string>().c_str());
  if (!out_dir.empty()) {
    // Regenerate the CSV summary from the loaded JSON.
    std::string csv = "iteration,variant,K,selected,map,rank1,rank5\n";
    const std::string variant = j.at("variant").get<std::string>();
    for (const auto& it : j.at("iterations")) {
      const auto& eval = it.at("eval");
      const auto& curve = eval.at("cmc");
      const double rank1 = curve.empty() ? 0.0 : curve.front().get<double>();
      const double rank5 =
          curve.empty() ? 0.0
                        : curve.at(std::min<std::size_t>(4, curve.size() - 1)).get<double>();
      csv += std::to_string(it.at("iteration").get<int>()) + "," + variant + "," +
             std::to_string(it.at("k_clusters").get<int>()) + "," +
             std::to_string(it.at("selected").get<int>()) + "," +
             format_double(eval.at("map").get<double>()) + "," +
             format_double(rank1) + "," + format_double(rank5) + "\n";
    }
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    std::ofstream out(std::filesystem::path(out_dir) / "report.csv", std::ios::binary);
    if (!out) {
      std::fprintf(stderr, "error: cannot write to %s\n", out_dir.c_str());
      return 1;
    }
    out << csv;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Progressive adaptation benchmark driver"};
  app.require_subcommand(1);

  CommonOpts gen_opts, run_opts, ablate_opts;
  std::string report_path, report_out;

  auto add_common = [](CLI::App* cmd, CommonOpts& opts, bool config_required) {
    auto* copt = cmd->add_option("--config", opts.config_path, "Config JSON path");
    if (config_required) copt->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", opts.out_dir, "Output directory")->required();
    cmd->add_option("--set", opts.overrides, "Override, dotted key=value (repeatable)");
    cmd->add_option("--seed", opts.seed, "Override benchmark and train seeds");
  };

  CLI::App* gen = app.add_subcommand("generate", "Write a benchmark snapshot");
  add_common(gen, gen_opts, false);

  CLI::App* run = app.add_subcommand("run", "Run one pipeline variant");
  add_common(run, run_opts, true);
  run->add_option("--variant", run_opts.variant, "PAL, BS, CEL, OIMG or DirectTransfer");
  run->add_flag("--dump-weights", run_opts.dump_weights, "Dump per-iteration weight tables");
  run->add_flag("--dump-clusters", run_opts.dump_clusters, "Dump per-iteration cluster tables");

  CLI::App* ablate = app.add_subcommand("ablate", "Run all variants on one benchmark");
  add_common(ablate, ablate_opts, true);

  CLI::App* report = app.add_subcommand("report", "Print a stored report");
  report->add_option("--config", report_path, "report.json path")
      ->required()
      ->check(CLI::ExistingFile);
  report->add_option("--out", report_out, "Directory for regenerated CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  if (gen->parsed()) return cmd_generate(gen_opts);
  if (run->parsed()) return cmd_run(run_opts);
  if (ablate->parsed()) return cmd_ablate(ablate_opts);
  if (report->parsed()) return cmd_report(report_path, report_out);
  return 2;
}
