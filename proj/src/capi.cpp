#include "pal.h"

#include <cstring>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "pal/config.hpp"
#include "pal/pipeline.hpp"

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

pal_status fail(pal_status code, const std::string& msg) {
  set_error(msg);
  return code;
}

// Maps engine exceptions onto status codes; the CLI reuses these as exit
// codes for 0/2/3.
template <typename Fn>
pal_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return PAL_OK;
  } catch (const pal::ConfigError& e) {
    return fail(PAL_ERR_CONFIG, e.what());
  } catch (const pal::EmptyClusteringError& e) {
    return fail(PAL_ERR_PIPELINE, e.what());
  } catch (const pal::IoError& e) {
    return fail(PAL_ERR_IO, e.what());
  } catch (const pal::ContractViolation& e) {
    return fail(PAL_ERR_INVALID_ARG, e.what());
  } catch (const pal::DimensionError& e) {
    return fail(PAL_ERR_INVALID_ARG, e.what());
  } catch (const std::exception& e) {
    return fail(PAL_ERR_INTERNAL, e.what());
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

struct pal_config {
  nlohmann::json doc;
};

struct pal_report {
  pal::PipelineReport report;
};

extern "C" {

const char* pal_version(void) { return "1.0.0"; }

const char* pal_last_error(void) { return g_last_error.c_str(); }

pal_status pal_config_default(pal_config** out) {
  if (!out) return fail(PAL_ERR_INVALID_ARG, "pal_config_default: out is NULL");
  return guarded([&] {
    *out = new pal_config{pal::pipeline_config_to_json(pal::PipelineConfig{})};
  });
}

pal_status pal_config_load(const char* path, pal_config** out) {
  if (!path || !out) return fail(PAL_ERR_INVALID_ARG, "pal_config_load: NULL argument");
  return guarded([&] {
    std::error_code ec;
    if (!std::filesystem::exists(path, ec))
      throw pal::ConfigError(std::string("config: file not found: ") + path);
    *out = new pal_config{pal::read_json_file(path)};
  });
}

pal_status pal_config_parse(const char* json_text, pal_config** out) {
  if (!json_text || !out)
    return fail(PAL_ERR_INVALID_ARG, "pal_config_parse: NULL argument");
  return guarded([&] {
    nlohmann::json j = nlohmann::json::parse(json_text, nullptr, false);
    if (j.is_discarded()) throw pal::ConfigError("config: not valid JSON");
    *out = new pal_config{std::move(j)};
  });
}

pal_status pal_config_set(pal_config* cfg, const char* dotted_key, const char* value) {
  if (!cfg || !dotted_key || !value)
    return fail(PAL_ERR_INVALID_ARG, "pal_config_set: NULL argument");
  return guarded([&] { pal::apply_override(cfg->doc, dotted_key, value); });
}

pal_status pal_config_to_json(const pal_config* cfg, char** json_out) {
  if (!cfg || !json_out)
    return fail(PAL_ERR_INVALID_ARG, "pal_config_to_json: NULL argument");
  return guarded([&] { *json_out = dup_string(cfg->doc.dump(2)); });
}

void pal_config_free(pal_config* cfg) { delete cfg; }

pal_status pal_generate(const pal_config* cfg, const char* out_dir) {
  if (!cfg || !out_dir) return fail(PAL_ERR_INVALID_ARG, "pal_generate: NULL argument");
  return guarded([&] {
    // Accept either a full pipeline config or a bare benchmark config.
    pal::BenchmarkConfig bc =
        cfg->doc.contains("benchmark")
            ? pal::benchmark_config_from_json(cfg->doc.at("benchmark"))
            : pal::benchmark_config_from_json(cfg->doc);
    bc.validate();
    pal::write_benchmark_files(pal::generate_benchmark(bc), out_dir);
  });
}

pal_status pal_run(const pal_config* cfg, const char* out_dir, pal_report** report_out) {
  if (!cfg) return fail(PAL_ERR_INVALID_ARG, "pal_run: cfg is NULL");
  if (report_out) *report_out = nullptr;
  return guarded([&] {
    const pal::PipelineConfig pc = pal::pipeline_config_from_json(cfg->doc);
    pc.validate();
    pal::RunHooks hooks;
    if (out_dir) {
      std::filesystem::create_directories(out_dir);
      hooks.dump_dir = out_dir;
    }
    pal::PipelineReport rep = pal::run_pipeline(pc, hooks);
    if (out_dir) pal::write_report_files(rep, out_dir);
    const bool aborted = rep.aborted;
    const std::string reason = rep.abort_reason;
    if (report_out) *report_out = new pal_report{std::move(rep)};
    if (aborted) throw pal::EmptyClusteringError("run aborted: " + reason);
  });
}

pal_status pal_ablate(const pal_config* cfg, const char* out_dir) {
  if (!cfg || !out_dir) return fail(PAL_ERR_INVALID_ARG, "pal_ablate: NULL argument");
  return guarded([&] {
    const pal::PipelineConfig pc = pal::pipeline_config_from_json(cfg->doc);
    pc.validate();
    pal::run_ablation(pc, out_dir);
  });
}

pal_status pal_report_load(const char* path, pal_report** out) {
  if (!path || !out) return fail(PAL_ERR_INVALID_ARG, "pal_report_load: NULL argument");
  return guarded([&] {
    *out = new pal_report{pal::PipelineReport::from_json(pal::read_json_file(path))};
  });
}

pal_status pal_report_to_json(const pal_report* rep, char** json_out) {
  if (!rep || !json_out)
    return fail(PAL_ERR_INVALID_ARG, "pal_report_to_json: NULL argument");
  return guarded([&] { *json_out = dup_string(rep->report.to_json().dump(2)); });
}

int pal_report_iteration_count(const pal_report* rep) {
  return rep ? static_cast<int>(rep->report.iterations.size()) : 0;
}

double pal_report_final_map(const pal_report* rep) {
  if (!rep || rep->report.iterations.empty()) return -1.0;
  return rep->report.final_eval().map;
}

int pal_report_aborted(const pal_report* rep) {
  return rep && rep->report.aborted ? 1 : 0;
}

void pal_report_free(pal_report* rep) { delete rep; }

void pal_string_free(char* s) { std::free(s); }

}  // extern "C"
