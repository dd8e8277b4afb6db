#include "pal/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace pal {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& j, const std::set<std::string>& known,
                         const std::string& scope) {
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key))
      throw ConfigError(scope.empty() ? key + ": unknown key"
                                      : scope + "." + key + ": unknown key");
  }
}

template <typename T>
void read_field(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string(key) + ": wrong type");
  }
}

json style_to_json(const StyleMapParams& s) {
  return json{{"scale", s.scale}, {"offset", s.offset}, {"mixing", s.mixing}};
}

StyleMapParams style_from_json(const json& j, const std::string& scope) {
  reject_unknown_keys(j, {"scale", "offset", "mixing"}, scope);
  StyleMapParams s;
  read_field(j, "scale", s.scale);
  read_field(j, "offset", s.offset);
  read_field(j, "mixing", s.mixing);
  return s;
}

}  // namespace

json benchmark_config_to_json(const BenchmarkConfig& cfg) {
  json j;
  j["n_identities"] = cfg.n_identities;
  j["samples_per_identity_source"] = cfg.samples_per_identity_source;
  j["samples_per_identity_target"] = cfg.samples_per_identity_target;
  j["n_cameras"] = cfg.n_cameras;
  j["latent_dim"] = cfg.latent_dim;
  j["feature_dim"] = cfg.feature_dim;
  j["intra_identity_noise_sigma"] = cfg.intra_identity_noise_sigma;
  j["query_fraction"] = cfg.query_fraction;
  j["seed"] = cfg.seed;
  if (cfg.source_style) j["source_style"] = style_to_json(*cfg.source_style);
  if (cfg.target_style) j["target_style"] = style_to_json(*cfg.target_style);
  return j;
}

BenchmarkConfig benchmark_config_from_json(const json& j) {
  reject_unknown_keys(j,
                      {"n_identities", "samples_per_identity_source",
                       "samples_per_identity_target", "n_cameras", "latent_dim",
                       "feature_dim", "intra_identity_noise_sigma",
                       "query_fraction", "seed", "source_style", "target_style"},
                      "benchmark");
  BenchmarkConfig cfg;
  read_field(j, "n_identities", cfg.n_identities);
  read_field(j, "samples_per_identity_source", cfg.samples_per_identity_source);
  read_field(j, "samples_per_identity_target", cfg.samples_per_identity_target);
  read_field(j, "n_cameras", cfg.n_cameras);
  read_field(j, "latent_dim", cfg.latent_dim);
  read_field(j, "feature_dim", cfg.feature_dim);
  read_field(j, "intra_identity_noise_sigma", cfg.intra_identity_noise_sigma);
  read_field(j, "query_fraction", cfg.query_fraction);
  read_field(j, "seed", cfg.seed);
  if (j.contains("source_style"))
    cfg.source_style = style_from_json(j.at("source_style"), "benchmark.source_style");
  if (j.contains("target_style"))
    cfg.target_style = style_from_json(j.at("target_style"), "benchmark.target_style");
  return cfg;
}

json pipeline_config_to_json(const PipelineConfig& cfg) {
  json j;
  j["iterations"] = cfg.iterations;
  j["variant"] = to_string(cfg.variant);
  j["hidden_dims"] = cfg.hidden_dims;
  j["embed_dim"] = cfg.embed_dim;
  j["max_pseudo_target"] = cfg.max_pseudo_target;
  j["cross_camera_exclusion"] = cfg.cross_camera_exclusion;
  j["cmc_max_rank"] = cfg.cmc_max_rank;
  j["dump_weights"] = cfg.dump_weights;
  j["dump_clusters"] = cfg.dump_clusters;
  j["wls"] = {{"top_m", cfg.wls.top_m},
              {"sigma", cfg.wls.sigma},
              {"normalization", cfg.wls.normalization == WeightNormalization::Normalize
                                    ? "Normalize"
                                    : "RawPaper"}};
  if (cfg.wls.absolute_theta) j["wls"]["absolute_theta"] = *cfg.wls.absolute_theta;
  j["cluster"] = {
      {"reduce_dim", cfg.cluster.reduce_dim},
      {"knn_k", cfg.cluster.knn_k},
      {"radius_statistic",
       cfg.cluster.radius_statistic == RadiusStatistic::Mean ? "Mean" : "Quantile"},
      {"radius_quantile", cfg.cluster.radius_quantile},
      {"min_pts", cfg.cluster.min_pts},
      {"gamma_mode", cfg.cluster.gamma_mode == GammaMode::Absolute
                         ? "Absolute"
                         : "WithinClusterQuantile"},
      {"gamma", cfg.cluster.gamma},
      {"gamma_quantile", cfg.cluster.gamma_quantile},
      {"gamma_quantile_growth", cfg.cluster.gamma_quantile_growth},
      {"gamma_quantile_max", cfg.cluster.gamma_quantile_max}};
  j["train"] = {{"learning_rate", cfg.train.learning_rate},
                {"epochs_per_iteration", cfg.train.epochs_per_iteration},
                {"batch_size", cfg.train.batch_size},
                {"weight_decay", cfg.train.weight_decay},
                {"seed", cfg.train.seed}};
  j["benchmark"] = benchmark_config_to_json(cfg.benchmark);
  return j;
}

PipelineConfig pipeline_config_from_json(const json& j) {
  reject_unknown_keys(j,
                      {"iterations", "variant", "hidden_dims", "embed_dim",
                       "max_pseudo_target", "cross_camera_exclusion", "cmc_max_rank",
                       "dump_weights", "dump_clusters", "wls", "cluster", "train",
                       "benchmark"},
                      "");
  PipelineConfig cfg;
  read_field(j, "iterations", cfg.iterations);
  if (j.contains("variant"))
    cfg.variant = variant_from_string(j.at("variant").get<std::string>());
  read_field(j, "hidden_dims", cfg.hidden_dims);
  read_field(j, "embed_dim", cfg.embed_dim);
  read_field(j, "max_pseudo_target", cfg.max_pseudo_target);
  read_field(j, "cross_camera_exclusion", cfg.cross_camera_exclusion);
  read_field(j, "cmc_max_rank", cfg.cmc_max_rank);
  read_field(j, "dump_weights", cfg.dump_weights);
  read_field(j, "dump_clusters", cfg.dump_clusters);

  if (j.contains("wls")) {
    const json& w = j.at("wls");
    reject_unknown_keys(w, {"top_m", "sigma", "normalization", "absolute_theta"}, "wls");
    read_field(w, "top_m", cfg.wls.top_m);
    read_field(w, "sigma", cfg.wls.sigma);
    if (w.contains("normalization")) {
      const std::string mode = w.at("normalization").get<std::string>();
      if (mode == "Normalize")
        cfg.wls.normalization = WeightNormalization::Normalize;
      else if (mode == "RawPaper")
        cfg.wls.normalization = WeightNormalization::RawPaper;
      else
        throw ConfigError("wls.normalization: unknown value '" + mode + "'");
    }
    if (w.contains("absolute_theta"))
      cfg.wls.absolute_theta = w.at("absolute_theta").get<double>();
  }

  if (j.contains("cluster")) {
    const json& c = j.at("cluster");
    reject_unknown_keys(c,
                        {"reduce_dim", "knn_k", "radius_statistic", "radius_quantile",
                         "min_pts", "gamma_mode", "gamma", "gamma_quantile",
                         "gamma_quantile_growth", "gamma_quantile_max"},
                        "cluster");
    read_field(c, "reduce_dim", cfg.cluster.reduce_dim);
    read_field(c, "knn_k", cfg.cluster.knn_k);
    if (c.contains("radius_statistic")) {
      const std::string mode = c.at("radius_statistic").get<std::string>();
      if (mode == "Mean")
        cfg.cluster.radius_statistic = RadiusStatistic::Mean;
      else if (mode == "Quantile")
        cfg.cluster.radius_statistic = RadiusStatistic::Quantile;
      else
        throw ConfigError("cluster.radius_statistic: unknown value '" + mode + "'");
    }
    read_field(c, "radius_quantile", cfg.cluster.radius_quantile);
    read_field(c, "min_pts", cfg.cluster.min_pts);
    if (c.contains("gamma_mode")) {
      const std::string mode = c.at("gamma_mode").get<std::string>();
      if (mode == "Absolute")
        cfg.cluster.gamma_mode = GammaMode::Absolute;
      else if (mode == "WithinClusterQuantile")
        cfg.cluster.gamma_mode = GammaMode::WithinClusterQuantile;
      else
        throw ConfigError("cluster.gamma_mode: unknown value '" + mode + "'");
    }
    read_field(c, "gamma", cfg.cluster.gamma);
    read_field(c, "gamma_quantile", cfg.cluster.gamma_quantile);
    read_field(c, "gamma_quantile_growth", cfg.cluster.gamma_quantile_growth);
    read_field(c, "gamma_quantile_max", cfg.cluster.gamma_quantile_max);
  }

  if (j.contains("train")) {
    const json& t = j.at("train");
    reject_unknown_keys(t,
                        {"learning_rate", "epochs_per_iteration", "batch_size",
                         "weight_decay", "seed"},
                        "train");
    read_field(t, "learning_rate", cfg.train.learning_rate);
    read_field(t, "epochs_per_iteration", cfg.train.epochs_per_iteration);
    read_field(t, "batch_size", cfg.train.batch_size);
    read_field(t, "weight_decay", cfg.train.weight_decay);
    read_field(t, "seed", cfg.train.seed);
  }

  if (j.contains("benchmark"))
    cfg.benchmark = benchmark_config_from_json(j.at("benchmark"));
  return cfg;
}

std::string pipeline_config_to_text(const PipelineConfig& cfg) {
  return pipeline_config_to_json(cfg).dump(2);
}

PipelineConfig load_pipeline_config(const std::string& path) {
  return pipeline_config_from_json(read_json_file(path));
}

void apply_override(json& config, const std::string& dotted_key,
                    const std::string& value) {
  if (dotted_key.empty()) throw ConfigError("override: empty key");
  json* node = &config;
  std::stringstream ss(dotted_key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (parts[i].empty()) throw ConfigError("override: empty path segment in '" + dotted_key + "'");
    node = &(*node)[parts[i]];
  }
  json parsed = json::parse(value, nullptr, false);
  if (parsed.is_discarded()) parsed = value;  // plain string
  (*node)[parts.back()] = parsed;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError(path + ": not valid JSON");
  return j;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << text;
  if (!out) throw IoError("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace pal
