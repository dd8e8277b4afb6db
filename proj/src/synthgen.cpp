#include "pal/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Dense>

namespace pal {

namespace {

Eigen::MatrixXd to_matrix(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if (static_cast<Eigen::Index>(rows[r].size()) != m.cols()) {
      throw ConfigError("mixing: ragged rows");
    }
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rows[r][c];
  }
  return m;
}

// Random orthonormal F x L matrix (QR of a gaussian draw, deterministic sign).
std::vector<std::vector<double>> orthonormal_mixing(int f, int l, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd a(f, l);
  for (int r = 0; r < f; ++r)
    for (int c = 0; c < l; ++c) a(r, c) = gauss(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(f, l);
  for (int c = 0; c < l; ++c) {
    int arg = 0;
    for (int r = 1; r < f; ++r)
      if (std::abs(q(r, c)) > std::abs(q(arg, c))) arg = r;
    if (q(arg, c) < 0) q.col(c) = -q.col(c);
  }
  std::vector<std::vector<double>> out(f, std::vector<double>(l));
  for (int r = 0; r < f; ++r)
    for (int c = 0; c < l; ++c) out[r][c] = q(r, c);
  return out;
}

std::vector<double> apply_style(const StyleMapParams& style, const std::vector<double>& latent) {
  const std::size_t f = style.scale.size();
  std::vector<double> out(f, 0.0);
  for (std::size_t r = 0; r < f; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < latent.size(); ++c) acc += style.mixing[r][c] * latent[c];
    out[r] = style.scale[r] * acc + style.offset[r];
  }
  return out;
}

struct Moments {
  std::vector<double> mean;
  std::vector<double> stddev;
};

Moments dataset_moments(const Dataset& d) {
  const int f = d.feature_dim();
  Moments m;
  m.mean.assign(f, 0.0);
  m.stddev.assign(f, 0.0);
  const double n = static_cast<double>(d.size());
  for (const Sample& s : d.samples)
    for (int i = 0; i < f; ++i) m.mean[i] += s.raw_features[i];
  for (int i = 0; i < f; ++i) m.mean[i] /= n;
  for (const Sample& s : d.samples)
    for (int i = 0; i < f; ++i) {
      const double dv = s.raw_features[i] - m.mean[i];
      m.stddev[i] += dv * dv;
    }
  for (int i = 0; i < f; ++i) m.stddev[i] = std::sqrt(m.stddev[i] / n);
  return m;
}

}  // namespace

void StyleMapParams::validate(int feature_dim, int latent_dim, const char* field) const {
  const std::string name(field);
  if (static_cast<int>(scale.size()) != feature_dim)
    throw ConfigError(name + ".scale: expected " + std::to_string(feature_dim) + " entries");
  if (static_cast<int>(offset.size()) != feature_dim)
    throw ConfigError(name + ".offset: expected " + std::to_string(feature_dim) + " entries");
  if (static_cast<int>(mixing.size()) != feature_dim)
    throw ConfigError(name + ".mixing: expected " + std::to_string(feature_dim) + " rows");
  for (const auto& row : mixing)
    if (static_cast<int>(row.size()) != latent_dim)
      throw ConfigError(name + ".mixing: expected " + std::to_string(latent_dim) + " columns");
  for (double s : scale)
    if (!std::isfinite(s)) throw ConfigError(name + ".scale: non-finite entry");
  Eigen::MatrixXd m = to_matrix(mixing);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
  if (qr.rank() < latent_dim)
    throw ConfigError(name + ".mixing: not full column rank");
}

void BenchmarkConfig::validate() const {
  if (n_identities < 1) throw ConfigError("benchmark.n_identities: must be >= 1");
  if (samples_per_identity_source < 1)
    throw ConfigError("benchmark.samples_per_identity_source: must be >= 1");
  if (samples_per_identity_target < 2)
    throw ConfigError("benchmark.samples_per_identity_target: must be >= 2 to split query/gallery");
  if (n_cameras < 2)
    throw ConfigError("benchmark.n_cameras: must be >= 2 for cross-camera evaluation");
  if (latent_dim < 1) throw ConfigError("benchmark.latent_dim: must be >= 1");
  if (feature_dim < 1) throw ConfigError("benchmark.feature_dim: must be >= 1");
  if (feature_dim < latent_dim)
    throw ConfigError("benchmark.feature_dim: must be >= latent_dim");
  if (!(intra_identity_noise_sigma > 0))
    throw ConfigError("benchmark.intra_identity_noise_sigma: must be > 0");
  if (!(query_fraction > 0.0 && query_fraction < 1.0))
    throw ConfigError("benchmark.query_fraction: must be in (0,1)");
  if (source_style) source_style->validate(feature_dim, latent_dim, "benchmark.source_style");
  if (target_style) target_style->validate(feature_dim, latent_dim, "benchmark.target_style");
}

int query_count_per_identity(const BenchmarkConfig& cfg) {
  int q = static_cast<int>(std::lround(cfg.query_fraction * cfg.samples_per_identity_target));
  q = std::max(1, std::min(q, cfg.samples_per_identity_target - 1));
  return q;
}

Benchmark generate_benchmark(const BenchmarkConfig& cfg) {
  cfg.validate();
  Benchmark b;
  b.config = cfg;
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // Materialize styles. Defaults share one mixing so the domain shift is a
  // pure per-dimension affine, which the transfer stage can cancel exactly.
  const int f = cfg.feature_dim;
  const int l = cfg.latent_dim;
  std::vector<std::vector<double>> shared_mixing = orthonormal_mixing(f, l, rng);
  if (cfg.source_style) {
    b.source_style = *cfg.source_style;
  } else {
    b.source_style.scale.assign(f, 1.0);
    b.source_style.offset.assign(f, 0.0);
    b.source_style.mixing = shared_mixing;
  }
  if (cfg.target_style) {
    b.target_style = *cfg.target_style;
  } else {
    b.target_style.scale.resize(f);
    b.target_style.offset.resize(f);
    for (int i = 0; i < f; ++i) {
      // Mixed-sign scales: the per-dimension moment match recovers the
      // magnitude but not the orientation, so source-trained models face a
      // genuine residual shift while magnitudes stay in a trainable range.
      const double flip = unit(rng) < 0.5 ? -1.0 : 1.0;
      b.target_style.scale[i] = flip * (1.2 + 0.8 * unit(rng));
      const double sign = unit(rng) < 0.5 ? -1.0 : 1.0;
      b.target_style.offset[i] = sign * (1.5 + 1.5 * unit(rng));
    }
    b.target_style.mixing = shared_mixing;
  }
  b.source_style.validate(f, l, "benchmark.source_style");
  b.target_style.validate(f, l, "benchmark.target_style");

  // Identity latent centers, source ids then target ids, disjoint ranges.
  auto draw_center = [&] {
    std::vector<double> c(l);
    for (double& v : c) v = gauss(rng);
    return c;
  };
  for (int i = 0; i < cfg.n_identities; ++i)
    b.source_identities.push_back({i, draw_center()});
  for (int i = 0; i < cfg.n_identities; ++i)
    b.target_identities.push_back({cfg.n_identities + i, draw_center()});

  std::uniform_int_distribution<int> camera(0, cfg.n_cameras - 1);
  std::int64_t next_id = 0;

  b.source_train.role = Role::SourceTrain;
  for (int i = 0; i < cfg.n_identities; ++i) {
    const auto& spec = b.source_identities[i];
    for (int s = 0; s < cfg.samples_per_identity_source; ++s) {
      std::vector<double> latent = spec.latent_center;
      for (double& v : latent) v += cfg.intra_identity_noise_sigma * gauss(rng);
      Sample sample;
      sample.sample_id = next_id++;
      sample.raw_features = apply_style(b.source_style, latent);
      sample.identity_id = spec.identity_id;
      sample.camera_id = camera(rng);
      sample.domain = Domain::Source;
      sample.label = i;
      b.source_train.samples.push_back(std::move(sample));
    }
  }

  // Target samples, then a per-identity query/gallery split.
  b.query.role = Role::Query;
  b.gallery.role = Role::Gallery;
  const int q_per_id = query_count_per_identity(cfg);
  for (int i = 0; i < cfg.n_identities; ++i) {
    const auto& spec = b.target_identities[i];
    std::vector<Sample> group;
    for (int s = 0; s < cfg.samples_per_identity_target; ++s) {
      std::vector<double> latent = spec.latent_center;
      for (double& v : latent) v += cfg.intra_identity_noise_sigma * gauss(rng);
      Sample sample;
      sample.sample_id = next_id++;
      sample.raw_features = apply_style(b.target_style, latent);
      sample.identity_id = spec.identity_id;
      sample.camera_id = camera(rng);
      sample.domain = Domain::Target;
      group.push_back(std::move(sample));
    }
    std::shuffle(group.begin(), group.end(), rng);
    for (int s = 0; s < static_cast<int>(group.size()); ++s) {
      b.ground_truth[group[s].sample_id] = spec.identity_id;
      if (s < q_per_id)
        b.query.samples.push_back(group[s]);
      else
        b.gallery.samples.push_back(group[s]);
    }
  }

  // Repair pass: every query identity must have a gallery entry under some
  // other camera.
  for (const Sample& q : b.query.samples) {
    bool ok = false;
    Sample* fallback = nullptr;
    for (Sample& g : b.gallery.samples) {
      if (g.identity_id != q.identity_id) continue;
      if (!fallback || g.sample_id < fallback->sample_id) fallback = &g;
      if (g.camera_id != q.camera_id) {
        ok = true;
        break;
      }
    }
    if (!ok && fallback)
      fallback->camera_id = (q.camera_id + 1) % cfg.n_cameras;
  }

  auto by_id = [](const Sample& a, const Sample& c) { return a.sample_id < c.sample_id; };
  std::sort(b.query.samples.begin(), b.query.samples.end(), by_id);
  std::sort(b.gallery.samples.begin(), b.gallery.samples.end(), by_id);

  // Unlabeled training view: the gallery samples with identities scrubbed.
  b.target_train.role = Role::TargetTrain;
  for (const Sample& g : b.gallery.samples) {
    Sample t = g;
    t.identity_id = -1;
    t.label.reset();
    b.target_train.samples.push_back(std::move(t));
  }
  return b;
}

double domain_gap(const Dataset& a, const Dataset& b) {
  if (a.empty() || b.empty()) throw ContractViolation("domain_gap: empty dataset");
  if (a.feature_dim() != b.feature_dim())
    throw DimensionError("domain_gap: feature dims differ (" +
                         std::to_string(a.feature_dim()) + " vs " +
                         std::to_string(b.feature_dim()) + ")");
  const Moments ma = dataset_moments(a);
  const Moments mb = dataset_moments(b);
  double mean_term = 0.0, std_term = 0.0;
  for (std::size_t i = 0; i < ma.mean.size(); ++i) {
    mean_term += (ma.mean[i] - mb.mean[i]) * (ma.mean[i] - mb.mean[i]);
    std_term += (ma.stddev[i] - mb.stddev[i]) * (ma.stddev[i] - mb.stddev[i]);
  }
  return std::sqrt(mean_term) + std::sqrt(std_term);
}

std::uint64_t benchmark_fingerprint(const Benchmark& b) {
  std::uint64_t h = fnv1a64(dataset_to_csv(b.source_train));
  h = fnv1a64(dataset_to_csv(b.target_train), h);
  h = fnv1a64(dataset_to_csv(b.query), h);
  h = fnv1a64(dataset_to_csv(b.gallery), h);
  return h;
}

}  // namespace pal
