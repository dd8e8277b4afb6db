#include "pal/transfer.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

namespace pal {

std::vector<double> StyleTransform::apply(const std::vector<double>& x) const {
  if (x.size() != scale.size())
    throw DimensionError("StyleTransform: input dim " + std::to_string(x.size()) +
                         ", expected " + std::to_string(scale.size()));
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = scale[i] * x[i] + offset[i];
  return out;
}

StyleTransform StyleTransform::invert() const {
  StyleTransform inv;
  inv.scale.resize(scale.size());
  inv.offset.resize(scale.size());
  for (std::size_t i = 0; i < scale.size(); ++i) {
    inv.scale[i] = 1.0 / scale[i];
    inv.offset[i] = -offset[i] / scale[i];
  }
  return inv;
}

nlohmann::json StyleTransform::to_json() const {
  return nlohmann::json{{"scale", scale}, {"offset", offset}};
}

StyleTransform StyleTransform::from_json(const nlohmann::json& j) {
  StyleTransform t;
  t.scale = j.at("scale").get<std::vector<double>>();
  t.offset = j.at("offset").get<std::vector<double>>();
  if (t.scale.size() != t.offset.size())
    throw ConfigError("StyleTransform: scale/offset length mismatch");
  return t;
}

StyleTransform StyleTransform::identity(int dim) {
  StyleTransform t;
  t.scale.assign(dim, 1.0);
  t.offset.assign(dim, 0.0);
  return t;
}

namespace {

struct MomentPair {
  std::vector<double> mean;
  std::vector<double> stddev;
};

MomentPair moments(const Dataset& d) {
  const int f = d.feature_dim();
  MomentPair m;
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

StyleTransform fit_transfer(const Dataset& source, const Dataset& target) {
  if (source.empty() || target.empty())
    throw ContractViolation("fit_transfer: empty dataset");
  if (source.feature_dim() != target.feature_dim())
    throw DimensionError("fit_transfer: feature dims differ (" +
                         std::to_string(source.feature_dim()) + " vs " +
                         std::to_string(target.feature_dim()) + ")");
  const MomentPair ms = moments(source);
  const MomentPair mt = moments(target);
  StyleTransform t;
  const int f = source.feature_dim();
  t.scale.resize(f);
  t.offset.resize(f);
  for (int i = 0; i < f; ++i) {
    if (ms.stddev[i] == 0.0)
      throw DegenerateDimensionError(
          "fit_transfer: source feature dimension " + std::to_string(i) +
              " has zero standard deviation",
          i);
    if (mt.stddev[i] == 0.0)
      throw DegenerateDimensionError(
          "fit_transfer: target feature dimension " + std::to_string(i) +
              " has zero standard deviation",
          i);
    t.scale[i] = mt.stddev[i] / ms.stddev[i];
    t.offset[i] = mt.mean[i] - t.scale[i] * ms.mean[i];
  }
  return t;
}

PseudoTargetSet transfer_dataset(const Dataset& source, const StyleTransform& t) {
  if (source.feature_dim() != static_cast<int>(t.scale.size()))
    throw DimensionError("transfer_dataset: feature dims differ");
  PseudoTargetSet out;
  out.samples.reserve(source.size());
  for (const Sample& s : source.samples) {
    if (!s.label)
      throw ContractViolation("transfer_dataset: source sample " +
                              std::to_string(s.sample_id) + " has no label");
    Sample p = s;
    p.raw_features = t.apply(s.raw_features);
    p.domain = Domain::PseudoTarget;
    out.samples.push_back(std::move(p));
  }
  return out;
}

double identity_content_loss(const StyleTransform& g, const StyleTransform& f,
                             const std::vector<std::vector<double>>& x_batch,
                             const std::vector<std::vector<double>>& y_batch) {
  if (x_batch.empty() || y_batch.empty())
    throw ContractViolation("identity_content_loss: empty batch");
  auto mean_l1_residual = [](const StyleTransform& t,
                             const std::vector<std::vector<double>>& batch) {
    double acc = 0.0;
    for (const auto& v : batch) {
      const auto mapped = t.apply(v);
      for (std::size_t i = 0; i < v.size(); ++i) acc += std::abs(mapped[i] - v[i]);
    }
    return acc / static_cast<double>(batch.size());
  };
  return mean_l1_residual(f, y_batch) + mean_l1_residual(g, x_batch);
}

}  // namespace pal
