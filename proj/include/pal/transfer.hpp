#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "pal/dataset.hpp"

namespace pal {

// Per-dimension affine map between domains. Immutable once fitted.
struct StyleTransform {
  std::vector<double> scale;
  std::vector<double> offset;

  std::vector<double> apply(const std::vector<double>& x) const;
  StyleTransform invert() const;

  // {"scale": [...], "offset": [...]}
  nlohmann::json to_json() const;
  static StyleTransform from_json(const nlohmann::json& j);
  static StyleTransform identity(int dim);
};

// Moment-matching fit: transformed source matches the target's per-dimension
// empirical mean and std (population statistics). Throws
// DegenerateDimensionError when either side has a zero-std dimension.
StyleTransform fit_transfer(const Dataset& source, const Dataset& target);

struct PseudoTargetSet {
  std::vector<Sample> samples;
};

// Maps every source sample through t. Labels, identities, ids and cameras
// are preserved; domain is retagged PseudoTarget.
PseudoTargetSet transfer_dataset(const Dataset& source, const StyleTransform& t);

// Content loss over a transform pair: mean L1 residual of f over y_batch
// plus mean L1 residual of g over x_batch.
double identity_content_loss(const StyleTransform& g, const StyleTransform& f,
                             const std::vector<std::vector<double>>& x_batch,
                             const std::vector<std::vector<double>>& y_batch);

}  // namespace pal
