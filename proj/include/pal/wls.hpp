#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pal/common.hpp"

namespace pal {

enum class WeightNormalization { Normalize, RawPaper };

struct WlsConfig {
  // Number of largest weights kept per sample; the effective threshold is the
  // m-th largest weight.
  int top_m = 2;
  // Smoothing factor between cross-entropy and the weighted-smoothing term.
  double sigma = 0.5;
  WeightNormalization normalization = WeightNormalization::Normalize;
  // Alternative filtering: keep weights >= theta instead of the top-m rule.
  std::optional<double> absolute_theta;

  void validate() const;
};

struct WlsStats {
  std::int64_t clamped_log_args = 0;
};

// Per-cluster Euclidean distances of one embedding.
using DistanceVector = std::vector<double>;

DistanceVector compute_distances(const std::vector<double>& f_g,
                                 const std::vector<std::vector<double>>& centroids);

struct AlphaVector {
  std::vector<double> alpha;
  // All-zero alpha (every distance equal, or a single cluster). Callers fall
  // back to a one-hot weight on the nearest cluster.
  bool degenerate = false;
};

// alpha_k = (1 - d_k / max(d)) * psi(d_k), where psi is the 1-based position
// of d_k in the descending sort of d (ties ordered by ascending cluster
// index). The farthest cluster always gets alpha = 0.
AlphaVector compute_alpha(const DistanceVector& d);

struct WeightRow {
  std::vector<double> w;
  // Hard label: argmin-distance cluster (ties -> lowest index).
  int y = 0;
};

// w_raw = alpha / K, filtered to the top-m entries (or by absolute_theta),
// then normalized to sum 1 under Normalize. Degenerate alpha yields a one-hot
// row on the nearest cluster.
WeightRow compute_weights(const AlphaVector& alpha, const DistanceVector& d,
                          const WlsConfig& cfg);

// -sum_k w_k log p(k), natural log. Probabilities below 1e-12 are clamped;
// each clamp is counted in stats when provided.
double wls_loss(const std::vector<double>& w, const std::vector<double>& probs,
                WlsStats* stats = nullptr);

// Combined training loss:
//   -(1 - sigma) * log p(y) - sigma * lambda * sum_k w_k log p(k).
// lambda must be 0 or 1; lambda=1 requires w.
double combined_loss(const std::vector<double>& probs, int y,
                     const std::vector<double>* w, int lambda, double sigma,
                     WlsStats* stats = nullptr);

}  // namespace pal
