#include "pal/wls.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pal {

namespace {
constexpr double kLogFloor = 1e-12;

double safe_log(double p, WlsStats* stats) {
  if (p < kLogFloor) {
    if (stats) ++stats->clamped_log_args;
    p = kLogFloor;
  }
  return std::log(p);
}

int argmin_index(const DistanceVector& d) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(d.size()); ++i)
    if (d[i] < d[best]) best = i;
  return best;
}
}  // namespace

void WlsConfig::validate() const {
  if (top_m < 1) throw ConfigError("wls.top_m: must be >= 1");
  if (!(sigma >= 0.0 && sigma <= 1.0)) throw ConfigError("wls.sigma: must be in [0,1]");
  if (absolute_theta && !(*absolute_theta >= 0.0))
    throw ConfigError("wls.absolute_theta: must be >= 0");
}

DistanceVector compute_distances(const std::vector<double>& f_g,
                                 const std::vector<std::vector<double>>& centroids) {
  if (centroids.empty()) throw ContractViolation("compute_distances: no centroids");
  DistanceVector d(centroids.size());
  for (std::size_t k = 0; k < centroids.size(); ++k) {
    if (centroids[k].size() != f_g.size())
      throw DimensionError("compute_distances: centroid " + std::to_string(k) +
                           " dim " + std::to_string(centroids[k].size()) +
                           ", embedding dim " + std::to_string(f_g.size()));
    double acc = 0.0;
    for (std::size_t i = 0; i < f_g.size(); ++i) {
      const double dv = f_g[i] - centroids[k][i];
      acc += dv * dv;
    }
    d[k] = std::sqrt(acc);
  }
  return d;
}

AlphaVector compute_alpha(const DistanceVector& d) {
  if (d.empty()) throw ContractViolation("compute_alpha: empty distance vector");
  const int k = static_cast<int>(d.size());
  const double dmax = *std::max_element(d.begin(), d.end());

  AlphaVector out;
  out.alpha.assign(k, 0.0);
  if (dmax == 0.0) {
    out.degenerate = true;
    return out;
  }

  // Descending order, ties by ascending cluster index; psi is the 1-based
  // position in that order.
  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return d[a] > d[b]; });
  std::vector<int> psi(k, 0);
  for (int pos = 0; pos < k; ++pos) psi[order[pos]] = pos + 1;

  bool any_nonzero = false;
  for (int i = 0; i < k; ++i) {
    out.alpha[i] = (1.0 - d[i] / dmax) * static_cast<double>(psi[i]);
    if (out.alpha[i] != 0.0) any_nonzero = true;
  }
  out.degenerate = !any_nonzero;
  return out;
}

WeightRow compute_weights(const AlphaVector& alpha, const DistanceVector& d,
                          const WlsConfig& cfg) {
  cfg.validate();
  if (alpha.alpha.size() != d.size())
    throw DimensionError("compute_weights: alpha/distance length mismatch");
  const int k = static_cast<int>(d.size());
  WeightRow row;
  row.y = argmin_index(d);
  row.w.assign(k, 0.0);

  auto one_hot_fallback = [&] {
    std::fill(row.w.begin(), row.w.end(), 0.0);
    row.w[row.y] = 1.0;
  };
  if (alpha.degenerate) {
    one_hot_fallback();
    return row;
  }

  for (int i = 0; i < k; ++i) row.w[i] = alpha.alpha[i] / static_cast<double>(k);

  if (cfg.absolute_theta) {
    const double theta = *cfg.absolute_theta;
    for (int i = 0; i < k; ++i)
      if (row.w[i] < theta) row.w[i] = 0.0;
  } else {
    const int m = std::min(cfg.top_m, k);
    std::vector<int> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return row.w[a] > row.w[b]; });
    for (int pos = m; pos < k; ++pos) row.w[order[pos]] = 0.0;
  }

  const double sum = std::accumulate(row.w.begin(), row.w.end(), 0.0);
  if (sum <= 0.0) {
    // Filtering removed every weight (possible with a large absolute theta).
    one_hot_fallback();
    return row;
  }
  if (cfg.normalization == WeightNormalization::Normalize) {
    for (double& w : row.w) w /= sum;
  }
  return row;
}

double wls_loss(const std::vector<double>& w, const std::vector<double>& probs,
                WlsStats* stats) {
  if (w.size() != probs.size())
    throw DimensionError("wls_loss: weight/prob length mismatch (" +
                         std::to_string(w.size()) + " vs " +
                         std::to_string(probs.size()) + ")");
  double loss = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] == 0.0) continue;
    loss -= w[i] * safe_log(probs[i], stats);
  }
  return loss;
}

double combined_loss(const std::vector<double>& probs, int y,
                     const std::vector<double>* w, int lambda, double sigma,
                     WlsStats* stats) {
  if (lambda != 0 && lambda != 1)
    throw ContractViolation("combined_loss: lambda must be 0 or 1");
  if (y < 0 || y >= static_cast<int>(probs.size()))
    throw ContractViolation("combined_loss: label y out of range");
  if (lambda == 1 && w == nullptr)
    throw ContractViolation("combined_loss: lambda=1 sample without weights");
  double loss = -(1.0 - sigma) * safe_log(probs[y], stats);
  if (lambda == 1 && sigma != 0.0) loss += sigma * wls_loss(*w, probs, stats);
  return loss;
}

}  // namespace pal
