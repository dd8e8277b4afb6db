#include "pal/clusterer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>

namespace pal {

void ClusterConfig::validate() const {
  if (reduce_dim < 1) throw ConfigError("cluster.reduce_dim: must be >= 1");
  if (knn_k < 1) throw ConfigError("cluster.knn_k: must be >= 1");
  if (min_pts < 1) throw ConfigError("cluster.min_pts: must be >= 1");
  if (!(radius_quantile >= 0.0 && radius_quantile <= 1.0))
    throw ConfigError("cluster.radius_quantile: must be in [0,1]");
  if (gamma < 0.0) throw ConfigError("cluster.gamma: must be >= 0");
  if (!(gamma_quantile >= 0.0 && gamma_quantile <= 1.0))
    throw ConfigError("cluster.gamma_quantile: must be in [0,1]");
  if (gamma_quantile_growth < 0.0)
    throw ConfigError("cluster.gamma_quantile_growth: must be >= 0");
  if (!(gamma_quantile_max >= 0.0 && gamma_quantile_max <= 1.0))
    throw ConfigError("cluster.gamma_quantile_max: must be in [0,1]");
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw ContractViolation("quantile: empty sample");
  std::sort(values.begin(), values.end());
  if (values.size() == 1) return values.front();
  const double pos = q * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + (values[hi] - values[lo]) * frac;
}

Eigen::MatrixXd reduce_dim(const Eigen::MatrixXd& features, int d) {
  const Eigen::Index n = features.rows();
  const Eigen::Index e = features.cols();
  if (d > e)
    throw DimensionError("reduce_dim: d=" + std::to_string(d) +
                         " exceeds feature dim " + std::to_string(e));
  if (d < 1) throw ConfigError("reduce_dim: d must be >= 1");
  if (n < 2) throw ContractViolation("reduce_dim: need at least 2 rows");

  Eigen::MatrixXd centered = features.rowwise() - features.colwise().mean();
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success)
    throw ContractViolation("reduce_dim: eigendecomposition failed");

  // Eigen returns ascending eigenvalues; take the top d, largest first, and
  // fix each direction's sign by its largest-magnitude entry.
  Eigen::MatrixXd basis(e, d);
  for (int j = 0; j < d; ++j) {
    Eigen::VectorXd v = solver.eigenvectors().col(e - 1 - j);
    Eigen::Index arg = 0;
    for (Eigen::Index r = 1; r < e; ++r)
      if (std::abs(v[r]) > std::abs(v[arg])) arg = r;
    if (v[arg] < 0) v = -v;
    basis.col(j) = v;
  }
  return centered * basis;
}

double knn_radius(const Eigen::MatrixXd& features, const ClusterConfig& cfg) {
  const Eigen::Index n = features.rows();
  if (n <= cfg.knn_k)
    throw ContractViolation("knn_radius: need more than knn_k=" +
                            std::to_string(cfg.knn_k) + " points, got " +
                            std::to_string(n));
  std::vector<double> kth(static_cast<std::size_t>(n));
  std::vector<double> dists(static_cast<std::size_t>(n) - 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::size_t w = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      dists[w++] = (features.row(i) - features.row(j)).norm();
    }
    std::nth_element(dists.begin(), dists.begin() + (cfg.knn_k - 1), dists.end());
    kth[static_cast<std::size_t>(i)] = dists[static_cast<std::size_t>(cfg.knn_k - 1)];
  }
  if (cfg.radius_statistic == RadiusStatistic::Quantile)
    return quantile(kth, cfg.radius_quantile);
  return std::accumulate(kth.begin(), kth.end(), 0.0) / static_cast<double>(n);
}

ClusterResult dbscan(const Eigen::MatrixXd& features, double rad, int min_pts) {
  if (rad < 0) throw ContractViolation("dbscan: rad must be >= 0");
  const int n = static_cast<int>(features.rows());
  ClusterResult result;
  result.assignment.assign(static_cast<std::size_t>(n), kNoiseLabel);
  if (n == 0) return result;

  const double rad2 = rad * rad;
  std::vector<std::vector<int>> neighbors(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if ((features.row(i) - features.row(j)).squaredNorm() <= rad2)
        neighbors[static_cast<std::size_t>(i)].push_back(j);
    }
  }
  std::vector<char> core(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i)
    core[static_cast<std::size_t>(i)] =
        static_cast<int>(neighbors[static_cast<std::size_t>(i)].size()) >= min_pts;

  // Connected components over core points, seeded in index order so cluster
  // numbering follows the smallest member.
  std::vector<int> comp(static_cast<std::size_t>(n), -1);
  int n_comp = 0;
  for (int i = 0; i < n; ++i) {
    if (!core[static_cast<std::size_t>(i)] || comp[static_cast<std::size_t>(i)] != -1) continue;
    const int id = n_comp++;
    std::queue<int> q;
    q.push(i);
    comp[static_cast<std::size_t>(i)] = id;
    while (!q.empty()) {
      const int p = q.front();
      q.pop();
      for (int nb : neighbors[static_cast<std::size_t>(p)]) {
        if (core[static_cast<std::size_t>(nb)] && comp[static_cast<std::size_t>(nb)] == -1) {
          comp[static_cast<std::size_t>(nb)] = id;
          q.push(nb);
        }
      }
    }
  }

  for (int i = 0; i < n; ++i) {
    if (core[static_cast<std::size_t>(i)]) {
      result.assignment[static_cast<std::size_t>(i)] = comp[static_cast<std::size_t>(i)];
      continue;
    }
    // Border point: nearest core neighbor within rad, ties by core index.
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int nb : neighbors[static_cast<std::size_t>(i)]) {
      if (!core[static_cast<std::size_t>(nb)]) continue;
      const double d = (features.row(i) - features.row(nb)).norm();
      if (d < best_d || (d == best_d && (best == -1 || nb < best))) {
        best_d = d;
        best = nb;
      }
    }
    if (best != -1)
      result.assignment[static_cast<std::size_t>(i)] = comp[static_cast<std::size_t>(best)];
  }

  // Canonical numbering by smallest member index (borders included).
  std::vector<int> renumber(static_cast<std::size_t>(n_comp), -1);
  int next_label = 0;
  for (int i = 0; i < n; ++i) {
    const int c = result.assignment[static_cast<std::size_t>(i)];
    if (c == kNoiseLabel) continue;
    if (renumber[static_cast<std::size_t>(c)] == -1)
      renumber[static_cast<std::size_t>(c)] = next_label++;
  }
  result.k = n_comp;
  result.members.assign(static_cast<std::size_t>(n_comp), {});
  for (int i = 0; i < n; ++i) {
    int& c = result.assignment[static_cast<std::size_t>(i)];
    if (c == kNoiseLabel) continue;
    c = renumber[static_cast<std::size_t>(c)];
    result.members[static_cast<std::size_t>(c)].push_back(i);
  }
  return result;
}

Eigen::MatrixXd centroids(const ClusterResult& result, const Eigen::MatrixXd& features) {
  if (result.k == 0)
    throw EmptyClusteringError("centroids: clustering produced no clusters (all noise)");
  Eigen::MatrixXd cents = Eigen::MatrixXd::Zero(result.k, features.cols());
  for (int c = 0; c < result.k; ++c) {
    const auto& members = result.members[static_cast<std::size_t>(c)];
    for (int idx : members) cents.row(c) += features.row(idx);
    cents.row(c) /= static_cast<double>(members.size());
  }
  return cents;
}

SelectionResult dynamic_sample(const Eigen::MatrixXd& features,
                               const ClusterResult& result,
                               const Eigen::MatrixXd& cents,
                               const ClusterConfig& cfg) {
  const int n = static_cast<int>(features.rows());
  std::vector<double> dist(static_cast<std::size_t>(n), -1.0);
  std::vector<double> pooled;
  for (int i = 0; i < n; ++i) {
    const int c = result.assignment[static_cast<std::size_t>(i)];
    if (c == kNoiseLabel) continue;
    dist[static_cast<std::size_t>(i)] = (features.row(i) - cents.row(c)).norm();
    pooled.push_back(dist[static_cast<std::size_t>(i)]);
  }

  SelectionResult sel;
  if (pooled.empty()) {
    sel.gamma_used = 0.0;
    return sel;
  }
  sel.gamma_used = cfg.gamma_mode == GammaMode::Absolute
                       ? cfg.gamma
                       : quantile(pooled, cfg.gamma_quantile);
  for (int i = 0; i < n; ++i) {
    const int c = result.assignment[static_cast<std::size_t>(i)];
    if (c == kNoiseLabel) continue;
    if (dist[static_cast<std::size_t>(i)] < sel.gamma_used) {
      sel.sample_indices.push_back(i);
      sel.clusters.push_back(c);
      sel.distances.push_back(dist[static_cast<std::size_t>(i)]);
    }
  }
  return sel;
}

AdaptiveClusterResult cluster_with_relaxation(const Eigen::MatrixXd& features,
                                              const ClusterConfig& cfg) {
  double rad = knn_radius(features, cfg);
  for (int attempt = 0; attempt <= 3; ++attempt) {
    ClusterResult r = dbscan(features, rad, cfg.min_pts);
    if (r.k > 0) return {std::move(r), rad, attempt};
    rad *= 2.0;
  }
  throw EmptyClusteringError(
      "cluster_with_relaxation: all samples are noise after 3 radius doublings");
}

}  // namespace pal
