#pragma once

#include <vector>

#include <Eigen/Dense>

#include "pal/common.hpp"

namespace pal {

enum class RadiusStatistic { Mean, Quantile };
enum class GammaMode { Absolute, WithinClusterQuantile };

struct ClusterConfig {
  int reduce_dim = 8;
  int knn_k = 4;
  RadiusStatistic radius_statistic = RadiusStatistic::Mean;
  double radius_quantile = 0.9;
  int min_pts = 4;
  GammaMode gamma_mode = GammaMode::WithinClusterQuantile;
  // Absolute mode: select samples strictly closer than gamma to their own
  // centroid.
  double gamma = 1.0;
  // Quantile mode: gamma is this quantile of the pooled sample-to-own-centroid
  // distances. The growth knob lets the pipeline widen the selection each
  // iteration, capped at gamma_quantile_max.
  double gamma_quantile = 0.85;
  double gamma_quantile_growth = 0.02;
  double gamma_quantile_max = 0.95;

  void validate() const;
};

inline constexpr int kNoiseLabel = -1;

struct ClusterResult {
  // Cluster index per sample, or kNoiseLabel. Clusters are numbered by
  // ascending smallest member index.
  std::vector<int> assignment;
  int k = 0;
  std::vector<std::vector<int>> members;
};

// Centered principal-component projection onto the top-d directions.
// Deterministic sign convention: the largest-magnitude entry of each
// direction is positive.
Eigen::MatrixXd reduce_dim(const Eigen::MatrixXd& features, int d);

// Mean (or quantile) of each point's distance to its knn_k-th nearest
// neighbor, self excluded. Requires n > knn_k.
double knn_radius(const Eigen::MatrixXd& features, const ClusterConfig& cfg);

// Density clustering; neighborhoods are inclusive (dist <= rad) and count the
// point itself. Border points join the cluster of their nearest core
// neighbor.
ClusterResult dbscan(const Eigen::MatrixXd& features, double rad, int min_pts);

// Arithmetic mean of member rows, one row per cluster. Throws
// EmptyClusteringError when k == 0.
Eigen::MatrixXd centroids(const ClusterResult& result, const Eigen::MatrixXd& features);

struct SelectionResult {
  std::vector<int> sample_indices;
  std::vector<int> clusters;
  std::vector<double> distances;
  double gamma_used = 0.0;
};

// Selects non-noise samples strictly closer than gamma to their own cluster
// centroid. Noise is never selected.
SelectionResult dynamic_sample(const Eigen::MatrixXd& features,
                               const ClusterResult& result,
                               const Eigen::MatrixXd& cents,
                               const ClusterConfig& cfg);

struct AdaptiveClusterResult {
  ClusterResult clusters;
  double radius = 0.0;
  int retries = 0;
};

// knn_radius + dbscan; on an all-noise result the radius is doubled, up to 3
// retries, before EmptyClusteringError is raised.
AdaptiveClusterResult cluster_with_relaxation(const Eigen::MatrixXd& features,
                                              const ClusterConfig& cfg);

// Linear-interpolated quantile of an unsorted sample (q in [0,1]).
double quantile(std::vector<double> values, double q);

}  // namespace pal
