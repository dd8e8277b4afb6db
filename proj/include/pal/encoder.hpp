#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pal/dataset.hpp"
#include "pal/wls.hpp"

namespace pal {

struct TrainConfig {
  double learning_rate = 0.05;
  int epochs_per_iteration = 20;
  int batch_size = 32;
  double weight_decay = 1e-4;
  std::uint64_t seed = 42;

  void validate() const;
};

// Supervision attached to one training sample. lambda=0: generated or source
// sample, y is its class label. lambda=1: pseudo-labeled target sample, y is
// its cluster class and w its weight vector over the head.
struct Supervision {
  int y = 0;
  int lambda = 0;
  std::optional<std::vector<double>> w;
};

// Feed-forward encoder: tanh trunk (input -> hidden dims -> embed_dim) plus a
// linear softmax head of width k_classes. The embedding is the last trunk
// activation; the head is not on the embedding path.
struct Encoder {
  int input_dim = 0;
  std::vector<int> hidden_dims;
  int embed_dim = 0;
  int k_classes = 0;
  std::vector<Eigen::MatrixXd> trunk_weights;
  std::vector<Eigen::VectorXd> trunk_biases;
  Eigen::MatrixXd head_weight;
  Eigen::VectorXd head_bias;
};

// Scaled-uniform (Glorot) init, biases zero, deterministic per seed.
Encoder init_encoder(int feature_dim, const std::vector<int>& hidden_dims,
                     int embed_dim, int k_classes, std::uint64_t seed);

struct ForwardResult {
  Eigen::VectorXd embedding;
  Eigen::VectorXd probs;
};

ForwardResult forward(const Encoder& e, const Eigen::VectorXd& x);

// Row i is the embedding of sample i, in dataset order.
Eigen::MatrixXd embed(const Encoder& e, const Dataset& d);

using TrainBatch = std::vector<std::pair<const Sample*, Supervision>>;

// Batch-mean combined loss; pure. Samples with lambda=0 are scored with
// sigma forced to 0 (plain cross-entropy).
double batch_loss(const Encoder& e, const TrainBatch& batch, double sigma,
                  WlsStats* stats = nullptr);

// One gradient-descent update with weight decay; returns the pre-update
// batch-mean loss. Gradients are exact analytic backprop.
double train_step(Encoder& e, const TrainBatch& batch, const TrainConfig& cfg,
                  double sigma, WlsStats* stats = nullptr);

// New encoder sharing the trunk verbatim, head re-initialized at width k_new
// from the given seed.
Encoder rebuild_head(const Encoder& e, int k_new, std::uint64_t seed);

// JSON checkpoint with layer dims and row-major weight arrays; loading
// reproduces embeddings bit-exactly.
std::string encoder_to_json(const Encoder& e);
Encoder encoder_from_json(const std::string& text);
void save_checkpoint(const Encoder& e, const std::string& path);
Encoder load_checkpoint(const std::string& path);

}  // namespace pal
