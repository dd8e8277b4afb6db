#include "pal/encoder.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

namespace pal {

namespace {

Eigen::MatrixXd glorot_matrix(int rows, int cols, std::mt19937_64& rng) {
  const double s = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> u(-s, s);
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = u(rng);
  return m;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const double mx = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - mx).exp();
  return e / e.sum();
}

std::vector<double> to_std(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

// Per-sample supervision resolved against the current head.
double sample_sigma(const Supervision& sup, double sigma) {
  return sup.lambda == 1 ? sigma : 0.0;
}

struct Activations {
  std::vector<Eigen::VectorXd> trunk;  // post-tanh output per trunk layer
  Eigen::VectorXd probs;
};

Activations forward_full(const Encoder& e, const Eigen::VectorXd& x) {
  if (x.size() != e.input_dim)
    throw DimensionError("forward: input dim " + std::to_string(x.size()) +
                         ", encoder expects " + std::to_string(e.input_dim));
  Activations act;
  Eigen::VectorXd a = x;
  for (std::size_t t = 0; t < e.trunk_weights.size(); ++t) {
    a = ((e.trunk_weights[t] * a + e.trunk_biases[t]).array().tanh()).matrix();
    act.trunk.push_back(a);
  }
  act.probs = softmax(e.head_weight * a + e.head_bias);
  return act;
}

struct Gradients {
  std::vector<Eigen::MatrixXd> trunk_w;
  std::vector<Eigen::VectorXd> trunk_b;
  Eigen::MatrixXd head_w;
  Eigen::VectorXd head_b;
};

Gradients zero_gradients(const Encoder& e) {
  Gradients g;
  for (const auto& w : e.trunk_weights) g.trunk_w.emplace_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
  for (const auto& b : e.trunk_biases) g.trunk_b.emplace_back(Eigen::VectorXd::Zero(b.size()));
  g.head_w = Eigen::MatrixXd::Zero(e.head_weight.rows(), e.head_weight.cols());
  g.head_b = Eigen::VectorXd::Zero(e.head_bias.size());
  return g;
}

void check_supervision(const Encoder& e, const Supervision& sup) {
  if (sup.lambda != 0 && sup.lambda != 1)
    throw ContractViolation("train: lambda must be 0 or 1");
  if (sup.y < 0 || sup.y >= e.k_classes)
    throw ContractViolation("train: label " + std::to_string(sup.y) +
                            " out of range for head width " + std::to_string(e.k_classes));
  if (sup.lambda == 1) {
    if (!sup.w)
      throw ContractViolation("train: lambda=1 sample without a weight vector");
    if (static_cast<int>(sup.w->size()) != e.k_classes)
      throw DimensionError("train: weight vector length " + std::to_string(sup.w->size()) +
                           ", head width " + std::to_string(e.k_classes));
  }
}

// Mean loss, and the analytic gradients when grads != nullptr.
double batch_loss_and_grads(const Encoder& e, const TrainBatch& batch, double sigma,
                            Gradients* grads, WlsStats* stats) {
  if (batch.empty()) throw ContractViolation("train: empty batch");
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  for (const auto& [sample, sup] : batch) {
    check_supervision(e, sup);
    const Eigen::VectorXd x =
        Eigen::Map<const Eigen::VectorXd>(sample->raw_features.data(),
                                          static_cast<Eigen::Index>(sample->raw_features.size()));
    const Activations act = forward_full(e, x);
    const double ss = sample_sigma(sup, sigma);
    const std::vector<double> probs = to_std(act.probs);
    total += combined_loss(probs, sup.y, sup.w ? &*sup.w : nullptr, sup.lambda, ss, stats);

    if (!grads) continue;
    // d loss / d logits for the combined objective.
    Eigen::VectorXd dlogits = (1.0 - ss) * act.probs;
    dlogits[sup.y] -= (1.0 - ss);
    if (sup.lambda == 1 && ss != 0.0) {
      const auto& w = *sup.w;
      double wsum = 0.0;
      for (double v : w) wsum += v;
      for (int kk = 0; kk < e.k_classes; ++kk)
        dlogits[kk] += ss * (act.probs[kk] * wsum - w[kk]);
    }
    dlogits *= inv_n;

    const Eigen::VectorXd& emb = act.trunk.back();
    grads->head_w += dlogits * emb.transpose();
    grads->head_b += dlogits;
    Eigen::VectorXd da = e.head_weight.transpose() * dlogits;
    for (int t = static_cast<int>(e.trunk_weights.size()) - 1; t >= 0; --t) {
      const Eigen::VectorXd& out = act.trunk[t];
      const Eigen::VectorXd dz =
          (da.array() * (1.0 - out.array().square())).matrix();
      const Eigen::VectorXd& prev = t == 0 ? x : act.trunk[t - 1];
      grads->trunk_w[t] += dz * prev.transpose();
      grads->trunk_b[t] += dz;
      if (t > 0) da = e.trunk_weights[t].transpose() * dz;
    }
  }
  return total * inv_n;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0)) throw ConfigError("train.learning_rate: must be > 0");
  if (epochs_per_iteration < 1) throw ConfigError("train.epochs_per_iteration: must be >= 1");
  if (batch_size < 1) throw ConfigError("train.batch_size: must be >= 1");
  if (weight_decay < 0) throw ConfigError("train.weight_decay: must be >= 0");
}

Encoder init_encoder(int feature_dim, const std::vector<int>& hidden_dims,
                     int embed_dim, int k_classes, std::uint64_t seed) {
  if (feature_dim < 1) throw ConfigError("encoder.feature_dim: must be >= 1");
  if (embed_dim < 1) throw ConfigError("encoder.embed_dim: must be >= 1");
  if (k_classes < 1) throw ConfigError("encoder.k_classes: must be >= 1");
  for (int h : hidden_dims)
    if (h < 1) throw ConfigError("encoder.hidden_dims: entries must be >= 1");

  Encoder e;
  e.input_dim = feature_dim;
  e.hidden_dims = hidden_dims;
  e.embed_dim = embed_dim;
  e.k_classes = k_classes;

  std::mt19937_64 rng(seed);
  int prev = feature_dim;
  std::vector<int> dims = hidden_dims;
  dims.push_back(embed_dim);
  for (int dim : dims) {
    e.trunk_weights.push_back(glorot_matrix(dim, prev, rng));
    e.trunk_biases.push_back(Eigen::VectorXd::Zero(dim));
    prev = dim;
  }
  e.head_weight = glorot_matrix(k_classes, embed_dim, rng);
  e.head_bias = Eigen::VectorXd::Zero(k_classes);
  return e;
}

ForwardResult forward(const Encoder& e, const Eigen::VectorXd& x) {
  Activations act = forward_full(e, x);
  return {act.trunk.back(), act.probs};
}

Eigen::MatrixXd embed(const Encoder& e, const Dataset& d) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(d.size()), e.embed_dim);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto& feats = d.samples[i].raw_features;
    const Eigen::VectorXd x =
        Eigen::Map<const Eigen::VectorXd>(feats.data(), static_cast<Eigen::Index>(feats.size()));
    out.row(static_cast<Eigen::Index>(i)) = forward(e, x).embedding.transpose();
  }
  return out;
}

double batch_loss(const Encoder& e, const TrainBatch& batch, double sigma,
                  WlsStats* stats) {
  return batch_loss_and_grads(e, batch, sigma, nullptr, stats);
}

double train_step(Encoder& e, const TrainBatch& batch, const TrainConfig& cfg,
                  double sigma, WlsStats* stats) {
  cfg.validate();
  Gradients g = zero_gradients(e);
  const double loss = batch_loss_and_grads(e, batch, sigma, &g, stats);
  const double lr = cfg.learning_rate;
  const double wd = cfg.weight_decay;
  for (std::size_t t = 0; t < e.trunk_weights.size(); ++t) {
    e.trunk_weights[t] -= lr * (g.trunk_w[t] + wd * e.trunk_weights[t]);
    e.trunk_biases[t] -= lr * g.trunk_b[t];
  }
  e.head_weight -= lr * (g.head_w + wd * e.head_weight);
  e.head_bias -= lr * g.head_b;
  return loss;
}

Encoder rebuild_head(const Encoder& e, int k_new, std::uint64_t seed) {
  if (k_new < 1) throw ConfigError("rebuild_head: k_new must be >= 1");
  Encoder out = e;
  out.k_classes = k_new;
  std::mt19937_64 rng(seed);
  out.head_weight = glorot_matrix(k_new, e.embed_dim, rng);
  out.head_bias = Eigen::VectorXd::Zero(k_new);
  return out;
}

std::string encoder_to_json(const Encoder& e) {
  nlohmann::json j;
  j["input_dim"] = e.input_dim;
  j["hidden_dims"] = e.hidden_dims;
  j["embed_dim"] = e.embed_dim;
  j["k_classes"] = e.k_classes;
  auto matrix_rows = [](const Eigen::MatrixXd& m) {
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) flat.push_back(m(r, c));
    return flat;
  };
  nlohmann::json trunk = nlohmann::json::array();
  for (std::size_t t = 0; t < e.trunk_weights.size(); ++t) {
    trunk.push_back({{"rows", e.trunk_weights[t].rows()},
                     {"cols", e.trunk_weights[t].cols()},
                     {"w", matrix_rows(e.trunk_weights[t])},
                     {"b", to_std(e.trunk_biases[t])}});
  }
  j["trunk"] = trunk;
  j["head"] = {{"rows", e.head_weight.rows()},
               {"cols", e.head_weight.cols()},
               {"w", matrix_rows(e.head_weight)},
               {"b", to_std(e.head_bias)}};
  return j.dump(2);
}

namespace {

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const Eigen::Index rows = j.at("rows").get<Eigen::Index>();
  const Eigen::Index cols = j.at("cols").get<Eigen::Index>();
  const auto flat = j.at("w").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(flat.size()) != rows * cols)
    throw IoError("encoder checkpoint: weight array size mismatch");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = flat[static_cast<std::size_t>(r * cols + c)];
  return m;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

Encoder encoder_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  Encoder e;
  e.input_dim = j.at("input_dim").get<int>();
  e.hidden_dims = j.at("hidden_dims").get<std::vector<int>>();
  e.embed_dim = j.at("embed_dim").get<int>();
  e.k_classes = j.at("k_classes").get<int>();
  for (const auto& layer : j.at("trunk")) {
    e.trunk_weights.push_back(matrix_from_json(layer));
    e.trunk_biases.push_back(vector_from_json(layer.at("b")));
  }
  e.head_weight = matrix_from_json(j.at("head"));
  e.head_bias = vector_from_json(j.at("head").at("b"));
  return e;
}

void save_checkpoint(const Encoder& e, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << encoder_to_json(e) << "\n";
  if (!out) throw IoError("write failed: " + path);
}

Encoder load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return encoder_from_json(buf.str());
}

}  // namespace pal
