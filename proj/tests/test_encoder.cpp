#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "pal/encoder.hpp"

using namespace pal;

namespace {

Sample make_sample(std::vector<double> features, int label = 0) {
  Sample s;
  s.raw_features = std::move(features);
  s.domain = Domain::PseudoTarget;
  s.label = label;
  return s;
}

// Analytic gradients recovered from a plain train_step with lr=1, wd=0:
// grad = params_before - params_after.
struct FlatParams {
  std::vector<double> values;
};

FlatParams flatten(const Encoder& e) {
  FlatParams p;
  for (const auto& w : e.trunk_weights)
    p.values.insert(p.values.end(), w.data(), w.data() + w.size());
  for (const auto& b : e.trunk_biases)
    p.values.insert(p.values.end(), b.data(), b.data() + b.size());
  p.values.insert(p.values.end(), e.head_weight.data(),
                  e.head_weight.data() + e.head_weight.size());
  p.values.insert(p.values.end(), e.head_bias.data(),
                  e.head_bias.data() + e.head_bias.size());
  return p;
}

// Order-compatible mutable access used by the finite-difference loop.
std::vector<double*> parameter_pointers(Encoder& e) {
  std::vector<double*> ptrs;
  for (auto& w : e.trunk_weights)
    for (Eigen::Index i = 0; i < w.size(); ++i) ptrs.push_back(w.data() + i);
  for (auto& b : e.trunk_biases)
    for (Eigen::Index i = 0; i < b.size(); ++i) ptrs.push_back(b.data() + i);
  for (Eigen::Index i = 0; i < e.head_weight.size(); ++i)
    ptrs.push_back(e.head_weight.data() + i);
  for (Eigen::Index i = 0; i < e.head_bias.size(); ++i)
    ptrs.push_back(e.head_bias.data() + i);
  return ptrs;
}

double max_gradcheck_error(const Encoder& encoder, const TrainBatch& batch,
                           double sigma) {
  TrainConfig step_cfg;
  step_cfg.learning_rate = 1.0;
  step_cfg.weight_decay = 0.0;
  Encoder updated = encoder;
  train_step(updated, batch, step_cfg, sigma);
  const FlatParams before = flatten(encoder);
  const FlatParams after = flatten(updated);

  Encoder probe = encoder;
  std::vector<double*> ptrs = parameter_pointers(probe);
  const double h = 1e-5;
  double worst = 0.0;
  for (std::size_t i = 0; i < ptrs.size(); ++i) {
    const double saved = *ptrs[i];
    *ptrs[i] = saved + h;
    const double up = batch_loss(probe, batch, sigma);
    *ptrs[i] = saved - h;
    const double down = batch_loss(probe, batch, sigma);
    *ptrs[i] = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double analytic = before.values[i] - after.values[i];
    const double denom = std::max({1.0, std::abs(numeric), std::abs(analytic)});
    worst = std::max(worst, std::abs(numeric - analytic) / denom);
  }
  return worst;
}

}  // namespace

TEST_CASE("init_encoder is deterministic per seed") {
  const Encoder a = init_encoder(4, {8}, 3, 5, 42);
  const Encoder b = init_encoder(4, {8}, 3, 5, 42);
  CHECK(encoder_to_json(a) == encoder_to_json(b));
  CHECK(a.head_weight.rows() == 5);
  CHECK(a.trunk_weights.size() == 2);  // hidden + embed layers

  const Encoder c = init_encoder(4, {8}, 3, 5, 43);
  CHECK(encoder_to_json(a) != encoder_to_json(c));
}

TEST_CASE("init_encoder rejects zero dims") {
  CHECK_THROWS_AS(init_encoder(0, {4}, 2, 2, 1), ConfigError);
  CHECK_THROWS_AS(init_encoder(3, {0}, 2, 2, 1), ConfigError);
  CHECK_THROWS_AS(init_encoder(3, {4}, 0, 2, 1), ConfigError);
  CHECK_THROWS_AS(init_encoder(3, {4}, 2, 0, 1), ConfigError);
}

TEST_CASE("forward with a zeroed head gives uniform probabilities") {
  Encoder e = init_encoder(3, {4}, 2, 5, 7);
  e.head_weight.setZero();
  e.head_bias.setZero();
  const ForwardResult r = forward(e, Eigen::Vector3d(0.3, -1.0, 2.0));
  for (int k = 0; k < 5; ++k)
    CHECK(r.probs[k] == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("forward probabilities sum to one and stay in (0,1)") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 3.0);
  const Encoder e = init_encoder(6, {10, 7}, 4, 9, 11);
  for (int rep = 0; rep < 100; ++rep) {
    Eigen::VectorXd x(6);
    for (int i = 0; i < 6; ++i) x[i] = g(rng);
    const ForwardResult r = forward(e, x);
    CHECK(std::abs(r.probs.sum() - 1.0) <= 1e-12);
    for (int k = 0; k < 9; ++k) {
      CHECK(r.probs[k] > 0.0);
      CHECK(r.probs[k] < 1.0);
    }
  }
}

TEST_CASE("forward matches a hand-evaluated two-layer fixture") {
  Encoder e = init_encoder(2, {2}, 2, 2, 0);
  e.trunk_weights[0] << 1.0, 0.0, 0.0, 1.0;
  e.trunk_biases[0] << 0.5, -0.5;
  e.trunk_weights[1] << 0.3, -0.2, 0.1, 0.4;
  e.trunk_biases[1] << 0.0, 0.1;

  const double z0 = std::tanh(0.2 + 0.5);
  const double z1 = std::tanh(-0.3 - 0.5);
  const double e0 = std::tanh(0.3 * z0 - 0.2 * z1);
  const double e1 = std::tanh(0.1 * z0 + 0.4 * z1 + 0.1);

  const ForwardResult r = forward(e, Eigen::Vector2d(0.2, -0.3));
  CHECK(std::abs(r.embedding[0] - e0) < 1e-12);
  CHECK(std::abs(r.embedding[1] - e1) < 1e-12);
}

TEST_CASE("forward rejects dimension mismatch") {
  const Encoder e = init_encoder(3, {4}, 2, 2, 1);
  CHECK_THROWS_AS(forward(e, Eigen::Vector2d(1.0, 2.0)), DimensionError);
}

TEST_CASE("embed matches per-sample forwards and permutes with rows") {
  const Encoder e = init_encoder(3, {5}, 4, 3, 17);
  Dataset d;
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int i = 0; i < 12; ++i) {
    Sample s;
    s.sample_id = i;
    s.raw_features = {g(rng), g(rng), g(rng)};
    d.samples.push_back(std::move(s));
  }
  const Eigen::MatrixXd m = embed(e, d);
  REQUIRE(m.rows() == 12);
  for (int i = 0; i < 12; ++i) {
    const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(
        d.samples[i].raw_features.data(), 3);
    const Eigen::VectorXd row = forward(e, x).embedding;
    CHECK((m.row(i).transpose() - row).cwiseAbs().maxCoeff() <= 1e-12);
  }

  Dataset reversed = d;
  std::reverse(reversed.samples.begin(), reversed.samples.end());
  const Eigen::MatrixXd rm = embed(e, reversed);
  for (int i = 0; i < 12; ++i)
    CHECK((rm.row(i) - m.row(11 - i)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("train_step on lambda=0 samples equals mean cross-entropy") {
  Encoder e = init_encoder(2, {3}, 2, 3, 5);
  const Sample s0 = make_sample({0.5, -0.2}, 1);
  const Sample s1 = make_sample({-1.0, 0.3}, 2);
  TrainBatch batch{{&s0, Supervision{1, 0, std::nullopt}},
                   {&s1, Supervision{2, 0, std::nullopt}}};
  double expected = 0.0;
  for (const auto& [sample, sup] : batch) {
    const Eigen::VectorXd x =
        Eigen::Map<const Eigen::VectorXd>(sample->raw_features.data(), 2);
    expected += -std::log(forward(e, x).probs[sup.y]);
  }
  expected /= 2.0;
  TrainConfig cfg;
  // sigma is ignored for lambda=0 samples (forced to zero internally).
  CHECK(train_step(e, batch, cfg, 0.9) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("train_step on a single lambda=1 sample at sigma=1 equals wls_loss") {
  Encoder e = init_encoder(2, {3}, 2, 3, 6);
  const Sample s = make_sample({0.4, 0.4});
  const std::vector<double> w{0.25, 0.75, 0.0};
  TrainBatch batch{{&s, Supervision{1, 1, w}}};
  const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(s.raw_features.data(), 2);
  const Eigen::VectorXd probs = forward(e, x).probs;
  const double expected =
      wls_loss(w, std::vector<double>(probs.data(), probs.data() + probs.size()));
  TrainConfig cfg;
  CHECK(train_step(e, batch, cfg, 1.0) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("train_step rejects lambda=1 without weights") {
  Encoder e = init_encoder(2, {3}, 2, 3, 6);
  const Sample s = make_sample({0.4, 0.4});
  TrainBatch batch{{&s, Supervision{1, 1, std::nullopt}}};
  TrainConfig cfg;
  CHECK_THROWS_AS(train_step(e, batch, cfg, 0.5), ContractViolation);
}

TEST_CASE("analytic gradients match central finite differences") {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> g(0.0, 1.5);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double sigmas[] = {0.0, 0.3, 0.7, 1.0};
  double worst = 0.0;
  for (int config = 0; config < 110; ++config) {
    const int input_dim = 2 + static_cast<int>(rng() % 5);
    std::vector<int> hidden;
    const int n_hidden = static_cast<int>(rng() % 3);
    for (int i = 0; i < n_hidden; ++i) hidden.push_back(3 + static_cast<int>(rng() % 6));
    const int embed_dim = 2 + static_cast<int>(rng() % 4);
    const int k = 2 + static_cast<int>(rng() % 5);
    Encoder e = init_encoder(input_dim, hidden, embed_dim, k, rng());

    const int batch_size = 1 + static_cast<int>(rng() % 5);
    std::vector<Sample> storage;
    storage.reserve(batch_size);
    TrainBatch batch;
    for (int b = 0; b < batch_size; ++b) {
      std::vector<double> feats(input_dim);
      for (double& v : feats) v = g(rng);
      storage.push_back(make_sample(std::move(feats)));
    }
    for (int b = 0; b < batch_size; ++b) {
      Supervision sup;
      sup.y = static_cast<int>(rng() % k);
      sup.lambda = static_cast<int>(rng() % 2);
      if (sup.lambda == 1) {
        std::vector<double> w(k, 0.0);
        const int support = 1 + static_cast<int>(rng() % std::min(3, k));
        double sum = 0.0;
        for (int s = 0; s < support; ++s) {
          const int idx = static_cast<int>(rng() % k);
          w[idx] += 0.1 + u01(rng);
        }
        for (double v : w) sum += v;
        for (double& v : w) v /= sum;
        sup.w = std::move(w);
      }
      batch.emplace_back(&storage[b], sup);
    }
    const double sigma = sigmas[rng() % 4];
    worst = std::max(worst, max_gradcheck_error(e, batch, sigma));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("cross-entropy training on a separable toy set decreases the loss") {
  Encoder e = init_encoder(2, {4}, 3, 2, 21);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0.0, 0.1);
  std::vector<Sample> storage;
  for (int i = 0; i < 10; ++i) {
    storage.push_back(make_sample({-2.0 + g(rng), g(rng)}, 0));
    storage.push_back(make_sample({2.0 + g(rng), g(rng)}, 1));
  }
  TrainBatch batch;
  for (const Sample& s : storage)
    batch.emplace_back(&s, Supervision{*s.label, 0, std::nullopt});
  TrainConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.weight_decay = 0.0;
  double first = 0.0, last = 0.0;
  for (int step = 0; step < 200; ++step) {
    const double loss = train_step(e, batch, cfg, 0.0);
    if (step == 0) first = loss;
    last = loss;
  }
  CHECK(last < first);
  CHECK(last < 0.2);
}

TEST_CASE("training is deterministic given seed, data order and config") {
  auto run = [] {
    Encoder e = init_encoder(3, {5}, 3, 2, 33);
    std::vector<Sample> storage;
    for (int i = 0; i < 6; ++i)
      storage.push_back(make_sample({0.1 * i, -0.2 * i, 0.05 * i}, i % 2));
    TrainBatch batch;
    for (const Sample& s : storage)
      batch.emplace_back(&s, Supervision{*s.label, 0, std::nullopt});
    TrainConfig cfg;
    for (int step = 0; step < 25; ++step) train_step(e, batch, cfg, 0.0);
    return encoder_to_json(e);
  };
  CHECK(run() == run());
}

TEST_CASE("checkpoint round-trip reproduces embeddings bit-exactly") {
  Encoder e = init_encoder(4, {6, 5}, 3, 4, 77);
  const std::string path = "encoder_ckpt_test.json";
  save_checkpoint(e, path);
  const Encoder loaded = load_checkpoint(path);
  std::remove(path.c_str());
  CHECK(encoder_to_json(loaded) == encoder_to_json(e));
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 2.0);
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::VectorXd x(4);
    for (int i = 0; i < 4; ++i) x[i] = g(rng);
    const Eigen::VectorXd a = forward(e, x).embedding;
    const Eigen::VectorXd b = forward(loaded, x).embedding;
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("rebuild_head keeps the trunk and changes only the head") {
  const Encoder e = init_encoder(3, {4}, 3, 5, 9);
  const Encoder rebuilt = rebuild_head(e, 5, 9);
  for (std::size_t t = 0; t < e.trunk_weights.size(); ++t) {
    CHECK((e.trunk_weights[t] - rebuilt.trunk_weights[t]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((e.trunk_biases[t] - rebuilt.trunk_biases[t]).cwiseAbs().maxCoeff() == 0.0);
  }
  // Head re-drawn even at the same width.
  CHECK((e.head_weight - rebuilt.head_weight).cwiseAbs().maxCoeff() > 0.0);

  const Encoder wider = rebuild_head(e, 8, 123);
  CHECK(wider.k_classes == 8);
  Eigen::Vector3d x(0.2, 0.4, -0.6);
  CHECK((forward(e, x).embedding - forward(wider, x).embedding).cwiseAbs().maxCoeff() ==
        0.0);
  CHECK(forward(wider, x).probs.size() == 8);
}
