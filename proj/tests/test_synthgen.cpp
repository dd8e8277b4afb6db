#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "pal/synthgen.hpp"
#include "pal/transfer.hpp"

using namespace pal;

namespace {

BenchmarkConfig small_config() {
  BenchmarkConfig cfg;
  cfg.n_identities = 6;
  cfg.samples_per_identity_source = 8;
  cfg.samples_per_identity_target = 10;
  cfg.n_cameras = 3;
  cfg.latent_dim = 3;
  cfg.feature_dim = 6;
  cfg.intra_identity_noise_sigma = 0.3;
  cfg.query_fraction = 0.2;
  cfg.seed = 7;
  return cfg;
}

Dataset flat_dataset(const std::vector<std::vector<double>>& rows) {
  Dataset d;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Sample s;
    s.sample_id = static_cast<std::int64_t>(i);
    s.raw_features = rows[i];
    d.samples.push_back(std::move(s));
  }
  return d;
}

}  // namespace

TEST_CASE("split counts follow the config arithmetic") {
  BenchmarkConfig cfg = small_config();
  cfg.n_identities = 10;
  cfg.samples_per_identity_target = 20;
  cfg.query_fraction = 0.2;
  const Benchmark b = generate_benchmark(cfg);
  CHECK(b.target_train.size() == 160);  // 10 * 20 * 0.8
  CHECK(b.query.size() == 40);          // 10 * 20 * 0.2
  CHECK(b.gallery.size() == 160);
  CHECK(b.source_train.size() == static_cast<std::size_t>(10 * cfg.samples_per_identity_source));
}

TEST_CASE("same seed gives bitwise-identical benchmarks") {
  const BenchmarkConfig cfg = small_config();
  const Benchmark a = generate_benchmark(cfg);
  const Benchmark b = generate_benchmark(cfg);
  CHECK(dataset_to_csv(a.source_train) == dataset_to_csv(b.source_train));
  CHECK(dataset_to_csv(a.target_train) == dataset_to_csv(b.target_train));
  CHECK(dataset_to_csv(a.query) == dataset_to_csv(b.query));
  CHECK(dataset_to_csv(a.gallery) == dataset_to_csv(b.gallery));
  CHECK(benchmark_fingerprint(a) == benchmark_fingerprint(b));
}

TEST_CASE("different seeds give different benchmarks") {
  BenchmarkConfig cfg = small_config();
  const Benchmark a = generate_benchmark(cfg);
  cfg.seed = 8;
  const Benchmark b = generate_benchmark(cfg);
  CHECK(benchmark_fingerprint(a) != benchmark_fingerprint(b));
}

TEST_CASE("within-identity distances are smaller than between, brute force") {
  // The default source style is an orthonormal mixing with unit scale and no
  // offset, so feature distances equal latent distances exactly.
  BenchmarkConfig cfg = small_config();
  cfg.intra_identity_noise_sigma = 0.1;
  const Benchmark b = generate_benchmark(cfg);
  double within = 0.0, between = 0.0;
  std::int64_t n_within = 0, n_between = 0;
  const auto& samples = b.source_train.samples;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t j = i + 1; j < samples.size(); ++j) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < samples[i].raw_features.size(); ++k) {
        const double dv = samples[i].raw_features[k] - samples[j].raw_features[k];
        d2 += dv * dv;
      }
      const double d = std::sqrt(d2);
      if (samples[i].identity_id == samples[j].identity_id) {
        within += d;
        ++n_within;
      } else {
        between += d;
        ++n_between;
      }
    }
  }
  REQUIRE(n_within > 0);
  REQUIRE(n_between > 0);
  CHECK(within / n_within < between / n_between);
}

TEST_CASE("target_train never carries identities or labels") {
  const Benchmark b = generate_benchmark(small_config());
  for (const Sample& s : b.target_train.samples) {
    CHECK(s.identity_id == -1);
    CHECK(!s.label.has_value());
    CHECK(s.domain == Domain::Target);
  }
  // The hidden identities are recoverable through the ground-truth map only.
  for (const Sample& s : b.gallery.samples)
    CHECK(b.ground_truth.at(s.sample_id) == s.identity_id);
}

TEST_CASE("query and gallery are disjoint, gallery mirrors target_train") {
  const Benchmark b = generate_benchmark(small_config());
  std::set<std::int64_t> query_ids, gallery_ids, train_ids;
  for (const Sample& s : b.query.samples) query_ids.insert(s.sample_id);
  for (const Sample& s : b.gallery.samples) gallery_ids.insert(s.sample_id);
  for (const Sample& s : b.target_train.samples) train_ids.insert(s.sample_id);
  for (std::int64_t id : query_ids) CHECK(!gallery_ids.count(id));
  CHECK(gallery_ids == train_ids);
}

TEST_CASE("every query identity appears in the gallery under another camera") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
    BenchmarkConfig cfg = small_config();
    cfg.seed = seed;
    cfg.n_cameras = 2;  // tightest case
    const Benchmark b = generate_benchmark(cfg);
    for (const Sample& q : b.query.samples) {
      bool found = false;
      for (const Sample& g : b.gallery.samples) {
        if (g.identity_id == q.identity_id && g.camera_id != q.camera_id) {
          found = true;
          break;
        }
      }
      CHECK(found);
    }
  }
}

TEST_CASE("source and target identity sets are disjoint") {
  const Benchmark b = generate_benchmark(small_config());
  std::set<std::int64_t> src, tgt;
  for (const auto& id : b.source_identities) src.insert(id.identity_id);
  for (const auto& id : b.target_identities) tgt.insert(id.identity_id);
  for (std::int64_t id : tgt) CHECK(!src.count(id));
  CHECK(src.size() == tgt.size());
}

TEST_CASE("domain_gap of a dataset with itself is zero") {
  const Benchmark b = generate_benchmark(small_config());
  CHECK(domain_gap(b.source_train, b.source_train) == 0.0);
}

TEST_CASE("domain_gap hand case: +1 shift in 4 dims gives 2") {
  const Dataset a = flat_dataset({{0, 0, 0, 0}, {2, 2, 2, 2}});
  const Dataset b = flat_dataset({{1, 1, 1, 1}, {3, 3, 3, 3}});
  CHECK(domain_gap(a, b) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("domain_gap shrinks after moment-matching transfer") {
  const Benchmark b = generate_benchmark(small_config());
  const double before = domain_gap(b.source_train, b.target_train);
  const StyleTransform t = fit_transfer(b.source_train, b.target_train);
  Dataset transferred = b.source_train;
  for (Sample& s : transferred.samples) s.raw_features = t.apply(s.raw_features);
  const double after = domain_gap(transferred, b.target_train);
  CHECK(after < before);
}

TEST_CASE("domain_gap rejects mismatched dims") {
  const Dataset a = flat_dataset({{0, 0}});
  const Dataset b = flat_dataset({{0, 0, 0}});
  CHECK_THROWS_AS(domain_gap(a, b), DimensionError);
}

TEST_CASE("dataset CSV round-trips losslessly") {
  const Benchmark b = generate_benchmark(small_config());
  for (const Dataset* d : {&b.source_train, &b.target_train, &b.query, &b.gallery}) {
    const std::string text = dataset_to_csv(*d);
    const Dataset back = dataset_from_csv(text, d->role);
    REQUIRE(back.size() == d->size());
    CHECK(dataset_to_csv(back) == text);
    for (std::size_t i = 0; i < d->size(); ++i) {
      CHECK(back.samples[i].sample_id == d->samples[i].sample_id);
      CHECK(back.samples[i].camera_id == d->samples[i].camera_id);
      CHECK(back.samples[i].raw_features == d->samples[i].raw_features);
    }
  }
}

TEST_CASE("config validation names the offending field") {
  BenchmarkConfig cfg = small_config();
  cfg.query_fraction = 1.5;
  try {
    generate_benchmark(cfg);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("query_fraction") != std::string::npos);
  }

  cfg = small_config();
  cfg.n_cameras = 1;
  CHECK_THROWS_AS(generate_benchmark(cfg), ConfigError);

  cfg = small_config();
  cfg.intra_identity_noise_sigma = 0.0;
  CHECK_THROWS_AS(generate_benchmark(cfg), ConfigError);

  cfg = small_config();
  cfg.source_style = StyleMapParams{};  // empty arrays: wrong shapes
  CHECK_THROWS_AS(generate_benchmark(cfg), ConfigError);
}

TEST_CASE("latent centers are pairwise distinct") {
  const Benchmark b = generate_benchmark(small_config());
  auto all = b.source_identities;
  all.insert(all.end(), b.target_identities.begin(), b.target_identities.end());
  for (std::size_t i = 0; i < all.size(); ++i)
    for (std::size_t j = i + 1; j < all.size(); ++j)
      CHECK(all[i].latent_center != all[j].latent_center);
}
