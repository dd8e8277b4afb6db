#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include <nlohmann/json_fwd.hpp>

#include "pal/common.hpp"

namespace pal {

struct RetrievalItem {
  std::int64_t sample_id = 0;
  std::int64_t identity = -1;
  int camera = 0;
};

struct RankingResult {
  // Admissible gallery indices by ascending distance; ties broken by
  // ascending gallery sample_id.
  std::vector<int> order;
  // Parallel to order: same identity as the query.
  std::vector<char> relevance;
  // No admissible gallery entry was left for this query.
  bool skipped = false;
};

// With cross_camera_exclusion, gallery entries sharing both identity and
// camera with the query are removed before ranking.
RankingResult rank_gallery(const Eigen::VectorXd& query_emb,
                           const Eigen::MatrixXd& gallery_embs,
                           const RetrievalItem& query,
                           const std::vector<RetrievalItem>& gallery,
                           bool cross_camera_exclusion);

// Distance-vector variant (one distance per gallery entry).
RankingResult rank_gallery(const std::vector<double>& distances,
                           const RetrievalItem& query,
                           const std::vector<RetrievalItem>& gallery,
                           bool cross_camera_exclusion);

// AP = (1/R) * sum over hit ranks r of precision@r. nullopt when the ranking
// holds no relevant entry (query excluded from mAP).
std::optional<double> average_precision(const std::vector<char>& relevance);

double mean_ap(const std::vector<double>& per_query_aps);

// cmc[r-1] = fraction of queries whose first hit rank is <= r. Ranks are
// 1-based.
std::vector<double> cmc(const std::vector<int>& first_hit_ranks, int max_rank);

struct EvalReport {
  double map = 0.0;
  std::vector<double> cmc;
  std::vector<double> per_query_ap;
  int skipped_queries = 0;
  int zero_relevant_queries = 0;

  double rank1() const;
  double rank5() const;

  nlohmann::json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);
};

EvalReport evaluate_retrieval(const Eigen::MatrixXd& query_embs,
                              const std::vector<RetrievalItem>& queries,
                              const Eigen::MatrixXd& gallery_embs,
                              const std::vector<RetrievalItem>& gallery,
                              bool cross_camera_exclusion, int max_rank);

// Summary rows `iteration,variant,map,rank1,rank5`, header included.
std::string eval_summary_csv(const std::vector<EvalReport>& per_iteration,
                             const std::string& variant);

}  // namespace pal
