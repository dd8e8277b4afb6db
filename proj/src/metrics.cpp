#include "pal/metrics.hpp"

#include <algorithm>
#include <numeric>

#include <nlohmann/json.hpp>

namespace pal {

RankingResult rank_gallery(const std::vector<double>& distances,
                           const RetrievalItem& query,
                           const std::vector<RetrievalItem>& gallery,
                           bool cross_camera_exclusion) {
  if (gallery.empty()) throw ContractViolation("rank_gallery: empty gallery");
  if (distances.size() != gallery.size())
    throw DimensionError("rank_gallery: distance/gallery length mismatch");

  std::vector<int> admissible;
  for (int i = 0; i < static_cast<int>(gallery.size()); ++i) {
    const auto& g = gallery[static_cast<std::size_t>(i)];
    if (cross_camera_exclusion && g.identity == query.identity &&
        g.camera == query.camera)
      continue;
    admissible.push_back(i);
  }

  RankingResult r;
  if (admissible.empty()) {
    r.skipped = true;
    return r;
  }
  std::sort(admissible.begin(), admissible.end(), [&](int a, int b) {
    const double da = distances[static_cast<std::size_t>(a)];
    const double db = distances[static_cast<std::size_t>(b)];
    if (da != db) return da < db;
    return gallery[static_cast<std::size_t>(a)].sample_id <
           gallery[static_cast<std::size_t>(b)].sample_id;
  });
  r.order = std::move(admissible);
  r.relevance.reserve(r.order.size());
  for (int idx : r.order)
    r.relevance.push_back(gallery[static_cast<std::size_t>(idx)].identity == query.identity);
  return r;
}

RankingResult rank_gallery(const Eigen::VectorXd& query_emb,
                           const Eigen::MatrixXd& gallery_embs,
                           const RetrievalItem& query,
                           const std::vector<RetrievalItem>& gallery,
                           bool cross_camera_exclusion) {
  if (gallery_embs.rows() != static_cast<Eigen::Index>(gallery.size()))
    throw DimensionError("rank_gallery: embedding row count != gallery size");
  std::vector<double> distances(gallery.size());
  for (std::size_t i = 0; i < gallery.size(); ++i)
    distances[i] = (gallery_embs.row(static_cast<Eigen::Index>(i)) -
                    query_emb.transpose())
                       .norm();
  return rank_gallery(distances, query, gallery, cross_camera_exclusion);
}

std::optional<double> average_precision(const std::vector<char>& relevance) {
  int total_relevant = 0;
  for (char r : relevance) total_relevant += r ? 1 : 0;
  if (total_relevant == 0) return std::nullopt;
  double acc = 0.0;
  int hits = 0;
  for (std::size_t i = 0; i < relevance.size(); ++i) {
    if (!relevance[i]) continue;
    ++hits;
    acc += static_cast<double>(hits) / static_cast<double>(i + 1);
  }
  return acc / static_cast<double>(total_relevant);
}

double mean_ap(const std::vector<double>& per_query_aps) {
  if (per_query_aps.empty()) throw ContractViolation("mean_ap: no valid queries");
  return std::accumulate(per_query_aps.begin(), per_query_aps.end(), 0.0) /
         static_cast<double>(per_query_aps.size());
}

std::vector<double> cmc(const std::vector<int>& first_hit_ranks, int max_rank) {
  if (max_rank < 1) throw ContractViolation("cmc: max_rank must be >= 1");
  if (first_hit_ranks.empty()) throw ContractViolation("cmc: no queries");
  std::vector<double> curve(static_cast<std::size_t>(max_rank), 0.0);
  for (int rank : first_hit_ranks) {
    if (rank < 1) throw ContractViolation("cmc: ranks are 1-based");
    for (int r = rank; r <= max_rank; ++r) curve[static_cast<std::size_t>(r - 1)] += 1.0;
  }
  for (double& v : curve) v /= static_cast<double>(first_hit_ranks.size());
  return curve;
}

double EvalReport::rank1() const {
  return cmc.empty() ? 0.0 : cmc.front();
}

double EvalReport::rank5() const {
  if (cmc.empty()) return 0.0;
  return cmc[std::min<std::size_t>(4, cmc.size() - 1)];
}

nlohmann::json EvalReport::to_json() const {
  return nlohmann::json{{"map", map},
                        {"cmc", cmc},
                        {"per_query_ap", per_query_ap},
                        {"skipped_queries", skipped_queries},
                        {"zero_relevant_queries", zero_relevant_queries}};
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
  EvalReport r;
  r.map = j.at("map").get<double>();
  r.cmc = j.at("cmc").get<std::vector<double>>();
  r.per_query_ap = j.at("per_query_ap").get<std::vector<double>>();
  r.skipped_queries = j.at("skipped_queries").get<int>();
  r.zero_relevant_queries = j.at("zero_relevant_queries").get<int>();
  return r;
}

EvalReport evaluate_retrieval(const Eigen::MatrixXd& query_embs,
                              const std::vector<RetrievalItem>& queries,
                              const Eigen::MatrixXd& gallery_embs,
                              const std::vector<RetrievalItem>& gallery,
                              bool cross_camera_exclusion, int max_rank) {
  if (query_embs.rows() != static_cast<Eigen::Index>(queries.size()))
    throw DimensionError("evaluate_retrieval: query embedding count mismatch");
  EvalReport report;
  std::vector<int> first_hits;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    const RankingResult ranking =
        rank_gallery(Eigen::VectorXd(query_embs.row(static_cast<Eigen::Index>(q)).transpose()),
                     gallery_embs, queries[q], gallery, cross_camera_exclusion);
    if (ranking.skipped) {
      ++report.skipped_queries;
      continue;
    }
    const auto ap = average_precision(ranking.relevance);
    if (!ap) {
      ++report.zero_relevant_queries;
      continue;
    }
    report.per_query_ap.push_back(*ap);
    for (std::size_t i = 0; i < ranking.relevance.size(); ++i) {
      if (ranking.relevance[i]) {
        first_hits.push_back(static_cast<int>(i + 1));
        break;
      }
    }
  }
  if (report.per_query_ap.empty())
    throw ContractViolation("evaluate_retrieval: no query with a relevant match");
  report.map = mean_ap(report.per_query_ap);
  report.cmc = cmc(first_hits, max_rank);
  return report;
}

std::string eval_summary_csv(const std::vector<EvalReport>& per_iteration,
                             const std::string& variant) {
  std::string out = "iteration,variant,map,rank1,rank5\n";
  for (std::size_t i = 0; i < per_iteration.size(); ++i) {
    const EvalReport& r = per_iteration[i];
    out += std::to_string(i + 1) + "," + variant + "," + format_double(r.map) +
           "," + format_double(r.rank1()) + "," + format_double(r.rank5()) + "\n";
  }
  return out;
}

}  // namespace pal
