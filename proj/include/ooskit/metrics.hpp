#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ooskit/detectors.hpp"
#include "ooskit/episodes.hpp"

namespace ooskit {

/// One query's canonical OOS score (larger = more OOS-like) and its truth.
struct ScoredQuery {
  double score = 0.0;
  bool is_oos = false;
};

/// Mann-Whitney AUROC with OOS as the positive class; ties earn half credit.
double auroc(std::span<const ScoredQuery> s);

/// Average precision with OOS positive; tied scores form one block and use
/// the precision at the block's end.
double aupr(std::span<const ScoredQuery> s);

struct EvalConfig {
  Detector detector = Detector::groos;
  EpisodeShape shape;
  int episodes = 1000;
  std::uint64_t seed = 0;
  std::optional<Point> gamma_oos;
  std::optional<double> background_constant;
  std::optional<double> threshold;  // raw orientation, see predict()
  bool per_episode = false;
  int threads = 1;
};

struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;
  int count = 0;
};

struct MetricsReport {
  std::string detector;
  EvalConfig config;
  std::optional<double> auroc_x100;
  std::optional<double> aupr_x100;
  std::optional<std::string> metrics_error;  // e.g. no OOS queries
  double accuracy_in_support = 0.0;          // nearest-prototype accuracy on Q^in
  std::optional<double> threshold_accuracy;  // fraction of queries with a correct verdict
  std::optional<MeanStderr> auroc_per_episode, aupr_per_episode, accuracy_per_episode;
  std::vector<ScoredQuery> pooled;  // canonical scores in episode-index order

  nlohmann::ordered_json to_json() const;
};

/// Scores every query of one episode with the detector (canonical
/// orientation), after mapping all points through the head.
std::vector<ScoredQuery> score_episode(const Episode& ep, const EvalConfig& cfg, const AffineHead& head,
                                       const LcboScorer* scorer, double* accuracy = nullptr,
                                       double* threshold_hits = nullptr);

/// Samples cfg.episodes episodes, pools all query scores, and reports
/// AUROC/AUPR x 100 plus in-support accuracy. Schedule-independent: episodes
/// are merged in index order whatever cfg.threads is.
MetricsReport evaluate(const EmbeddingDataset& ds_test, const EvalConfig& cfg, const AffineHead& head,
                       const LcboScorer* scorer = nullptr);

}  // namespace ooskit
