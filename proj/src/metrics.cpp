#include "ooskit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

namespace ooskit {

namespace {

void count_classes(std::span<const ScoredQuery> s, std::size_t& pos, std::size_t& neg) {
  pos = 0;
  neg = 0;
  for (const auto& q : s) {
    if (!std::isfinite(q.score)) throw InvalidArgument("scores must be finite");
    (q.is_oos ? pos : neg)++;
  }
}

std::vector<ScoredQuery> sorted_desc(std::span<const ScoredQuery> s) {
  std::vector<ScoredQuery> v(s.begin(), s.end());
  std::stable_sort(v.begin(), v.end(), [](const ScoredQuery& a, const ScoredQuery& b) { return a.score > b.score; });
  return v;
}

}  // namespace

double auroc(std::span<const ScoredQuery> s) {
  std::size_t pos, neg;
  count_classes(s, pos, neg);
  if (pos == 0 || neg == 0) throw InvalidArgument("AUROC needs both OOS and in-support scores");
  // Ascending midranks; U = sum of positive ranks - P(P+1)/2.
  auto v = sorted_desc(s);
  std::reverse(v.begin(), v.end());
  double rank_sum = 0.0;
  std::size_t i = 0;
  while (i < v.size()) {
    std::size_t j = i;
    std::size_t p_block = 0;
    while (j < v.size() && v[j].score == v[i].score) p_block += v[j++].is_oos;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    rank_sum += midrank * static_cast<double>(p_block);
    i = j;
  }
  const double P = static_cast<double>(pos), N = static_cast<double>(neg);
  return (rank_sum - P * (P + 1.0) / 2.0) / (P * N);
}

double aupr(std::span<const ScoredQuery> s) {
  std::size_t pos, neg;
  count_classes(s, pos, neg);
  if (pos == 0) throw InvalidArgument("AUPR needs at least one OOS score");
  const auto v = sorted_desc(s);
  double ap = 0.0;
  std::size_t tp = 0, seen = 0, i = 0;
  while (i < v.size()) {
    std::size_t j = i, p_block = 0;
    while (j < v.size() && v[j].score == v[i].score) p_block += v[j++].is_oos;
    tp += p_block;
    seen = j;
    if (p_block > 0) {
      ap += (static_cast<double>(tp) / static_cast<double>(seen)) * (static_cast<double>(p_block) / static_cast<double>(pos));
    }
    i = j;
  }
  return ap;
}

std::vector<ScoredQuery> score_episode(const Episode& ep, const EvalConfig& cfg, const AffineHead& head,
                                       const LcboScorer* scorer, double* accuracy, double* threshold_hits) {
  std::map<ClassId, std::vector<Point>> support;
  for (const auto& [c, pts] : ep.support) {
    auto& out = support[c];
    for (const auto& p : pts) out.push_back(apply_affine(head, p));
  }
  PrototypeContext ctx;
  ctx.prototypes = compute_prototypes(support);
  ctx.generic = cfg.gamma_oos;
  ctx.background_constant = cfg.background_constant;

  std::vector<Point> encoded_queries;
  encoded_queries.reserve(ep.queries.size());
  for (const auto& q : ep.queries) encoded_queries.push_back(apply_affine(head, q.point));

  std::vector<Point> episode_points;
  if (cfg.detector == Detector::centered_groos) {
    for (const auto& [c, pts] : support) episode_points.insert(episode_points.end(), pts.begin(), pts.end());
    episode_points.insert(episode_points.end(), encoded_queries.begin(), encoded_queries.end());
  }
  DetectorInputs aux{scorer, episode_points};

  std::vector<ScoredQuery> out;
  out.reserve(ep.queries.size());
  std::size_t in_total = 0, in_correct = 0, verdict_correct = 0;
  for (std::size_t i = 0; i < ep.queries.size(); ++i) {
    const auto& q = ep.queries[i];
    const Point& hq = encoded_queries[i];
    const double raw = raw_score(cfg.detector, hq, ctx, aux);
    out.push_back({canonical_score(cfg.detector, raw), q.is_oos});
    if (!q.is_oos) {
      ++in_total;
      in_correct += nearest_class(hq, ctx) == q.true_label;
    }
    if (cfg.threshold) {
      const Verdict v = predict(hq, ctx, cfg.detector, *cfg.threshold, aux);
      const bool ok = q.is_oos ? v.is_oos_pred : (!v.is_oos_pred && *v.class_pred == q.true_label);
      verdict_correct += ok;
    }
  }
  if (accuracy) *accuracy = in_total ? static_cast<double>(in_correct) / static_cast<double>(in_total) : 0.0;
  if (threshold_hits) *threshold_hits = static_cast<double>(verdict_correct);
  return out;
}

namespace {

MeanStderr mean_stderr(const std::vector<double>& xs) {
  MeanStderr m;
  m.count = static_cast<int>(xs.size());
  if (xs.empty()) return m;
  m.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.stderr_ = std::sqrt(ss / static_cast<double>(xs.size() - 1)) / std::sqrt(static_cast<double>(xs.size()));
  }
  return m;
}

struct EpisodeOutcome {
  std::vector<ScoredQuery> scores;
  double accuracy = 0.0;
  double hits = 0.0;
  std::size_t in_count = 0;
  std::string error;
};

}  // namespace

MetricsReport evaluate(const EmbeddingDataset& ds_test, const EvalConfig& cfg, const AffineHead& head,
                       const LcboScorer* scorer) {
  if (cfg.episodes < 1) throw InvalidArgument("evaluation needs at least one episode");
  head.validate();
  require_same_dim(ds_test.dim(), head.dim());
  if (cfg.detector == Detector::groos && !cfg.gamma_oos) throw InvalidArgument("groos needs --gamma-oos");
  if (cfg.detector == Detector::background && !cfg.background_constant) throw InvalidArgument("background needs --M");
  if (cfg.detector == Detector::lcbo && !scorer) throw InvalidArgument("lcbo needs a checkpoint with an LCBO scorer");
  if (cfg.gamma_oos) require_same_dim(ds_test.dim(), cfg.gamma_oos->size());

  std::vector<EpisodeOutcome> outcomes(static_cast<std::size_t>(cfg.episodes));
  auto work = [&](int first, int step) {
    for (int e = first; e < cfg.episodes; e += step) {
      auto& o = outcomes[static_cast<std::size_t>(e)];
      try {
        const Episode ep = sample_episode(ds_test, cfg.shape, cfg.seed, static_cast<std::uint64_t>(e));
        o.scores = score_episode(ep, cfg, head, scorer, &o.accuracy, &o.hits);
        o.in_count = ep.queries.size() - ep.num_oos();
      } catch (const std::exception& ex) {
        o.error = ex.what();
      }
    }
  };
  const int workers = std::max(1, std::min(cfg.threads, cfg.episodes));
  if (workers == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
    for (auto& t : pool) t.join();
  }
  for (std::size_t e = 0; e < outcomes.size(); ++e) {
    if (!outcomes[e].error.empty()) throw InvalidArgument("episode " + std::to_string(e) + ": " + outcomes[e].error);
  }

  MetricsReport r;
  r.detector = std::string(detector_name(cfg.detector));
  r.config = cfg;
  std::size_t in_total = 0, query_total = 0;
  double in_correct = 0.0, hits = 0.0;
  std::vector<double> ep_auroc, ep_aupr, ep_acc;
  for (const auto& o : outcomes) {
    r.pooled.insert(r.pooled.end(), o.scores.begin(), o.scores.end());
    in_total += o.in_count;
    in_correct += o.accuracy * static_cast<double>(o.in_count);
    query_total += o.scores.size();
    hits += o.hits;
    if (cfg.per_episode) {
      ep_acc.push_back(o.accuracy);
      std::size_t pos = 0;
      for (const auto& s : o.scores) pos += s.is_oos;
      if (pos > 0 && pos < o.scores.size()) {
        ep_auroc.push_back(100.0 * auroc(o.scores));
        ep_aupr.push_back(100.0 * aupr(o.scores));
      }
    }
  }
  r.accuracy_in_support = in_total ? in_correct / static_cast<double>(in_total) : 0.0;
  if (cfg.threshold && query_total) r.threshold_accuracy = hits / static_cast<double>(query_total);
  try {
    r.auroc_x100 = 100.0 * auroc(r.pooled);
    r.aupr_x100 = 100.0 * aupr(r.pooled);
  } catch (const InvalidArgument& e) {
    r.auroc_x100.reset();
    r.aupr_x100.reset();
    r.metrics_error = std::string(e.what()) + "; AUROC/AUPR need OOS queries (qout > 0) and in-support queries";
  }
  if (cfg.per_episode) {
    r.accuracy_per_episode = mean_stderr(ep_acc);
    if (!ep_auroc.empty()) {
      r.auroc_per_episode = mean_stderr(ep_auroc);
      r.aupr_per_episode = mean_stderr(ep_aupr);
    }
  }
  return r;
}

nlohmann::ordered_json MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["detector"] = detector;
  j["episodes"] = config.episodes;
  j["n"] = config.shape.shots;
  j["k"] = config.shape.ways;
  j["q_in"] = config.shape.queries_in;
  j["q_out"] = config.shape.queries_out;
  j["auroc_x100"] = auroc_x100 ? nlohmann::ordered_json(*auroc_x100) : nlohmann::ordered_json(nullptr);
  j["aupr_x100"] = aupr_x100 ? nlohmann::ordered_json(*aupr_x100) : nlohmann::ordered_json(nullptr);
  j["accuracy_in_support"] = accuracy_in_support;
  if (threshold_accuracy) j["threshold_accuracy"] = *threshold_accuracy;
  if (metrics_error) j["metrics_error"] = *metrics_error;
  if (config.per_episode) {
    nlohmann::ordered_json pe;
    auto put = [&](const char* name, const std::optional<MeanStderr>& m) {
      if (!m) return;
      pe[std::string(name) + "_mean"] = m->mean;
      pe[std::string(name) + "_stderr"] = m->stderr_;
    };
    put("auroc", auroc_per_episode);
    put("aupr", aupr_per_episode);
    put("accuracy", accuracy_per_episode);
    j["per_episode"] = std::move(pe);
  }
  j["seed"] = config.seed;
  return j;
}

}  // namespace ooskit
