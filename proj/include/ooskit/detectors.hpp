#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ooskit/metric_core.hpp"

namespace ooskit {

enum class Detector { min_dist, lcbo, background, groos, centered_groos };

Detector parse_detector(std::string_view name);
std::string_view detector_name(Detector d);

// Raw scores of MinDist and LCBO fall as queries look more OOS; the softmax
// scores rise.
bool raw_score_rises_with_oos(Detector d);
bool is_softmax_detector(Detector d);

/// Maps a raw score (or a threshold in the raw orientation) onto the
/// canonical scale where larger means more OOS-like.
inline double canonical_score(Detector d, double raw) {
  return raw_score_rises_with_oos(d) ? raw : -raw;
}

/// How a (prototype, query) pair is fed to the LCBO network.
enum class LcboInput { concat, difference, both };

LcboInput parse_lcbo_input(std::string_view name);
std::string_view lcbo_input_name(LcboInput in);

struct DenseLayer {
  Eigen::MatrixXd w;  // out x in
  Eigen::VectorXd b;  // out
};

/// Fully-connected scorer R^{width} -> R with rectifier hidden layers and a
/// linear output, applied to one prototype/query pair at a time.
class LcboScorer {
 public:
  // Cached activations of one forward pass, for backpropagation.
  struct Trace {
    std::vector<Eigen::VectorXd> inputs;  // input to each layer
    std::vector<Eigen::VectorXd> pre;     // pre-activation of each layer
  };

  LcboScorer() = default;
  LcboScorer(std::vector<DenseLayer> layers, LcboInput input = LcboInput::concat);

  /// He-style initialization from the counter RNG. Default hidden = {64}.
  static LcboScorer random(Index embed_dim, std::uint64_t seed, std::vector<Index> hidden = {64},
                           LcboInput input = LcboInput::concat);
  static LcboScorer zero(Index embed_dim, std::vector<Index> hidden = {64},
                         LcboInput input = LcboInput::concat);

  LcboInput input_mode() const { return input_; }
  Index input_width() const;
  Index embed_dim() const;
  // Layer widths, input first: e.g. {2d, 64, 1}.
  std::vector<Index> dims() const;

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }

  Eigen::VectorXd encode(const Point& prototype, const Point& query) const;
  double forward(const Eigen::VectorXd& input, Trace* trace = nullptr) const;
  double operator()(const Point& prototype, const Point& query) const {
    return forward(encode(prototype, query));
  }

  // Accumulates upstream * d(out)/d(params) into grads (same shapes as
  // layers()) and returns upstream * d(out)/d(input).
  Eigen::VectorXd backward(const Trace& trace, double upstream, std::vector<DenseLayer>& grads) const;

  // Splits an input-space gradient into its prototype and query parts.
  void split_input_gradient(const Eigen::VectorXd& g, Eigen::VectorXd& g_proto,
                            Eigen::VectorXd& g_query) const;

  std::vector<DenseLayer> zero_like() const;
  void validate() const;

 private:
  std::vector<DenseLayer> layers_;
  LcboInput input_ = LcboInput::concat;
};

/// MinDist confidence in its raw orientation: -min_c ||gamma_c - q||.
double score_min_dist(const Point& q, const PrototypeContext& ctx);
/// max_c scorer(gamma_c, q), raw orientation.
double score_lcbo(const Point& q, const PrototypeContext& ctx, const LcboScorer& scorer);
/// Last coordinate of softmax(-(d_1..d_k, M)).
double score_background(const Point& q, const PrototypeContext& ctx);
/// Last coordinate of softmax(-(d_1..d_k, d_oos)).
double score_groos(const Point& q, const PrototypeContext& ctx);
/// score_groos with the generic point moved to the centroid of episode_points.
double score_centered_groos(const Point& q, std::span<const Point> episode_points,
                            const PrototypeContext& ctx);

/// Detector-specific extras needed by predict/score.
struct DetectorInputs {
  const LcboScorer* scorer = nullptr;
  std::span<const Point> episode_points;
};

double raw_score(Detector detector, const Point& q, const PrototypeContext& ctx,
                 const DetectorInputs& aux);

struct Verdict {
  double score = 0.0;      // canonical: larger = more OOS-like
  double raw_score = 0.0;  // the detector's native orientation
  bool is_oos_pred = false;
  std::optional<ClassId> class_pred;
  std::optional<Eigen::VectorXd> class_probs;
};

/// Threshold decision. `threshold` is given in the detector's raw
/// orientation (a probability in [0,1] for softmax detectors, typically a
/// negative distance for MinDist). OOS iff the canonical score strictly
/// exceeds the canonical threshold; otherwise the nearest prototype wins,
/// lowest class id on ties.
Verdict predict(const Point& q, const PrototypeContext& ctx, Detector detector, double threshold,
                const DetectorInputs& aux = {});

/// argmin_c ||gamma_c - q||, lowest class id on ties.
ClassId nearest_class(const Point& q, const PrototypeContext& ctx);

// {"dims": [...], "layers": [{"w": [[...]], "b": [...]}, ...]}
nlohmann::ordered_json layers_to_json(const std::vector<DenseLayer>& layers);
std::vector<DenseLayer> layers_from_json(const nlohmann::json& j);

nlohmann::ordered_json to_json(const LcboScorer& scorer);
LcboScorer lcbo_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const AffineHead& head);
AffineHead head_from_json(const nlohmann::json& j);

}  // namespace ooskit
