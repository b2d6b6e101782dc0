#include "ooskit/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ooskit/rng.hpp"

namespace ooskit {

Detector parse_detector(std::string_view name) {
  if (name == "mindist") return Detector::min_dist;
  if (name == "lcbo") return Detector::lcbo;
  if (name == "background") return Detector::background;
  if (name == "groos") return Detector::groos;
  if (name == "centered-groos") return Detector::centered_groos;
  throw InvalidArgument("unknown detector '" + std::string(name) +
                        "' (expected mindist|lcbo|background|groos|centered-groos)");
}

std::string_view detector_name(Detector d) {
  switch (d) {
    case Detector::min_dist: return "mindist";
    case Detector::lcbo: return "lcbo";
    case Detector::background: return "background";
    case Detector::groos: return "groos";
    case Detector::centered_groos: return "centered-groos";
  }
  return "?";
}

bool raw_score_rises_with_oos(Detector d) {
  return d != Detector::min_dist && d != Detector::lcbo;
}

bool is_softmax_detector(Detector d) { return raw_score_rises_with_oos(d); }

LcboInput parse_lcbo_input(std::string_view name) {
  if (name == "concat") return LcboInput::concat;
  if (name == "difference") return LcboInput::difference;
  if (name == "both") return LcboInput::both;
  throw InvalidArgument("unknown LCBO input encoding '" + std::string(name) + "'");
}

std::string_view lcbo_input_name(LcboInput in) {
  switch (in) {
    case LcboInput::concat: return "concat";
    case LcboInput::difference: return "difference";
    case LcboInput::both: return "both";
  }
  return "?";
}

namespace {

Index input_multiplier(LcboInput in) {
  switch (in) {
    case LcboInput::concat: return 2;
    case LcboInput::difference: return 1;
    case LcboInput::both: return 3;
  }
  return 2;
}

std::vector<Index> widths_for(Index embed_dim, const std::vector<Index>& hidden, LcboInput input) {
  if (embed_dim < 1) throw InvalidArgument("LCBO embedding dimension must be positive");
  std::vector<Index> widths{embed_dim * input_multiplier(input)};
  for (Index h : hidden) {
    if (h < 1) throw InvalidArgument("LCBO hidden widths must be positive");
    widths.push_back(h);
  }
  widths.push_back(1);
  return widths;
}

}  // namespace

LcboScorer::LcboScorer(std::vector<DenseLayer> layers, LcboInput input)
    : layers_(std::move(layers)), input_(input) {
  validate();
}

LcboScorer LcboScorer::zero(Index embed_dim, std::vector<Index> hidden, LcboInput input) {
  const auto widths = widths_for(embed_dim, hidden, input);
  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    layers.push_back({Eigen::MatrixXd::Zero(widths[i + 1], widths[i]), Eigen::VectorXd::Zero(widths[i + 1])});
  }
  return LcboScorer(std::move(layers), input);
}

LcboScorer LcboScorer::random(Index embed_dim, std::uint64_t seed, std::vector<Index> hidden,
                              LcboInput input) {
  LcboScorer s = zero(embed_dim, std::move(hidden), input);
  CounterRng rng(seed, 0, StreamDomain::init);
  for (auto& layer : s.layers_) {
    const double scale = std::sqrt(2.0 / static_cast<double>(layer.w.cols()));
    for (Index c = 0; c < layer.w.cols(); ++c)
      for (Index r = 0; r < layer.w.rows(); ++r) layer.w(r, c) = scale * rng.normal();
  }
  return s;
}

Index LcboScorer::input_width() const {
  if (layers_.empty()) throw InvalidArgument("LCBO scorer has no layers");
  return layers_.front().w.cols();
}

Index LcboScorer::embed_dim() const { return input_width() / input_multiplier(input_); }

std::vector<Index> LcboScorer::dims() const {
  std::vector<Index> out{input_width()};
  for (const auto& l : layers_) out.push_back(l.w.rows());
  return out;
}

void LcboScorer::validate() const {
  if (layers_.empty()) throw InvalidArgument("LCBO scorer has no layers");
  if (layers_.front().w.cols() % input_multiplier(input_) != 0) {
    throw InvalidArgument("LCBO input width does not match its input encoding");
  }
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    require_same_dim(l.w.rows(), l.b.size());
    if (i > 0) require_same_dim(layers_[i - 1].w.rows(), l.w.cols());
    require_finite(l.w, "LCBO weight");
    require_finite(l.b, "LCBO bias");
  }
  if (layers_.back().w.rows() != 1) throw InvalidArgument("LCBO output width must be 1");
}

Eigen::VectorXd LcboScorer::encode(const Point& prototype, const Point& query) const {
  const Index d = embed_dim();
  require_same_dim(d, prototype.size());
  require_same_dim(d, query.size());
  Eigen::VectorXd x(input_width());
  switch (input_) {
    case LcboInput::concat:
      x << prototype, query;
      break;
    case LcboInput::difference:
      x = prototype - query;
      break;
    case LcboInput::both:
      x << prototype, query, prototype - query;
      break;
  }
  return x;
}

double LcboScorer::forward(const Eigen::VectorXd& input, Trace* trace) const {
  require_same_dim(input_width(), input.size());
  Eigen::VectorXd a = input;
  if (trace) {
    trace->inputs.clear();
    trace->pre.clear();
  }
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Eigen::VectorXd z = layers_[i].w * a + layers_[i].b;
    if (trace) {
      trace->inputs.push_back(a);
      trace->pre.push_back(z);
    }
    a = (i + 1 < layers_.size()) ? Eigen::VectorXd(z.cwiseMax(0.0)) : z;
  }
  return a[0];
}

Eigen::VectorXd LcboScorer::backward(const Trace& trace, double upstream,
                                     std::vector<DenseLayer>& grads) const {
  Eigen::VectorXd delta = Eigen::VectorXd::Constant(1, upstream);
  for (std::size_t r = layers_.size(); r-- > 0;) {
    if (r + 1 < layers_.size()) {
      delta = delta.cwiseProduct((trace.pre[r].array() > 0.0).cast<double>().matrix());
    }
    grads[r].w.noalias() += delta * trace.inputs[r].transpose();
    grads[r].b += delta;
    delta = layers_[r].w.transpose() * delta;
  }
  return delta;
}

void LcboScorer::split_input_gradient(const Eigen::VectorXd& g, Eigen::VectorXd& g_proto,
                                      Eigen::VectorXd& g_query) const {
  const Index d = embed_dim();
  switch (input_) {
    case LcboInput::concat:
      g_proto = g.head(d);
      g_query = g.tail(d);
      break;
    case LcboInput::difference:
      g_proto = g;
      g_query = -g;
      break;
    case LcboInput::both:
      g_proto = g.head(d) + g.tail(d);
      g_query = g.segment(d, d) - g.tail(d);
      break;
  }
}

std::vector<DenseLayer> LcboScorer::zero_like() const {
  std::vector<DenseLayer> out;
  for (const auto& l : layers_) {
    out.push_back({Eigen::MatrixXd::Zero(l.w.rows(), l.w.cols()), Eigen::VectorXd::Zero(l.b.size())});
  }
  return out;
}

double score_min_dist(const Point& q, const PrototypeContext& ctx) {
  return -distance_vector(q, ctx, DistanceMode::standard).minCoeff();
}

double score_lcbo(const Point& q, const PrototypeContext& ctx, const LcboScorer& scorer) {
  if (ctx.prototypes.empty()) throw InvalidArgument("prototype context has no prototypes");
  require_same_dim(scorer.embed_dim(), q.size());
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& [id, proto] : ctx.prototypes) best = std::max(best, scorer(proto, q));
  return best;
}

double score_background(const Point& q, const PrototypeContext& ctx) {
  if (!ctx.background_constant) throw InvalidArgument("background detector requires the constant M");
  const auto p = softmax_neg(distance_vector(q, ctx, DistanceMode::background));
  return p[p.size() - 1];
}

double score_groos(const Point& q, const PrototypeContext& ctx) {
  if (!ctx.generic) throw InvalidArgument("GROOS requires a generic representation");
  const auto p = softmax_neg(distance_vector(q, ctx, DistanceMode::generic));
  return p[p.size() - 1];
}

double score_centered_groos(const Point& q, std::span<const Point> episode_points,
                            const PrototypeContext& ctx) {
  if (episode_points.empty()) throw InvalidArgument("centered GROOS needs the episode's points");
  PrototypeContext centered = ctx;
  centered.generic = centroid(std::vector<Point>(episode_points.begin(), episode_points.end()));
  return score_groos(q, centered);
}

double raw_score(Detector detector, const Point& q, const PrototypeContext& ctx,
                 const DetectorInputs& aux) {
  switch (detector) {
    case Detector::min_dist:
      return score_min_dist(q, ctx);
    case Detector::lcbo:
      if (!aux.scorer) throw InvalidArgument("LCBO detector requires a scorer network");
      return score_lcbo(q, ctx, *aux.scorer);
    case Detector::background:
      return score_background(q, ctx);
    case Detector::groos:
      return score_groos(q, ctx);
    case Detector::centered_groos:
      return score_centered_groos(q, aux.episode_points, ctx);
  }
  throw InvalidArgument("invalid detector id");
}

ClassId nearest_class(const Point& q, const PrototypeContext& ctx) {
  if (ctx.prototypes.empty()) throw InvalidArgument("prototype context has no prototypes");
  ClassId best = ctx.prototypes.begin()->first;
  double best_d = std::numeric_limits<double>::infinity();
  // Ascending iteration with strict < keeps the lowest id on ties.
  for (const auto& [id, proto] : ctx.prototypes) {
    const double d = euclidean_distance(q, proto);
    if (d < best_d) {
      best_d = d;
      best = id;
    }
  }
  return best;
}

Verdict predict(const Point& q, const PrototypeContext& ctx, Detector detector, double threshold,
                const DetectorInputs& aux) {
  if (is_softmax_detector(detector) && !(threshold >= 0.0 && threshold <= 1.0)) {
    throw InvalidArgument("softmax-based detectors need a threshold in [0, 1]");
  }
  Verdict v;
  v.raw_score = raw_score(detector, q, ctx, aux);
  v.score = canonical_score(detector, v.raw_score);
  v.is_oos_pred = v.score > canonical_score(detector, threshold);
  if (!v.is_oos_pred) v.class_pred = nearest_class(q, ctx);
  if (is_softmax_detector(detector)) {
    v.class_probs = softmax_neg(distance_vector(q, ctx, DistanceMode::standard));
  }
  return v;
}

nlohmann::ordered_json layers_to_json(const std::vector<DenseLayer>& layers) {
  nlohmann::ordered_json j;
  auto dims = nlohmann::ordered_json::array();
  if (!layers.empty()) dims.push_back(layers.front().w.cols());
  for (const auto& l : layers) dims.push_back(l.w.rows());
  j["dims"] = dims;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& l : layers) {
    nlohmann::ordered_json lj;
    auto w = nlohmann::ordered_json::array();
    for (Index r = 0; r < l.w.rows(); ++r) {
      auto row = nlohmann::ordered_json::array();
      for (Index c = 0; c < l.w.cols(); ++c) row.push_back(l.w(r, c));
      w.push_back(std::move(row));
    }
    lj["w"] = std::move(w);
    lj["b"] = std::vector<double>(l.b.data(), l.b.data() + l.b.size());
    arr.push_back(std::move(lj));
  }
  j["layers"] = std::move(arr);
  return j;
}

std::vector<DenseLayer> layers_from_json(const nlohmann::json& j) {
  try {
    const auto dims = j.at("dims").get<std::vector<Index>>();
    const auto& arr = j.at("layers");
    if (dims.size() != arr.size() + 1) throw InvalidArgument("\"dims\" must list one more width than \"layers\"");
    std::vector<DenseLayer> layers;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const auto rows = arr[i].at("w").get<std::vector<std::vector<double>>>();
      const auto b = arr[i].at("b").get<std::vector<double>>();
      const Index out = dims[i + 1], in = dims[i];
      if (static_cast<Index>(rows.size()) != out || static_cast<Index>(b.size()) != out) {
        throw InvalidArgument("layer " + std::to_string(i) + " does not match \"dims\"");
      }
      DenseLayer l{Eigen::MatrixXd(out, in), Eigen::Map<const Eigen::VectorXd>(b.data(), out)};
      for (Index r = 0; r < out; ++r) {
        if (static_cast<Index>(rows[r].size()) != in) {
          throw InvalidArgument("layer " + std::to_string(i) + " row width does not match \"dims\"");
        }
        for (Index c = 0; c < in; ++c) l.w(r, c) = rows[r][c];
      }
      layers.push_back(std::move(l));
    }
    return layers;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed parameter JSON: ") + e.what());
  }
}

nlohmann::ordered_json to_json(const LcboScorer& scorer) {
  auto j = layers_to_json(scorer.layers());
  if (scorer.input_mode() != LcboInput::concat) j["input"] = std::string(lcbo_input_name(scorer.input_mode()));
  return j;
}

LcboScorer lcbo_from_json(const nlohmann::json& j) {
  LcboInput input = LcboInput::concat;
  if (j.contains("input")) input = parse_lcbo_input(j.at("input").get<std::string>());
  return LcboScorer(layers_from_json(j), input);
}

nlohmann::ordered_json to_json(const AffineHead& head) { return layers_to_json({{head.W, head.b}}); }

AffineHead head_from_json(const nlohmann::json& j) {
  auto layers = layers_from_json(j);
  if (layers.size() != 1) throw InvalidArgument("affine head JSON must have exactly one layer");
  AffineHead head{std::move(layers[0].w), std::move(layers[0].b)};
  head.validate();
  return head;
}

}  // namespace ooskit
