#include "ooskit/metric_core.hpp"

namespace ooskit {

Index PrototypeContext::dim() const {
  if (prototypes.empty()) throw InvalidArgument("prototype context has no prototypes");
  return prototypes.begin()->second.size();
}

void PrototypeContext::validate() const {
  const Index d = dim();
  if (d < 1) throw InvalidArgument("prototype dimension must be at least 1");
  for (const auto& [id, p] : prototypes) {
    require_same_dim(d, p.size());
    require_finite(p, "prototype");
  }
  if (generic) {
    require_same_dim(d, generic->size());
    require_finite(*generic, "generic representation");
  }
  if (background_constant && !(std::isfinite(*background_constant) && *background_constant >= 0.0)) {
    throw InvalidArgument("background constant must be finite and nonnegative");
  }
}

Point centroid(const std::vector<Point>& points) {
  if (points.empty()) throw InvalidArgument("centroid of an empty point set");
  Point sum = Point::Zero(points.front().size());
  for (const auto& p : points) {
    require_same_dim(sum.size(), p.size());
    sum += p;
  }
  return sum / static_cast<double>(points.size());
}

std::map<ClassId, Point> compute_prototypes(const std::map<ClassId, std::vector<Point>>& support) {
  std::map<ClassId, Point> out;
  Index d = -1;
  for (const auto& [id, points] : support) {
    if (points.empty()) {
      throw InvalidArgument("class " + std::to_string(id) + " has no support points");
    }
    if (d < 0) d = points.front().size();
    require_same_dim(d, points.front().size());
    out.emplace(id, centroid(points));
  }
  return out;
}

Eigen::VectorXd distance_vector(const Point& q, const PrototypeContext& ctx, DistanceMode mode) {
  const Index k = ctx.num_classes();
  if (k < 1) throw InvalidArgument("prototype context has no prototypes");
  const Index extra = mode == DistanceMode::standard ? 0 : 1;
  Eigen::VectorXd d(k + extra);
  Index i = 0;
  for (const auto& [id, proto] : ctx.prototypes) d[i++] = euclidean_distance(q, proto);
  switch (mode) {
    case DistanceMode::standard:
      break;
    case DistanceMode::generic:
      if (!ctx.generic) throw InvalidArgument("generic mode requires a generic representation");
      d[k] = euclidean_distance(q, *ctx.generic);
      break;
    case DistanceMode::background:
      if (!ctx.background_constant) throw InvalidArgument("background mode requires the constant M");
      d[k] = *ctx.background_constant;
      break;
  }
  return d;
}

Eigen::VectorXd softmax_neg(const Eigen::VectorXd& dists) {
  if (dists.size() == 0) throw InvalidArgument("softmax of an empty vector");
  require_finite(dists, "distance vector");
  const double m = (-dists).maxCoeff();
  Eigen::VectorXd e = (-dists.array() - m).exp().matrix();
  return e / e.sum();
}

}  // namespace ooskit
