#include "ooskit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ooskit/simplex.hpp"

namespace ooskit {

namespace {

struct Slot {
  ClassId id;
  const Point* point;
};

std::vector<Slot> slots_of(const PrototypeContext& ctx, bool with_generic) {
  std::vector<Slot> s;
  for (const auto& [id, p] : ctx.prototypes) s.push_back({id, &p});
  if (with_generic) {
    if (!ctx.generic) throw InvalidArgument("generic representation required");
    s.push_back({kOosSlot, &*ctx.generic});
  }
  return s;
}

const Point& prototype_of(const PrototypeContext& ctx, ClassId i) {
  const auto it = ctx.prototypes.find(i);
  if (it == ctx.prototypes.end()) throw InvalidArgument("unknown class id " + std::to_string(i));
  return it->second;
}

}  // namespace

Hyperplane bisector(const Point& x1, const Point& x2) {
  require_same_dim(x1.size(), x2.size());
  if (x1 == x2) throw InvalidArgument("bisector of coincident points is undefined");
  return {x1 - x2, 0.5 * (x1.squaredNorm() - x2.squaredNorm())};
}

void require_distinct_points(const PrototypeContext& ctx) {
  ctx.validate();
  const auto slots = slots_of(ctx, ctx.generic.has_value());
  for (std::size_t a = 0; a < slots.size(); ++a)
    for (std::size_t b = a + 1; b < slots.size(); ++b)
      if (*slots[a].point == *slots[b].point) throw InvalidArgument("prototypes/generic point must be pairwise distinct");
}

CellLabel classify_cell(const Point& x, const PrototypeContext& ctx, double tol) {
  if (tol < 0.0) throw InvalidArgument("tolerance must be nonnegative");
  require_distinct_points(ctx);
  require_same_dim(ctx.dim(), x.size());
  const auto slots = slots_of(ctx, ctx.generic.has_value());
  std::vector<double> dist(slots.size());
  for (std::size_t s = 0; s < slots.size(); ++s) dist[s] = (x - *slots[s].point).norm();
  std::vector<std::size_t> order(slots.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
  CellLabel label;
  for (std::size_t r = 0; r < order.size(); ++r) {
    label.ordering.push_back(slots[order[r]].id);
    if (r > 0 && dist[order[r]] - dist[order[r - 1]] <= tol) label.on_boundary = true;
  }
  return label;
}

bool HalfSpaceSystem::contains(const Point& w) const {
  return std::all_of(rows.begin(), rows.end(), [&](const Hyperplane& h) { return h.signed_value(w) < 0.0; });
}

double HalfSpaceSystem::margin(const Point& w) const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& h : rows) m = std::min(m, -h.signed_value(w) / h.normal.norm());
  return m;
}

HalfSpaceSystem viable_system(ClassId i, const PrototypeContext& ctx, ViabilityMode mode) {
  ctx.validate();
  const Point& gi = prototype_of(ctx, i);
  HalfSpaceSystem sys;
  sys.dim = ctx.dim();
  // "closer to a than to b" is the x2 side of bisector(b, a).
  if (mode == ViabilityMode::standard) {
    for (const auto& [j, gj] : ctx.prototypes)
      if (j != i) sys.rows.push_back(bisector(gj, gi));
    return sys;
  }
  if (!ctx.generic) throw InvalidArgument("generic-mode viability requires a generic representation");
  const Point& go = *ctx.generic;
  sys.rows.push_back(bisector(go, gi));
  for (const auto& [j, gj] : ctx.prototypes)
    if (j != i) sys.rows.push_back(bisector(gj, go));
  return sys;
}

RegionResult region_nonempty(const HalfSpaceSystem& sys, double tol) {
  const Index d = sys.dim;
  if (d < 1) throw InvalidArgument("half-space system has no dimension");
  const Index m = static_cast<Index>(sys.rows.size());
  // Variables [w+ (d), w- (d), s+, s-] >= 0; rows a_i.w + s <= beta_i, s <= 1.
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m + 1, 2 * d + 2);
  Eigen::VectorXd b(m + 1);
  for (Index r = 0; r < m; ++r) {
    const auto& h = sys.rows[r];
    require_same_dim(d, h.normal.size());
    const double norm = h.normal.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) throw InvalidArgument("half-space normal must be nonzero and finite");
    A.row(r).head(d) = h.normal.transpose() / norm;
    A.row(r).segment(d, d) = -h.normal.transpose() / norm;
    A(r, 2 * d) = 1.0;
    A(r, 2 * d + 1) = -1.0;
    b[r] = h.offset / norm;
  }
  A(m, 2 * d) = 1.0;
  A(m, 2 * d + 1) = -1.0;
  b[m] = 1.0;
  Eigen::VectorXd c = Eigen::VectorXd::Zero(2 * d + 2);
  c[2 * d] = 1.0;
  c[2 * d + 1] = -1.0;

  const auto lp_result = lp::maximize(A, b, c);
  if (lp_result.status != lp::Status::optimal) {
    throw IndeterminateError("slack LP did not reach an optimum (status " +
                             std::to_string(static_cast<int>(lp_result.status)) + ")");
  }
  RegionResult out;
  out.slack = lp_result.objective;
  out.nonempty = out.slack > tol;
  if (out.nonempty) {
    Point w = lp_result.x.head(d) - lp_result.x.segment(d, d);
    if (!sys.contains(w)) {
      throw IndeterminateError("slack LP reported an interior point that fails the strict inequalities");
    }
    out.witness = std::move(w);
  }
  return out;
}

bool oos_core_contains(const Point& x, const PrototypeContext& ctx) {
  if (!ctx.generic) throw InvalidArgument("OOS core requires a generic representation");
  const double d_oos = euclidean_distance(x, *ctx.generic);
  for (const auto& [id, p] : ctx.prototypes)
    if (!(d_oos < euclidean_distance(x, p))) return false;
  return true;
}

bool is_viable(const Point& x, ClassId i, const PrototypeContext& ctx, ViabilityMode mode) {
  const double d_i = euclidean_distance(x, prototype_of(ctx, i));
  double bar = std::numeric_limits<double>::infinity();
  if (mode == ViabilityMode::generic) {
    if (!ctx.generic) throw InvalidArgument("generic-mode viability requires a generic representation");
    const double d_oos = euclidean_distance(x, *ctx.generic);
    if (!(d_i < d_oos)) return false;
    bar = d_oos;
  } else {
    bar = d_i;
  }
  for (const auto& [j, gj] : ctx.prototypes)
    if (j != i && !(bar < euclidean_distance(x, gj))) return false;
  return true;
}

AdjacencyWitness adjacency_witness(const Point& x, ClassId i, const PrototypeContext& ctx) {
  require_distinct_points(ctx);
  if (!ctx.generic) throw InvalidArgument("adjacency requires a generic representation");
  if (!is_viable(x, i, ctx, ViabilityMode::generic)) {
    throw InvalidArgument("adjacency witness needs an i-viable starting point");
  }
  const Point& go = *ctx.generic;
  const Point& gi = prototype_of(ctx, i);
  const Point dir = go - x;
  const Hyperplane h = bisector(gi, go);
  const double denom = h.normal.dot(dir);
  if (denom == 0.0) throw RuntimeError("segment to the generic point is parallel to the bisector");
  AdjacencyWitness out;
  out.t = (h.offset - h.normal.dot(x)) / denom;
  out.z = x + out.t * dir;

  // Initial delta: half the distance from z to the nearest other bisector,
  // expressed in segment parameter units.
  const double seg_len = dir.norm();
  const auto slots = slots_of(ctx, true);
  double nearest = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < slots.size(); ++a) {
    for (std::size_t b = a + 1; b < slots.size(); ++b) {
      const bool is_own = (slots[a].id == i && slots[b].id == kOosSlot) || (slots[b].id == i && slots[a].id == kOosSlot);
      if (is_own) continue;
      const Hyperplane other = bisector(*slots[a].point, *slots[b].point);
      nearest = std::min(nearest, std::abs(other.signed_value(out.z)) / other.normal.norm());
    }
  }
  double delta = std::min(out.t, 1.0 - out.t) / 2.0;
  if (std::isfinite(nearest) && nearest > 0.0) delta = std::min(delta, 0.5 * nearest / seg_len);

  for (int halving = 0; halving <= 60; ++halving, delta *= 0.5) {
    Point before = x + (out.t - delta) * dir;
    Point after = x + (out.t + delta) * dir;
    if (is_viable(before, i, ctx, ViabilityMode::generic) && oos_core_contains(after, ctx)) {
      out.delta = delta;
      out.viable_side = std::move(before);
      out.core_side = std::move(after);
      return out;
    }
  }
  throw RuntimeError("no adjacency step found within 60 halvings");
}

}  // namespace ooskit
