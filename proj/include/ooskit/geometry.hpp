#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ooskit/metric_core.hpp"

namespace ooskit {

/// Slot label for the generic point in orderings. Class ids are >= 0.
inline constexpr ClassId kOosSlot = -1;

/// {w : <w, normal> = offset}.
struct Hyperplane {
  Eigen::VectorXd normal;
  double offset = 0.0;

  double signed_value(const Point& w) const { return normal.dot(w) - offset; }
};

/// H_{x1,x2}: normal x1 - x2, offset (|x1|^2 - |x2|^2) / 2. Points on the
/// x2 side satisfy <w, normal> < offset.
Hyperplane bisector(const Point& x1, const Point& x2);

struct CellLabel {
  std::vector<ClassId> ordering;  // slots by ascending distance; kOosSlot for the generic point
  bool on_boundary = false;

  bool operator==(const CellLabel&) const = default;
};

/// Orders {prototypes, generic} by distance to x. Adjacent distances within
/// `tol` of each other put x on the boundary set. Throws if any two of the
/// points coincide.
CellLabel classify_cell(const Point& x, const PrototypeContext& ctx, double tol = 1e-12);

/// Strict system <w, normal_i> < offset_i.
struct HalfSpaceSystem {
  Index dim = 0;
  std::vector<Hyperplane> rows;

  bool contains(const Point& w) const;
  // min_i (offset_i - <w, normal_i>) / |normal_i|; positive iff w is strictly inside.
  double margin(const Point& w) const;
};

enum class ViabilityMode { standard, generic };

/// Inequalities cutting out the i-viable region: d_i < d_j for all j != i in
/// standard mode; d_i < d_oos and d_oos < d_j in generic mode.
HalfSpaceSystem viable_system(ClassId i, const PrototypeContext& ctx, ViabilityMode mode);

struct RegionResult {
  bool nonempty = false;
  std::optional<Point> witness;
  double slack = 0.0;  // radius of the largest inscribed ball found, capped at 1
};

/// Decides whether the open polyhedron has interior by maximizing a uniform
/// slack s (rows normalized, s <= 1) with the simplex method; nonempty iff
/// s* > tol. Throws IndeterminateError when the LP does not settle.
RegionResult region_nonempty(const HalfSpaceSystem& sys, double tol = 1e-7);

bool oos_core_contains(const Point& x, const PrototypeContext& ctx);

/// Strict d_i < d_oos < d_j for all j != i (generic) or d_i < d_j (standard).
bool is_viable(const Point& x, ClassId i, const PrototypeContext& ctx, ViabilityMode mode);

struct AdjacencyWitness {
  Point z;         // on [x, gamma_oos], equidistant to gamma_i and gamma_oos
  double t = 0.0;  // z = x + t (gamma_oos - x)
  double delta = 0.0;
  Point viable_side;  // x + (t - delta)(gamma_oos - x), i-viable
  Point core_side;    // x + (t + delta)(gamma_oos - x), in the OOS core
};

/// Constructive adjacency of the i-viable region and the OOS core, starting
/// from a generic-mode i-viable point x.
AdjacencyWitness adjacency_witness(const Point& x, ClassId i, const PrototypeContext& ctx);

/// Throws InvalidArgument when any two of prototypes/generic coincide.
void require_distinct_points(const PrototypeContext& ctx);

}  // namespace ooskit
