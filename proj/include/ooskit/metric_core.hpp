#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "ooskit/errors.hpp"

namespace ooskit {

using ClassId = int;
using Index = Eigen::Index;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// An embedding coordinate vector in R^d.
using Point = Eigen::VectorXd;

inline void require_same_dim(Index expected, Index got) {
  if (expected != got) throw DimensionMismatch(expected, got);
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& x) {
  return x.allFinite();
}

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& x, const char* what) {
  if (!x.allFinite()) throw InvalidArgument(std::string(what) + " has non-finite coordinates");
}

template <typename A, typename B>
typename A::Scalar euclidean_distance(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  require_same_dim(a.size(), b.size());
  return (a - b).norm();
}

/// L(x) = W x + b. W is square and need not be invertible.
template <typename Scalar>
struct BasicAffineHead {
  Matrix<Scalar> W;
  Vector<Scalar> b;

  static BasicAffineHead identity(Index d) {
    return {Matrix<Scalar>::Identity(d, d), Vector<Scalar>::Zero(d)};
  }

  Index dim() const { return b.size(); }

  void validate() const {
    if (W.rows() != W.cols()) throw InvalidArgument("affine head weight must be square");
    require_same_dim(W.rows(), b.size());
    require_finite(W, "affine head weight");
    require_finite(b, "affine head bias");
  }
};

using AffineHead = BasicAffineHead<double>;

template <typename Scalar, typename Derived>
Vector<Scalar> apply_affine(const BasicAffineHead<Scalar>& head, const Eigen::MatrixBase<Derived>& x) {
  require_same_dim(head.dim(), x.size());
  return head.W * x + head.b;
}

/// Class prototypes (ascending class id) plus the optional OOS reference:
/// a generic point or a background constant.
struct PrototypeContext {
  std::map<ClassId, Point> prototypes;
  std::optional<Point> generic;
  std::optional<double> background_constant;

  Index dim() const;
  Index num_classes() const { return static_cast<Index>(prototypes.size()); }
  // Throws when empty, ragged, or non-finite.
  void validate() const;
};

/// Coordinate-wise mean of each class's points.
std::map<ClassId, Point> compute_prototypes(const std::map<ClassId, std::vector<Point>>& support);

Point centroid(const std::vector<Point>& points);

enum class DistanceMode { standard, generic, background };

/// (d_1..d_k) in ascending class-id order, with d_oos or M appended for the
/// generic and background modes.
Eigen::VectorXd distance_vector(const Point& q, const PrototypeContext& ctx, DistanceMode mode);

/// softmax(-d), max-shifted.
Eigen::VectorXd softmax_neg(const Eigen::VectorXd& dists);

}  // namespace ooskit
