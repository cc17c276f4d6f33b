#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>

#include <Eigen/Core>

#include "smoothstep/errors.hpp"
#include "smoothstep/types.hpp"

namespace smoothstep {

/// Euclidean ball { w in R^d : ||w|| <= R }.
template <typename Scalar>
class BallDomain {
 public:
  BallDomain(Scalar radius, Eigen::Index dim) : radius_(radius), dim_(dim) {
    if (!(std::isfinite(radius) && radius > Scalar(0)))
      throw std::invalid_argument("ball radius must be finite and positive");
    if (dim < 1) throw std::invalid_argument("ball dimension must be >= 1");
  }

  Scalar radius() const noexcept { return radius_; }
  Eigen::Index dim() const noexcept { return dim_; }

 private:
  Scalar radius_;
  Eigen::Index dim_;
};

namespace detail {
template <typename Derived>
void require_dim(const BallDomain<typename Derived::Scalar>& domain,
                 const Eigen::MatrixBase<Derived>& v) {
  if (v.size() != domain.dim()) throw std::invalid_argument("vector dimension does not match domain");
}
}  // namespace detail

/// Nearest point of the ball: v if ||v|| <= R, otherwise v R / ||v||.
template <typename Derived>
Vector<typename Derived::Scalar> project(const BallDomain<typename Derived::Scalar>& domain,
                                         const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  detail::require_dim(domain, v);
  if (!v.allFinite()) throw DomainError("cannot project a vector with non-finite entries");
  const Scalar norm = v.norm();
  if (norm <= domain.radius()) return v;
  return v * (domain.radius() / norm);
}

/// Membership with a 1e-12 relative slack on the radius.
template <typename Derived>
bool contains(const BallDomain<typename Derived::Scalar>& domain,
              const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  detail::require_dim(domain, v);
  return v.norm() <= domain.radius() * (Scalar(1) + Scalar(1e-12));
}

}  // namespace smoothstep
