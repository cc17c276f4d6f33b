#pragma once

#include <Eigen/Core>

namespace smoothstep {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

}  // namespace smoothstep
