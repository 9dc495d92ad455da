#pragma once

#include <Eigen/Core>

namespace rankguide {

/// Thin SVD factors: input == u * singular_values.asDiagonal() * vt.
/// Shapes (m, p), (p), (p, n) with p = min(m, n); singular values
/// non-increasing and non-negative.
struct SvdResult {
    Eigen::MatrixXd u;
    Eigen::VectorXd singular_values;
    Eigen::MatrixXd vt;
};

/// Deterministic thin SVD. The sign of each left singular vector is
/// canonicalized so that its largest-magnitude entry (lowest index on ties)
/// is non-negative, which makes downstream decompositions reproducible
/// bit-for-bit.
[[nodiscard]] SvdResult thin_svd(const Eigen::MatrixXd& m);

}  // namespace rankguide
