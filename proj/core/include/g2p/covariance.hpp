#pragma once

#include "g2p/types.hpp"

namespace g2p {

inline constexpr double kDefaultCovarianceFloor = 1e-8;

/// Sigma = R diag(s) diag(s) R^T, with eigenvalues clamped to `floor` before
/// inversion. `rotation` must be unit within 1e-6; scale components > 0.
[[nodiscard]] Covariance3 covariance_from(const Quat& rotation, const Vec3& scale,
                                          double floor = kDefaultCovarianceFloor);

/// sqrt(d^T Sigma^-1 d) with d = point - centroid.
[[nodiscard]] double mahalanobis_distance(const Vec3& point, const Vec3& centroid,
                                          const Covariance3& cov);

[[nodiscard]] inline double mahalanobis_distance(const Vec3& point, const GaussianPrimitive& g,
                                                 const Covariance3& cov) {
  return mahalanobis_distance(point, g.centroid, cov);
}

/// Rejects non-finite components, naming `field` in the error.
void require_finite(const Vec3& v, const char* field);
void require_finite(double v, const char* field);

}  // namespace g2p
