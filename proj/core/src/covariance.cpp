#include "g2p/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "g2p/errors.hpp"

namespace g2p {

void require_finite(double v, const char* field) {
  if (!std::isfinite(v)) throw ValidationError(std::string("non-finite value in ") + field);
}

void require_finite(const Vec3& v, const char* field) {
  if (!v.allFinite()) throw ValidationError(std::string("non-finite value in ") + field);
}

Covariance3 covariance_from(const Quat& rotation, const Vec3& scale, double floor) {
  if (!rotation.coeffs().allFinite()) throw ValidationError("non-finite value in rotation");
  require_finite(scale, "scale");
  if (std::abs(rotation.norm() - 1.0) > 1e-6) {
    throw ValidationError("rotation quaternion is not normalized (norm " +
                          std::to_string(rotation.norm()) + ")");
  }
  if ((scale.array() <= 0.0).any()) throw ValidationError("scale components must be > 0");

  // The eigenpairs of R S S^T R^T are (s_i^2, column i of R).
  const Mat3 axes = rotation.normalized().toRotationMatrix();
  Vec3 eigenvalues = scale.array().square();
  Covariance3 cov;
  for (int i = 0; i < 3; ++i) {
    if (eigenvalues[i] < floor) {
      eigenvalues[i] = floor;
      cov.degenerate = true;
    }
  }
  cov.sigma = axes * eigenvalues.asDiagonal() * axes.transpose();
  cov.inverse = axes * eigenvalues.cwiseInverse().asDiagonal() * axes.transpose();
  // Exact symmetry; the products above can differ in the last ulp across the diagonal.
  cov.sigma = 0.5 * (cov.sigma + cov.sigma.transpose());
  cov.inverse = 0.5 * (cov.inverse + cov.inverse.transpose());
  return cov;
}

double mahalanobis_distance(const Vec3& point, const Vec3& centroid, const Covariance3& cov) {
  require_finite(point, "point");
  require_finite(centroid, "centroid");
  const Vec3 d = point - centroid;
  if (d.isZero(0.0)) return 0.0;
  const double q = d.dot(cov.inverse * d);
  return std::sqrt(std::max(q, 0.0));
}

}  // namespace g2p
