#include "g2p/types.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "g2p/errors.hpp"

namespace g2p {

Eigen::Matrix<double, AugmentedPoint::kFeatureDim, 1> AugmentedPoint::features() const {
  Eigen::Matrix<double, kFeatureDim, 1> f;
  f << position, color, normal, scale, opacity;
  return f;
}

namespace {

template <class Pred>
std::size_t count_if_flag(const std::vector<PointBoundary>& points, Pred pred) {
  return static_cast<std::size_t>(std::count_if(points.begin(), points.end(), pred));
}

}  // namespace

std::size_t BoundaryLabels::count_scale() const {
  return count_if_flag(points, [](const PointBoundary& b) { return b.in_scale; });
}

std::size_t BoundaryLabels::count_sem() const {
  return count_if_flag(points, [](const PointBoundary& b) { return b.in_sem; });
}

std::size_t BoundaryLabels::count_union() const {
  return count_if_flag(points, [](const PointBoundary& b) { return b.in_union; });
}

std::string_view to_string(DistanceMetric metric) {
  switch (metric) {
    case DistanceMetric::kMahalanobis:
      return "mahalanobis";
    case DistanceMetric::kEuclidean:
      return "euclidean";
  }
  return "unknown";
}

DistanceMetric parse_distance_metric(std::string_view text) {
  if (text == "mahalanobis") return DistanceMetric::kMahalanobis;
  if (text == "euclidean") return DistanceMetric::kEuclidean;
  throw ValidationError("distance_metric: expected 'mahalanobis' or 'euclidean', got '" +
                        std::string(text) + "'");
}

void PipelineConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!std::isfinite(v) || v <= 0.0) {
      throw ValidationError(std::string(name) + " must be a positive finite value, got " +
                            std::to_string(v));
    }
  };
  positive(r_match, "r_match");
  positive(r_sem, "r_sem");
  positive(eps_sigma, "eps_sigma");
  if (k < 1) throw ValidationError("k must be >= 1");
  if (!(eta > 0.0 && eta < 1.0)) {
    throw ValidationError("eta must lie strictly between 0 and 1, got " + std::to_string(eta));
  }
  if (!std::isfinite(lambda_b) || lambda_b < 0.0) throw ValidationError("lambda_b must be >= 0");
  if (!std::isfinite(lambda_d) || lambda_d < 0.0) throw ValidationError("lambda_d must be >= 0");
}

}  // namespace g2p
