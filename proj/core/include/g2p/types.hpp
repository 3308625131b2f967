#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace g2p {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

using GaussianId = std::uint32_t;
using Label = std::uint16_t;

/// Sentinel for "no label" in u16 label blocks.
inline constexpr Label kNoLabel = std::numeric_limits<Label>::max();

/// One splat primitive in canonical space: linear scale in meters, opacity in [0,1].
struct GaussianPrimitive {
  Vec3 centroid = Vec3::Zero();
  Quat rotation = Quat::Identity();  ///< unit quaternion, (w,x,y,z) on disk
  Vec3 scale = Vec3::Ones();
  double opacity = 0.0;
  /// Every non-required property of the source record, raw little-endian bytes
  /// in header order (SH coefficients, normals, ...). Never interpreted.
  std::vector<std::byte> sh_payload;
};

/// Symmetric covariance with cached inverse. Eigenvalues are floored at the
/// conditioning epsilon; `degenerate` records whether the floor was hit.
struct Covariance3 {
  Mat3 sigma = Mat3::Identity();
  Mat3 inverse = Mat3::Identity();
  bool degenerate = false;
};

struct CloudPoint {
  Vec3 position = Vec3::Zero();
  Vec3 color = Vec3::Zero();   ///< [0,1]
  Vec3 normal = Vec3::Zero();  ///< unit, or zero when absent
  std::optional<Label> label;
};

/// A cloud point extended with aggregated splat attributes; 13 numeric features.
struct AugmentedPoint {
  Vec3 position = Vec3::Zero();
  Vec3 color = Vec3::Zero();
  Vec3 normal = Vec3::Zero();
  std::optional<Label> label;
  Vec3 scale = Vec3::Zero();  ///< S'
  double opacity = 0.0;       ///< alpha'
  bool matched = false;       ///< false when the fallback radius was needed or nothing matched

  static constexpr std::size_t kFeatureDim = 13;

  /// (x,y,z, r,g,b, nx,ny,nz, sx,sy,sz, alpha)
  [[nodiscard]] Eigen::Matrix<double, kFeatureDim, 1> features() const;
};

/// Per-point boundary membership. in_union == in_scale || in_sem always.
struct PointBoundary {
  bool in_scale = false;
  bool in_sem = false;
  bool in_union = false;

  friend bool operator==(const PointBoundary&, const PointBoundary&) = default;
};

struct BoundaryLabels {
  std::vector<PointBoundary> points;
  /// Realized absolute scale threshold in meters; NaN when no object points existed.
  double tau = std::numeric_limits<double>::quiet_NaN();

  [[nodiscard]] std::size_t size() const { return points.size(); }
  [[nodiscard]] std::size_t count_scale() const;
  [[nodiscard]] std::size_t count_sem() const;
  [[nodiscard]] std::size_t count_union() const;
};

enum class DistanceMetric { kMahalanobis, kEuclidean };

[[nodiscard]] std::string_view to_string(DistanceMetric metric);
/// Accepts "mahalanobis" or "euclidean"; throws ValidationError otherwise.
[[nodiscard]] DistanceMetric parse_distance_metric(std::string_view text);

enum class ParseMode { kStrict, kLenient };

struct PipelineConfig {
  double r_match = 0.10;  ///< candidate prefilter radius, meters
  std::size_t k = 20;
  double r_sem = 0.04;    ///< semantic boundary radius, meters
  double eta = 0.7;       ///< fraction of largest-scale object points pruned
  std::set<Label> background_ids = {0, 1};  ///< wall, floor in the 20-class taxonomy
  double lambda_b = 0.9;
  double lambda_d = 0.4;
  double eps_sigma = 1e-8;  ///< covariance eigenvalue floor, m^2
  DistanceMetric distance_metric = DistanceMetric::kMahalanobis;

  /// Throws ValidationError naming the first offending field.
  void validate() const;
};

}  // namespace g2p
