#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "g2p/spatial_index.hpp"
#include "g2p/types.hpp"

namespace g2p {

/// Distances below this are treated as coincident in the inverse-distance weights.
inline constexpr double kCoincidentDistance = 1e-12;
/// How many times r_match is doubled for a point with no candidates.
inline constexpr int kMaxRadiusDoublings = 5;

/// Gaussians with their conditioned covariances, computed once at load.
struct GaussianSet {
  std::vector<GaussianPrimitive> primitives;
  std::vector<Covariance3> covariances;

  [[nodiscard]] std::size_t size() const { return primitives.size(); }
  [[nodiscard]] std::vector<Vec3> centroids() const;
};

[[nodiscard]] GaussianSet prepare_gaussians(std::vector<GaussianPrimitive> gaussians,
                                            double eps_sigma = 1e-8);

enum class MatchStatus : std::uint8_t {
  kDirect,     ///< candidates found within r_match
  kFallback,   ///< candidates found only after enlarging the radius
  kUnmatched,  ///< nothing within r_match * 2^kMaxRadiusDoublings
};

/// Non-owning view of one point's correspondence.
struct CorrespondenceView {
  std::span<const GaussianId> ids;
  std::span<const double> distances;
  std::span<const double> weights;
  MatchStatus status = MatchStatus::kUnmatched;

  [[nodiscard]] bool matched() const { return status == MatchStatus::kDirect; }
};

/// One point's selected neighbors ordered by (distance, id), their distances and weights.
struct Correspondence {
  std::vector<GaussianId> ids;
  std::vector<double> distances;
  std::vector<double> weights;
  MatchStatus status = MatchStatus::kUnmatched;
  int radius_doublings = 0;

  [[nodiscard]] CorrespondenceView view() const { return {ids, distances, weights, status}; }
};

/// Correspondences for a whole cloud, stored flat (CSR) in point order.
class CorrespondenceSet {
 public:
  [[nodiscard]] std::size_t size() const { return status_.size(); }
  [[nodiscard]] CorrespondenceView operator[](std::size_t point) const;
  void append(const Correspondence& c);
  void append(const CorrespondenceSet& other);
  void reserve(std::size_t points, std::size_t neighbors);

  friend bool operator==(const CorrespondenceSet&, const CorrespondenceSet&) = default;

 private:
  std::vector<std::size_t> offsets_{0};
  std::vector<GaussianId> ids_;
  std::vector<double> distances_;
  std::vector<double> weights_;
  std::vector<MatchStatus> status_;
};

/// Distance used for neighbor selection under `metric`.
[[nodiscard]] double correspondence_distance(const Vec3& point, const GaussianSet& gaussians, GaussianId id,
                                             DistanceMetric metric);

/// Two-stage matching: radius prefilter on centroids, then the k smallest
/// distances (ties by ascending id). Doubles the radius up to
/// kMaxRadiusDoublings times when the prefilter is empty.
[[nodiscard]] Correspondence match_point(const Vec3& point, const CentroidIndex& index,
                                         const GaussianSet& gaussians, const PipelineConfig& cfg);

/// Normalized inverse-distance weights. Distances below kCoincidentDistance
/// take all the mass, split uniformly. Throws PreconditionError when empty.
[[nodiscard]] std::vector<double> compute_weights(std::span<const double> distances);

struct AggregatedAttributes {
  Vec3 scale = Vec3::Zero();
  double opacity = 0.0;
};

/// Weighted mean of neighbor scale and opacity; zeros for an empty correspondence.
[[nodiscard]] AggregatedAttributes aggregate_attributes(const CorrespondenceView& corr,
                                                        std::span<const GaussianPrimitive> gaussians);

struct AugmentStats {
  std::size_t direct = 0;
  std::size_t fallback = 0;
  std::size_t unmatched = 0;
};

struct AugmentResult {
  std::vector<AugmentedPoint> points;
  CorrespondenceSet correspondences;
  AugmentStats stats;
};

/// Augments every point in input order. Geometry, color, normal and label are
/// copied unchanged. The result does not depend on `threads`.
[[nodiscard]] AugmentResult augment_cloud(std::span<const CloudPoint> points, const GaussianSet& gaussians,
                                          const CentroidIndex& index, const PipelineConfig& cfg,
                                          std::size_t threads = 1);

/// Convenience overload that builds the centroid index with cell edge r_match.
[[nodiscard]] AugmentResult augment_cloud(std::span<const CloudPoint> points, const GaussianSet& gaussians,
                                          const PipelineConfig& cfg, std::size_t threads = 1);

}  // namespace g2p
