#pragma once

#include <cstddef>
#include <cstdint>
#include <set>
#include <span>
#include <vector>

#include "g2p/types.hpp"

namespace g2p {

/// L2 norm of an aggregated scale vector.
[[nodiscard]] double scale_magnitude(const Vec3& scale);

/// 1-based nearest-rank position of the `keep_fraction` quantile among n
/// sorted values: ceil(keep_fraction * n), clamped to [1, n]. A 1e-9 relative
/// slack absorbs representation error so that e.g. 0.3 * 10 ranks as 3.
[[nodiscard]] std::size_t nearest_rank(std::size_t n, double keep_fraction);

struct ScaleBoundary {
  std::vector<std::uint8_t> members;  ///< 1 = in B_scale, per input point
  double tau = std::numeric_limits<double>::quiet_NaN();
  std::size_t object_points = 0;  ///< |P'_obj|
  std::size_t rank = 0;           ///< nearest-rank position of tau within P'_obj

  [[nodiscard]] std::size_t count() const;
};

/// Keeps the object points (matched, not background) whose scale magnitude is
/// at most the (1 - eta) nearest-rank quantile; ties at the threshold are kept.
/// Points without a label are only allowed when `background_ids` is empty.
/// With no object points, members are all 0 and tau is NaN.
[[nodiscard]] ScaleBoundary extract_scale_boundary(std::span<const AugmentedPoint> points,
                                                   const std::set<Label>& background_ids, double eta);

/// Point i is a member iff some point j within r_sem carries a different label.
/// Every point must be labeled.
[[nodiscard]] std::vector<std::uint8_t> extract_semantic_boundary(std::span<const Vec3> positions,
                                                                  std::span<const Label> labels, double r_sem,
                                                                  std::size_t threads = 1);
[[nodiscard]] std::vector<std::uint8_t> extract_semantic_boundary(std::span<const AugmentedPoint> points,
                                                                  double r_sem, std::size_t threads = 1);

/// Pointwise OR. Both inputs must have the same length.
[[nodiscard]] BoundaryLabels union_boundary(const ScaleBoundary& scale, std::span<const std::uint8_t> sem);

}  // namespace g2p
