#include "g2p/boundary.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "g2p/errors.hpp"
#include "g2p/parallel.hpp"
#include "g2p/spatial_index.hpp"

namespace g2p {

double scale_magnitude(const Vec3& s) { return std::sqrt(s.x() * s.x() + s.y() * s.y() + s.z() * s.z()); }

std::size_t nearest_rank(std::size_t n, double keep_fraction) {
  if (n == 0) return 0;
  const double exact = keep_fraction * static_cast<double>(n);
  const double rank = std::ceil(exact - 1e-9 * std::max(1.0, exact));
  return std::clamp<std::size_t>(rank <= 0.0 ? 1 : static_cast<std::size_t>(rank), 1, n);
}

std::size_t ScaleBoundary::count() const {
  return static_cast<std::size_t>(std::count(members.begin(), members.end(), std::uint8_t{1}));
}

ScaleBoundary extract_scale_boundary(std::span<const AugmentedPoint> points, const std::set<Label>& background_ids,
                                     double eta) {
  if (!(eta > 0.0 && eta < 1.0)) {
    throw PreconditionError("eta must lie strictly between 0 and 1, got " + std::to_string(eta));
  }
  ScaleBoundary out;
  out.members.assign(points.size(), 0);

  std::vector<double> magnitudes;
  std::vector<std::size_t> object_ids;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    if (!p.label && !background_ids.empty()) {
      throw PreconditionError("point " + std::to_string(i) + " has no label; background exclusion needs labels");
    }
    if (!p.matched) continue;
    if (p.label && background_ids.contains(*p.label)) continue;
    object_ids.push_back(i);
    magnitudes.push_back(scale_magnitude(p.scale));
  }
  out.object_points = object_ids.size();
  if (object_ids.empty()) return out;

  std::vector<double> sorted = magnitudes;
  out.rank = nearest_rank(sorted.size(), 1.0 - eta);
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(out.rank - 1), sorted.end());
  out.tau = sorted[out.rank - 1];
  for (std::size_t j = 0; j < object_ids.size(); ++j) {
    if (magnitudes[j] <= out.tau) out.members[object_ids[j]] = 1;
  }
  return out;
}

std::vector<std::uint8_t> extract_semantic_boundary(std::span<const Vec3> positions, std::span<const Label> labels,
                                                    double r_sem, std::size_t threads) {
  if (positions.size() != labels.size()) throw PreconditionError("positions and labels differ in length");
  if (!(r_sem > 0.0) || !std::isfinite(r_sem)) throw PreconditionError("r_sem must be positive");
  std::vector<std::uint8_t> members(positions.size(), 0);
  if (positions.empty()) return members;

  const auto index = CentroidIndex::build(positions, r_sem);
  parallel_chunks(positions.size(), threads, [&](const Chunk& chunk) {
    for (std::size_t i = chunk.begin; i < chunk.end; ++i) {
      const Label own = labels[i];
      const bool all_same = index.visit_radius(positions[i], r_sem, [&](GaussianId j, double) {
        return labels[j] == own;
      });
      members[i] = all_same ? 0 : 1;
    }
  });
  return members;
}

std::vector<std::uint8_t> extract_semantic_boundary(std::span<const AugmentedPoint> points, double r_sem,
                                                    std::size_t threads) {
  std::vector<Vec3> positions;
  std::vector<Label> labels;
  positions.reserve(points.size());
  labels.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!points[i].label) {
      throw PreconditionError("semantic boundary needs labels; point " + std::to_string(i) + " has none");
    }
    positions.push_back(points[i].position);
    labels.push_back(*points[i].label);
  }
  return extract_semantic_boundary(positions, labels, r_sem, threads);
}

BoundaryLabels union_boundary(const ScaleBoundary& scale, std::span<const std::uint8_t> sem) {
  if (scale.members.size() != sem.size()) {
    throw PreconditionError("B_scale has " + std::to_string(scale.members.size()) + " points, B_sem has " +
                            std::to_string(sem.size()));
  }
  BoundaryLabels out;
  out.tau = scale.tau;
  out.points.resize(sem.size());
  for (std::size_t i = 0; i < sem.size(); ++i) {
    auto& b = out.points[i];
    b.in_scale = scale.members[i] != 0;
    b.in_sem = sem[i] != 0;
    b.in_union = b.in_scale || b.in_sem;
  }
  return out;
}

}  // namespace g2p
