#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "g2p/types.hpp"

namespace g2p {

/// Uniform voxel grid over a fixed set of positions, answering exact
/// Euclidean radius queries. Ids are indices into the build input; every
/// finite position lives in exactly one cell and cell id-lists are ascending.
class CentroidIndex {
 public:
  CentroidIndex() = default;

  /// Non-finite positions throw in strict mode and are left out in lenient mode.
  static CentroidIndex build(std::span<const Vec3> positions, double cell_edge,
                             ParseMode mode = ParseMode::kStrict);

  /// Ids with |position - query| <= r (ties included), ascending.
  [[nodiscard]] std::vector<GaussianId> radius_query(const Vec3& query, double r) const;
  /// As above, reusing `out` (cleared first).
  void radius_query(const Vec3& query, double r, std::vector<GaussianId>& out) const;

  /// Calls fn(id, squared_distance) for every id within r, in storage order,
  /// until fn returns false. Returns false if stopped early.
  template <class Fn>
  bool visit_radius(const Vec3& query, double r, Fn&& fn) const;

  [[nodiscard]] std::size_t size() const { return ids_.size(); }
  [[nodiscard]] bool empty() const { return ids_.empty(); }
  [[nodiscard]] double cell_edge() const { return edge_; }
  [[nodiscard]] std::size_t cell_count() const { return cells_.size(); }
  [[nodiscard]] const Vec3& min_corner() const { return min_; }
  [[nodiscard]] const Vec3& max_corner() const { return max_; }
  /// Ids stored in the cell containing `p` (empty if none), ascending.
  [[nodiscard]] std::span<const GaussianId> cell_members(const Vec3& p) const;

 private:
  struct Cell {
    std::array<std::int64_t, 3> coord;
    std::uint32_t begin;
    std::uint32_t end;
  };

  [[nodiscard]] std::int64_t cell_coord(double v, int axis) const;
  [[nodiscard]] static std::uint64_t pack(const std::array<std::int64_t, 3>& c);
  template <class Fn>
  bool visit_cell(const Cell& cell, const Vec3& query, double r2, Fn& fn) const;

  double edge_ = 1.0;
  Vec3 min_ = Vec3::Zero();
  Vec3 max_ = Vec3::Zero();
  std::array<std::int64_t, 3> dims_{0, 0, 0};
  std::vector<Cell> cells_;  ///< sorted by packed coordinate
  std::unordered_map<std::uint64_t, std::uint32_t> lookup_;
  std::vector<GaussianId> ids_;  ///< grouped by cell, ascending within a cell
  std::vector<Vec3> positions_;  ///< parallel to ids_
};

/// Index over Gaussian centroids with the given cell edge (normally r_match).
[[nodiscard]] CentroidIndex build_index(std::span<const GaussianPrimitive> gaussians, double cell_edge,
                                        ParseMode mode = ParseMode::kStrict);

[[nodiscard]] inline double squared_distance(const Vec3& a, const Vec3& b) {
  const double dx = a.x() - b.x();
  const double dy = a.y() - b.y();
  const double dz = a.z() - b.z();
  return dx * dx + dy * dy + dz * dz;
}

template <class Fn>
bool CentroidIndex::visit_cell(const Cell& cell, const Vec3& query, double r2, Fn& fn) const {
  for (std::uint32_t i = cell.begin; i < cell.end; ++i) {
    const double d2 = squared_distance(positions_[i], query);
    if (d2 <= r2 && !fn(ids_[i], d2)) return false;
  }
  return true;
}

template <class Fn>
bool CentroidIndex::visit_radius(const Vec3& query, double r, Fn&& fn) const {
  if (cells_.empty() || !(r >= 0.0) || !query.allFinite()) return true;
  const double r2 = r * r;
  // Widen the walked range slightly so rounding in the cell arithmetic can
  // never drop a point whose squared distance passes the predicate.
  const double pad = r + 1e-9 * (1.0 + r + query.cwiseAbs().maxCoeff());
  std::array<std::int64_t, 3> lo{}, hi{};
  std::int64_t walk = 1;
  for (int a = 0; a < 3; ++a) {
    lo[a] = std::max<std::int64_t>(cell_coord(query[a] - pad, a), 0);
    hi[a] = std::min<std::int64_t>(cell_coord(query[a] + pad, a), dims_[a] - 1);
    if (lo[a] > hi[a]) return true;
    walk *= (hi[a] - lo[a] + 1);
    if (walk > static_cast<std::int64_t>(cells_.size())) walk = static_cast<std::int64_t>(cells_.size()) + 1;
  }
  if (walk > static_cast<std::int64_t>(cells_.size())) {
    for (const auto& cell : cells_) {
      bool inside = true;
      for (int a = 0; a < 3; ++a) inside = inside && cell.coord[a] >= lo[a] && cell.coord[a] <= hi[a];
      if (inside && !visit_cell(cell, query, r2, fn)) return false;
    }
    return true;
  }
  for (std::int64_t x = lo[0]; x <= hi[0]; ++x) {
    for (std::int64_t y = lo[1]; y <= hi[1]; ++y) {
      for (std::int64_t z = lo[2]; z <= hi[2]; ++z) {
        const auto it = lookup_.find(pack({x, y, z}));
        if (it == lookup_.end()) continue;
        if (!visit_cell(cells_[it->second], query, r2, fn)) return false;
      }
    }
  }
  return true;
}

}  // namespace g2p
