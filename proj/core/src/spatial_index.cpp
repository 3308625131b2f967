#include "g2p/spatial_index.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "g2p/errors.hpp"

namespace g2p {

namespace {
constexpr std::int64_t kMaxCellsPerAxis = std::int64_t{1} << 21;
}

std::int64_t CentroidIndex::cell_coord(double v, int axis) const {
  const double c = std::floor((v - min_[axis]) / edge_);
  // Clamp before the integer conversion; callers clamp again to the grid.
  return static_cast<std::int64_t>(std::clamp(c, -1.0, static_cast<double>(kMaxCellsPerAxis)));
}

std::uint64_t CentroidIndex::pack(const std::array<std::int64_t, 3>& c) {
  return (static_cast<std::uint64_t>(c[0]) << 42) | (static_cast<std::uint64_t>(c[1]) << 21) |
         static_cast<std::uint64_t>(c[2]);
}

CentroidIndex CentroidIndex::build(std::span<const Vec3> positions, double cell_edge, ParseMode mode) {
  if (!(cell_edge > 0.0) || !std::isfinite(cell_edge)) {
    throw ValidationError("cell_edge must be positive and finite, got " + std::to_string(cell_edge));
  }
  if (positions.size() > std::numeric_limits<GaussianId>::max()) {
    throw ValidationError("too many positions for 32-bit ids");
  }
  CentroidIndex index;
  index.edge_ = cell_edge;

  std::vector<GaussianId> live;
  live.reserve(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (positions[i].allFinite()) {
      live.push_back(static_cast<GaussianId>(i));
    } else if (mode == ParseMode::kStrict) {
      throw ValidationError("non-finite centroid at id " + std::to_string(i));
    }
  }
  if (live.empty()) return index;

  index.min_ = positions[live.front()];
  index.max_ = index.min_;
  for (GaussianId id : live) {
    index.min_ = index.min_.cwiseMin(positions[id]);
    index.max_ = index.max_.cwiseMax(positions[id]);
  }
  for (int a = 0; a < 3; ++a) {
    const double span = std::floor((index.max_[a] - index.min_[a]) / cell_edge) + 1.0;
    if (span > static_cast<double>(kMaxCellsPerAxis)) {
      throw ValidationError("cell_edge " + std::to_string(cell_edge) + " is too small for the scene extent");
    }
    index.dims_[a] = static_cast<std::int64_t>(span);
  }

  std::vector<std::pair<std::uint64_t, GaussianId>> keyed;
  keyed.reserve(live.size());
  for (GaussianId id : live) {
    std::array<std::int64_t, 3> c{};
    for (int a = 0; a < 3; ++a) c[a] = std::clamp<std::int64_t>(index.cell_coord(positions[id][a], a), 0, index.dims_[a] - 1);
    keyed.emplace_back(pack(c), id);
  }
  std::sort(keyed.begin(), keyed.end());

  index.ids_.reserve(keyed.size());
  index.positions_.reserve(keyed.size());
  for (std::size_t i = 0; i < keyed.size(); ++i) {
    const auto [key, id] = keyed[i];
    if (i == 0 || key != keyed[i - 1].first) {
      const auto begin = static_cast<std::uint32_t>(i);
      const std::array<std::int64_t, 3> coord{static_cast<std::int64_t>(key >> 42),
                                              static_cast<std::int64_t>((key >> 21) & (kMaxCellsPerAxis - 1)),
                                              static_cast<std::int64_t>(key & (kMaxCellsPerAxis - 1))};
      index.lookup_.emplace(key, static_cast<std::uint32_t>(index.cells_.size()));
      index.cells_.push_back({coord, begin, begin});
    }
    index.ids_.push_back(id);
    index.positions_.push_back(positions[id]);
    index.cells_.back().end = static_cast<std::uint32_t>(i + 1);
  }
  return index;
}

std::vector<GaussianId> CentroidIndex::radius_query(const Vec3& query, double r) const {
  std::vector<GaussianId> out;
  radius_query(query, r, out);
  return out;
}

void CentroidIndex::radius_query(const Vec3& query, double r, std::vector<GaussianId>& out) const {
  out.clear();
  visit_radius(query, r, [&out](GaussianId id, double) {
    out.push_back(id);
    return true;
  });
  std::sort(out.begin(), out.end());
}

std::span<const GaussianId> CentroidIndex::cell_members(const Vec3& p) const {
  if (cells_.empty() || !p.allFinite()) return {};
  std::array<std::int64_t, 3> c{};
  for (int a = 0; a < 3; ++a) {
    c[a] = cell_coord(p[a], a);
    if (c[a] < 0 || c[a] >= dims_[a]) return {};
  }
  const auto it = lookup_.find(pack(c));
  if (it == lookup_.end()) return {};
  const auto& cell = cells_[it->second];
  return std::span<const GaussianId>(ids_).subspan(cell.begin, cell.end - cell.begin);
}

CentroidIndex build_index(std::span<const GaussianPrimitive> gaussians, double cell_edge, ParseMode mode) {
  std::vector<Vec3> centroids;
  centroids.reserve(gaussians.size());
  for (const auto& g : gaussians) centroids.push_back(g.centroid);
  return CentroidIndex::build(centroids, cell_edge, mode);
}

}  // namespace g2p
