#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "g2p/types.hpp"

namespace g2p {

enum class ScenePreset { kDoorOnWall, kBoxOnFloor };

[[nodiscard]] std::string_view to_string(ScenePreset preset);
/// "door-on-wall" or "box-on-floor"; throws ValidationError otherwise.
[[nodiscard]] ScenePreset parse_scene_preset(std::string_view text);

struct SceneSpec {
  ScenePreset preset = ScenePreset::kDoorOnWall;
  std::uint64_t seed = 0;
  double point_density = 3000.0;     ///< points per m^2
  double gaussian_density = 2000.0;  ///< gaussians per m^2; 0 yields no gaussians
  double edge_band = 0.05;           ///< meters
  double edge_scale_factor = 0.2;    ///< scale multiplier for gaussians inside the band
  /// Gaussian density multiplier inside the band. Unset means 1 / factor^2,
  /// so the shrunk splats still cover the surface (as densification would).
  std::optional<double> edge_density_multiplier;

  void validate() const;
  [[nodiscard]] double band_density_multiplier() const;
};

/// Planar rectangle origin + s*u + t*v, s in [0, u_length], t in [0, v_length].
struct Rect {
  Vec3 origin = Vec3::Zero();
  Vec3 u = Vec3::UnitX();
  Vec3 v = Vec3::UnitY();
  double u_length = 1.0;
  double v_length = 1.0;
  /// Label of samples on this rect; an overlay with no label cuts a hole.
  std::optional<Label> label;

  [[nodiscard]] Vec3 normal() const { return u.cross(v); }
  [[nodiscard]] double area() const { return u_length * v_length; }
  [[nodiscard]] Vec3 at(double s, double t) const { return origin + s * u + t * v; }
  /// Euclidean distance from p to the rectangle.
  [[nodiscard]] double distance(const Vec3& p) const;
  /// True when p lies in the rectangle's plane (within tol) and inside its extent.
  [[nodiscard]] bool contains(const Vec3& p, double tol = 1e-9) const;
};

struct Segment {
  Vec3 a = Vec3::Zero();
  Vec3 b = Vec3::Zero();

  [[nodiscard]] double distance(const Vec3& p) const;
};

struct SyntheticScene {
  SceneSpec spec;
  std::vector<CloudPoint> points;  ///< labeled, unit normals, colors in [0,1]
  std::vector<GaussianPrimitive> gaussians;
  std::vector<std::uint8_t> boundary_truth;  ///< per point: within edge_band of an object edge
  std::vector<Rect> surfaces;                ///< sampled surfaces
  std::vector<Rect> overlays;                ///< coplanar relabel / hole regions
  std::vector<Segment> edges;                ///< object outline edges
};

[[nodiscard]] double distance_to_edges(const Vec3& p, std::span<const Segment> edges);

/// Deterministic for a given spec; single-threaded.
[[nodiscard]] SyntheticScene generate_scene(const SceneSpec& spec);

}  // namespace g2p
