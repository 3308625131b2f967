#include "g2p/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "g2p/errors.hpp"

namespace g2p {

namespace {

constexpr Label kWall = 0;
constexpr Label kFloor = 1;
constexpr Label kCabinet = 2;
constexpr Label kDoor = 7;

/// mt19937_64's sequence is fixed by the standard; the conversion to [0,1)
/// is done by hand because std distributions vary across libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::mt19937_64 engine_;
};

struct LabelStyle {
  Vec3 color;
  double opacity_lo;
  double opacity_hi;
};

LabelStyle style_for(Label label) {
  switch (label) {
    case kWall:
      return {Vec3(0.82, 0.80, 0.76), 0.30, 0.45};
    case kFloor:
      return {Vec3(0.45, 0.36, 0.28), 0.15, 0.28};
    case kDoor:
      return {Vec3(0.60, 0.42, 0.25), 0.72, 0.90};
    default:
      return {Vec3(0.35, 0.40, 0.55), 0.55, 0.68};
  }
}

/// Resolves the label at p: the last overlay containing p wins; an overlay
/// without a label removes the sample.
std::optional<Label> resolve_label(const Rect& surface, const std::vector<Rect>& overlays, const Vec3& p,
                                   bool& removed) {
  removed = false;
  std::optional<Label> label = surface.label;
  for (const auto& o : overlays) {
    if (!o.contains(p, 1e-9)) continue;
    if (!o.label) {
      removed = true;
      return std::nullopt;
    }
    label = o.label;
  }
  return label;
}

void add_box_edges(const Vec3& lo, const Vec3& hi, std::vector<Segment>& edges) {
  const auto corner = [&](int i) {
    return Vec3((i & 1) ? hi.x() : lo.x(), (i & 2) ? hi.y() : lo.y(), (i & 4) ? hi.z() : lo.z());
  };
  for (int i = 0; i < 8; ++i) {
    for (int bit : {1, 2, 4}) {
      if ((i & bit) == 0) edges.push_back({corner(i), corner(i | bit)});
    }
  }
}

void add_rect_edges(const Rect& r, std::vector<Segment>& edges) {
  const Vec3 a = r.at(0, 0);
  const Vec3 b = r.at(r.u_length, 0);
  const Vec3 c = r.at(r.u_length, r.v_length);
  const Vec3 d = r.at(0, r.v_length);
  edges.push_back({a, b});
  edges.push_back({b, c});
  edges.push_back({c, d});
  edges.push_back({d, a});
}

void build_layout(ScenePreset preset, SyntheticScene& scene) {
  switch (preset) {
    case ScenePreset::kDoorOnWall: {
      // Wall in the plane y = 0 facing -y, floor in front of it, door coplanar with the wall.
      scene.surfaces.push_back({Vec3(0, 0, 0), Vec3::UnitX(), Vec3::UnitZ(), 4.0, 2.5, kWall});
      scene.surfaces.push_back({Vec3(0, -2, 0), Vec3::UnitX(), Vec3::UnitY(), 4.0, 2.0, kFloor});
      const Rect door{Vec3(1.5, 0, 0), Vec3::UnitX(), Vec3::UnitZ(), 0.9, 2.1, kDoor};
      scene.overlays.push_back(door);
      add_rect_edges(door, scene.edges);
      break;
    }
    case ScenePreset::kBoxOnFloor: {
      const Vec3 lo(1.2, 1.2, 0.0);
      const Vec3 hi(1.8, 1.7, 0.5);
      const double dx = hi.x() - lo.x();
      const double dy = hi.y() - lo.y();
      const double dz = hi.z() - lo.z();
      scene.surfaces.push_back({Vec3(0, 0, 0), Vec3::UnitX(), Vec3::UnitY(), 3.0, 3.0, kFloor});
      scene.surfaces.push_back({Vec3(lo.x(), lo.y(), hi.z()), Vec3::UnitX(), Vec3::UnitY(), dx, dy, kCabinet});
      scene.surfaces.push_back({Vec3(lo.x(), lo.y(), lo.z()), Vec3::UnitX(), Vec3::UnitZ(), dx, dz, kCabinet});
      scene.surfaces.push_back({Vec3(hi.x(), hi.y(), lo.z()), -Vec3::UnitX(), Vec3::UnitZ(), dx, dz, kCabinet});
      scene.surfaces.push_back({Vec3(lo.x(), hi.y(), lo.z()), -Vec3::UnitY(), Vec3::UnitZ(), dy, dz, kCabinet});
      scene.surfaces.push_back({Vec3(hi.x(), lo.y(), lo.z()), Vec3::UnitY(), Vec3::UnitZ(), dy, dz, kCabinet});
      // The box footprint is not visible floor.
      scene.overlays.push_back({Vec3(lo.x(), lo.y(), 0), Vec3::UnitX(), Vec3::UnitY(), dx, dy, std::nullopt});
      add_box_edges(lo, hi, scene.edges);
      break;
    }
  }
}

}  // namespace

std::string_view to_string(ScenePreset preset) {
  switch (preset) {
    case ScenePreset::kDoorOnWall:
      return "door-on-wall";
    case ScenePreset::kBoxOnFloor:
      return "box-on-floor";
  }
  return "unknown";
}

ScenePreset parse_scene_preset(std::string_view text) {
  if (text == "door-on-wall") return ScenePreset::kDoorOnWall;
  if (text == "box-on-floor") return ScenePreset::kBoxOnFloor;
  throw ValidationError("unknown preset '" + std::string(text) + "' (expected door-on-wall or box-on-floor)");
}

void SceneSpec::validate() const {
  if (!(point_density > 0.0) || !std::isfinite(point_density)) throw ValidationError("point_density must be > 0");
  if (!(gaussian_density >= 0.0) || !std::isfinite(gaussian_density)) {
    throw ValidationError("gaussian_density must be >= 0");
  }
  if (!(edge_band > 0.0)) throw ValidationError("edge_band must be > 0");
  if (!(edge_scale_factor > 0.0)) throw ValidationError("edge_scale_factor must be > 0");
  if (edge_density_multiplier && !(*edge_density_multiplier >= 1.0)) {
    throw ValidationError("edge_density_multiplier must be >= 1");
  }
}

double SceneSpec::band_density_multiplier() const {
  if (edge_density_multiplier) return *edge_density_multiplier;
  return std::max(1.0, 1.0 / (edge_scale_factor * edge_scale_factor));
}

double Rect::distance(const Vec3& p) const {
  const Vec3 d = p - origin;
  const double s = std::clamp(d.dot(u), 0.0, u_length);
  const double t = std::clamp(d.dot(v), 0.0, v_length);
  return (p - at(s, t)).norm();
}

bool Rect::contains(const Vec3& p, double tol) const {
  const Vec3 d = p - origin;
  const double s = d.dot(u);
  const double t = d.dot(v);
  return std::abs(d.dot(normal())) <= tol && s >= -tol && s <= u_length + tol && t >= -tol && t <= v_length + tol;
}

double Segment::distance(const Vec3& p) const {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (p - (a + t * ab)).norm();
}

double distance_to_edges(const Vec3& p, std::span<const Segment> edges) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& e : edges) best = std::min(best, e.distance(p));
  return best;
}

SyntheticScene generate_scene(const SceneSpec& spec) {
  spec.validate();
  SyntheticScene scene;
  scene.spec = spec;
  build_layout(spec.preset, scene);

  Rng rng(spec.seed);

  for (const auto& surface : scene.surfaces) {
    const auto n = static_cast<std::size_t>(std::llround(spec.point_density * surface.area()));
    const Vec3 normal = surface.normal();
    for (std::size_t i = 0; i < n; ++i) {
      const double s = rng.uniform(0.0, surface.u_length);
      const double t = rng.uniform(0.0, surface.v_length);
      const double jitter = rng.uniform(-0.04, 0.04);
      CloudPoint p;
      p.position = surface.at(s, t);
      bool removed = false;
      p.label = resolve_label(surface, scene.overlays, p.position, removed);
      if (removed) continue;
      p.color = (style_for(*p.label).color.array() + jitter).cwiseMax(0.0).cwiseMin(1.0);
      p.normal = normal;
      scene.points.push_back(p);
    }
  }

  if (spec.gaussian_density > 0.0) {
    const double tangential = 1.2 / std::sqrt(spec.gaussian_density);
    const double multiplier = spec.band_density_multiplier();
    for (const auto& surface : scene.surfaces) {
      // Candidates are drawn at the band density; outside the band only a
      // 1/multiplier share survives, which leaves the base density there.
      const auto n = static_cast<std::size_t>(std::llround(spec.gaussian_density * multiplier * surface.area()));
      const Vec3 normal = surface.normal();
      for (std::size_t i = 0; i < n; ++i) {
        const double s = rng.uniform(0.0, surface.u_length);
        const double t = rng.uniform(0.0, surface.v_length);
        const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double su = rng.uniform(0.8, 1.25);
        const double sv = rng.uniform(0.8, 1.25);
        const double sn = rng.uniform(0.8, 1.25);
        const double alpha_u = rng.uniform();
        const double keep_u = rng.uniform();
        GaussianPrimitive g;
        g.centroid = surface.at(s, t);
        const bool in_band = distance_to_edges(g.centroid, scene.edges) <= spec.edge_band;
        if (!in_band && keep_u * multiplier >= 1.0) continue;
        bool removed = false;
        const auto label = resolve_label(surface, scene.overlays, g.centroid, removed);
        if (removed) continue;

        const Vec3 axis_u = std::cos(theta) * surface.u + std::sin(theta) * surface.v;
        const Vec3 axis_v = normal.cross(axis_u);
        Mat3 frame;
        frame << axis_u, axis_v, normal;
        g.rotation = Quat(frame).normalized();

        const double factor = in_band ? spec.edge_scale_factor : 1.0;
        g.scale = factor * Vec3(tangential * su, tangential * sv, 0.1 * tangential * sn);

        const auto style = style_for(*label);
        g.opacity = style.opacity_lo + (style.opacity_hi - style.opacity_lo) * alpha_u;
        scene.gaussians.push_back(std::move(g));
      }
    }
  }

  scene.boundary_truth.reserve(scene.points.size());
  for (const auto& p : scene.points) {
    scene.boundary_truth.push_back(distance_to_edges(p.position, scene.edges) <= spec.edge_band ? 1 : 0);
  }
  return scene;
}

}  // namespace g2p
