#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "g2p/types.hpp"

namespace g2p {

enum class ScalarType : std::uint8_t { kInt8, kUInt8, kInt16, kUInt16, kInt32, kUInt32, kFloat32, kFloat64 };

[[nodiscard]] std::size_t scalar_size(ScalarType type);
[[nodiscard]] std::string_view scalar_name(ScalarType type);
/// Accepts both the classic (float, uchar, ...) and sized (float32, uint8, ...) spellings.
[[nodiscard]] std::optional<ScalarType> parse_scalar(std::string_view name);

struct PlyProperty {
  std::string name;
  ScalarType type = ScalarType::kFloat32;
};

/// Header of a single-element ("vertex") binary little-endian PLY container.
/// Property order is preserved so files can be rewritten in the same layout.
struct SplatFileHeader {
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
  std::string format = "binary_little_endian 1.0";

  [[nodiscard]] std::size_t record_size() const;
  /// Index of the property called `name`, if present.
  [[nodiscard]] std::optional<std::size_t> find(std::string_view name) const;
  /// Byte offset of property `index` within a record.
  [[nodiscard]] std::size_t offset_of(std::size_t index) const;
};

[[nodiscard]] SplatFileHeader read_header(std::istream& in);
void write_header(std::ostream& out, const SplatFileHeader& header);

/// Loaded splat scene. `header` is the on-disk layout; `dropped_records` lists
/// records skipped in lenient mode because of non-finite fields.
struct SplatScene {
  SplatFileHeader header;
  std::vector<GaussianPrimitive> gaussians;
  std::vector<std::size_t> dropped_records;

  /// Layout of GaussianPrimitive::sh_payload (every non-required property).
  [[nodiscard]] std::vector<PlyProperty> payload_properties() const;
};

/// Reads a 3DGS scene. Scale is stored as log, opacity as a logit; both are
/// mapped to linear space here and the quaternion (w,x,y,z) is normalized.
[[nodiscard]] SplatScene load_splats(const std::filesystem::path& path,
                                     ParseMode mode = ParseMode::kStrict);

/// Writes the reference layout: x,y,z, payload properties, opacity, scale_0..2, rot_0..3.
/// Each primitive's sh_payload must match the total size of `payload_layout`.
void save_splats(const std::filesystem::path& path, std::span<const GaussianPrimitive> gaussians,
                 std::span<const PlyProperty> payload_layout = {});

struct PointCloudFile {
  std::vector<CloudPoint> points;
  bool has_colors = false;
  bool has_normals = false;
  bool has_labels = false;
  /// Points that received a zero normal because the file has none.
  std::size_t missing_normals = 0;
  std::vector<std::size_t> dropped_records;
};

/// Reads x,y,z[,red,green,blue][,nx,ny,nz][,label]. u8 colors are rescaled to [0,1].
[[nodiscard]] PointCloudFile load_points(const std::filesystem::path& path,
                                         ParseMode mode = ParseMode::kStrict);

/// Colors are written as u8, labels as u16 "label" when every point has one.
void save_points(const std::filesystem::path& path, std::span<const CloudPoint> points);

/// Sidecar label file: one little-endian u16 per point, no header.
[[nodiscard]] std::vector<Label> load_labels(const std::filesystem::path& path);
void save_labels(const std::filesystem::path& path, std::span<const Label> labels);

/// Replaces point labels; kNoLabel entries clear the label. Sizes must match.
void attach_labels(std::span<CloudPoint> points, std::span<const Label> labels);
void attach_labels(std::span<AugmentedPoint> points, std::span<const Label> labels);

// ---------------------------------------------------------------------------
// Augmented cloud container "G2PA".
//
//   offset 0   char[4]  "G2PA"
//   offset 4   u32      version word: low 16 bits = version (1),
//                       high 16 bits = header flags (bit0: label block present)
//   offset 8   u64      point count N
//   offset 16  N * 13 * f32   x,y,z, r,g,b, nx,ny,nz, sx,sy,sz, alpha
//              N * u8         point flags (see PointFlag)
//              N * u16        labels (kNoLabel = none), only with header bit0
// ---------------------------------------------------------------------------

inline constexpr std::array<char, 4> kAugmentedMagic = {'G', '2', 'P', 'A'};
inline constexpr std::uint16_t kAugmentedVersion = 1;
inline constexpr std::uint16_t kHeaderHasLabels = 0x1;
inline constexpr std::size_t kAugmentedHeaderSize = 16;

enum PointFlag : std::uint8_t {
  kFlagMatched = 1u << 0,
  kFlagInScale = 1u << 1,
  kFlagInSem = 1u << 2,
  kFlagInUnion = 1u << 3,
};

[[nodiscard]] std::uint8_t pack_flags(bool matched, const PointBoundary& boundary);
[[nodiscard]] PointBoundary unpack_boundary(std::uint8_t flags);

struct AugmentedCloud {
  std::vector<AugmentedPoint> points;
  std::vector<PointBoundary> boundary;
  bool has_labels = false;
};

/// Serializes to bytes. `boundary` may be empty (all flags clear) or match points.
[[nodiscard]] std::vector<std::byte> encode_augmented(std::span<const AugmentedPoint> points,
                                                      std::span<const PointBoundary> boundary);
[[nodiscard]] AugmentedCloud decode_augmented(std::span<const std::byte> bytes);

void save_augmented(std::span<const AugmentedPoint> points, const BoundaryLabels& labels,
                    const std::filesystem::path& path);
void save_augmented(std::span<const AugmentedPoint> points, const std::filesystem::path& path);
[[nodiscard]] AugmentedCloud load_augmented(const std::filesystem::path& path);

/// Boundary-only export: one flag byte per point, input order.
[[nodiscard]] std::vector<std::uint8_t> boundary_flags(std::span<const AugmentedPoint> points,
                                                       const BoundaryLabels& labels);
void save_boundary_flags(const std::filesystem::path& path, std::span<const std::uint8_t> flags);
[[nodiscard]] std::vector<std::uint8_t> load_boundary_flags(const std::filesystem::path& path);

/// Whole-file helpers with path context in errors.
[[nodiscard]] std::vector<std::byte> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::byte> bytes);

}  // namespace g2p
