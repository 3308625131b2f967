#include "g2p/scene_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "g2p/errors.hpp"

namespace g2p {

namespace {

template <class T>
T byteswap_if_big(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<std::byte, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  } else {
    return v;
  }
}

template <class T>
T load_le(const std::byte* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return byteswap_if_big(v);
}

template <class T>
void store_le(std::byte* p, T v) {
  v = byteswap_if_big(v);
  std::memcpy(p, &v, sizeof(T));
}

template <class T>
void append_le(std::vector<std::byte>& out, T v) {
  const std::size_t at = out.size();
  out.resize(at + sizeof(T));
  store_le(out.data() + at, v);
}

double read_scalar(const std::byte* p, ScalarType type) {
  switch (type) {
    case ScalarType::kInt8:
      return load_le<std::int8_t>(p);
    case ScalarType::kUInt8:
      return load_le<std::uint8_t>(p);
    case ScalarType::kInt16:
      return load_le<std::int16_t>(p);
    case ScalarType::kUInt16:
      return load_le<std::uint16_t>(p);
    case ScalarType::kInt32:
      return load_le<std::int32_t>(p);
    case ScalarType::kUInt32:
      return load_le<std::uint32_t>(p);
    case ScalarType::kFloat32:
      return load_le<float>(p);
    case ScalarType::kFloat64:
      return load_le<double>(p);
  }
  return 0.0;
}

bool is_integer(ScalarType type) {
  return type != ScalarType::kFloat32 && type != ScalarType::kFloat64;
}

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
  return s;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

/// Streams records of the vertex element in fixed-size blocks.
class RecordReader {
 public:
  RecordReader(std::istream& in, const SplatFileHeader& header, std::filesystem::path path)
      : in_(in), header_(header), path_(std::move(path)), stride_(header.record_size()) {}

  template <class Fn>
  void for_each(Fn&& fn) {
    constexpr std::size_t kBlock = 4096;
    std::vector<std::byte> buffer(kBlock * stride_);
    std::size_t index = 0;
    while (index < header_.count) {
      const std::size_t n = std::min(kBlock, header_.count - index);
      in_.read(reinterpret_cast<char*>(buffer.data()), static_cast<std::streamsize>(n * stride_));
      const auto got = static_cast<std::size_t>(in_.gcount());
      if (got != n * stride_) {
        throw ValidationError("'" + path_.string() + "': truncated, header declares " +
                              std::to_string(header_.count) + " records but only " +
                              std::to_string(index + got / stride_) + " are present");
      }
      for (std::size_t i = 0; i < n; ++i) fn(index + i, buffer.data() + i * stride_);
      index += n;
    }
  }

 private:
  std::istream& in_;
  const SplatFileHeader& header_;
  std::filesystem::path path_;
  std::size_t stride_;
};

/// Field accessor resolved once per file.
struct Field {
  std::size_t offset = 0;
  ScalarType type = ScalarType::kFloat32;
  [[nodiscard]] double read(const std::byte* record) const { return read_scalar(record + offset, type); }
};

std::optional<Field> lookup(const SplatFileHeader& h, std::string_view name) {
  const auto idx = h.find(name);
  if (!idx) return std::nullopt;
  return Field{h.offset_of(*idx), h.properties[*idx].type};
}

SplatFileHeader read_header_checked(std::istream& in, const std::filesystem::path& path) {
  try {
    return read_header(in);
  } catch (const SchemaError& e) {
    throw SchemaError("'" + path.string() + "': " + e.what());
  }
}

/// Handles a bad record: strict aborts, lenient records and skips.
void reject_record(ParseMode mode, const std::filesystem::path& path, std::size_t index,
                   const std::string& why, std::vector<std::size_t>& dropped) {
  if (mode == ParseMode::kStrict) {
    throw ValidationError("'" + path.string() + "': record " + std::to_string(index) + ": " + why);
  }
  dropped.push_back(index);
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double logit(double p) {
  constexpr double kEps = 1e-7;
  p = std::clamp(p, kEps, 1.0 - kEps);
  return std::log(p / (1.0 - p));
}

constexpr std::array<std::string_view, 11> kSplatRequired = {
    "x", "y", "z", "opacity", "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"};

}  // namespace

std::size_t scalar_size(ScalarType type) {
  switch (type) {
    case ScalarType::kInt8:
    case ScalarType::kUInt8:
      return 1;
    case ScalarType::kInt16:
    case ScalarType::kUInt16:
      return 2;
    case ScalarType::kInt32:
    case ScalarType::kUInt32:
    case ScalarType::kFloat32:
      return 4;
    case ScalarType::kFloat64:
      return 8;
  }
  return 0;
}

std::string_view scalar_name(ScalarType type) {
  switch (type) {
    case ScalarType::kInt8:
      return "char";
    case ScalarType::kUInt8:
      return "uchar";
    case ScalarType::kInt16:
      return "short";
    case ScalarType::kUInt16:
      return "ushort";
    case ScalarType::kInt32:
      return "int";
    case ScalarType::kUInt32:
      return "uint";
    case ScalarType::kFloat32:
      return "float";
    case ScalarType::kFloat64:
      return "double";
  }
  return "?";
}

std::optional<ScalarType> parse_scalar(std::string_view name) {
  if (name == "char" || name == "int8") return ScalarType::kInt8;
  if (name == "uchar" || name == "uint8") return ScalarType::kUInt8;
  if (name == "short" || name == "int16") return ScalarType::kInt16;
  if (name == "ushort" || name == "uint16") return ScalarType::kUInt16;
  if (name == "int" || name == "int32") return ScalarType::kInt32;
  if (name == "uint" || name == "uint32") return ScalarType::kUInt32;
  if (name == "float" || name == "float32") return ScalarType::kFloat32;
  if (name == "double" || name == "float64") return ScalarType::kFloat64;
  return std::nullopt;
}

std::size_t SplatFileHeader::record_size() const {
  std::size_t n = 0;
  for (const auto& p : properties) n += scalar_size(p.type);
  return n;
}

std::optional<std::size_t> SplatFileHeader::find(std::string_view name) const {
  for (std::size_t i = 0; i < properties.size(); ++i) {
    if (properties[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t SplatFileHeader::offset_of(std::size_t index) const {
  std::size_t off = 0;
  for (std::size_t i = 0; i < index; ++i) off += scalar_size(properties[i].type);
  return off;
}

SplatFileHeader read_header(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != "ply") throw SchemaError("missing 'ply' magic line");

  SplatFileHeader header;
  bool saw_format = false;
  enum class State { kBeforeVertex, kInVertex, kAfterVertex } state = State::kBeforeVertex;
  while (true) {
    if (!std::getline(in, line)) throw SchemaError("header ended before 'end_header'");
    line = trim(line);
    std::istringstream words(line);
    std::string keyword;
    words >> keyword;
    if (keyword.empty() || keyword == "comment" || keyword == "obj_info") continue;
    if (keyword == "end_header") break;
    if (keyword == "format") {
      std::string fmt, version;
      words >> fmt >> version;
      if (fmt != "binary_little_endian") {
        throw SchemaError("unsupported format '" + fmt + "' (only binary_little_endian)");
      }
      header.format = fmt + " " + version;
      saw_format = true;
    } else if (keyword == "element") {
      std::string name;
      long long count = -1;
      words >> name >> count;
      if (state == State::kBeforeVertex) {
        if (name != "vertex") throw SchemaError("first element must be 'vertex', got '" + name + "'");
        if (count < 0) throw SchemaError("invalid vertex count");
        header.count = static_cast<std::size_t>(count);
        state = State::kInVertex;
      } else {
        state = State::kAfterVertex;  // trailing elements are not read
      }
    } else if (keyword == "property") {
      if (state == State::kBeforeVertex) throw SchemaError("property before any element");
      if (state == State::kAfterVertex) continue;
      std::string type_name, name;
      words >> type_name;
      if (type_name == "list") throw SchemaError("list properties are not supported in 'vertex'");
      words >> name;
      const auto type = parse_scalar(type_name);
      if (!type) throw SchemaError("unknown scalar type '" + type_name + "'");
      if (name.empty()) throw SchemaError("property without a name");
      header.properties.push_back({name, *type});
    } else {
      throw SchemaError("unexpected header line '" + line + "'");
    }
  }
  if (!saw_format) throw SchemaError("missing format line");
  if (state == State::kBeforeVertex) throw SchemaError("no 'vertex' element");
  return header;
}

void write_header(std::ostream& out, const SplatFileHeader& header) {
  out << "ply\nformat " << header.format << "\nelement vertex " << header.count << '\n';
  for (const auto& p : header.properties) {
    out << "property " << scalar_name(p.type) << ' ' << p.name << '\n';
  }
  out << "end_header\n";
}

std::vector<PlyProperty> SplatScene::payload_properties() const {
  std::vector<PlyProperty> out;
  for (const auto& p : header.properties) {
    if (std::find(kSplatRequired.begin(), kSplatRequired.end(), p.name) == kSplatRequired.end()) {
      out.push_back(p);
    }
  }
  return out;
}

SplatScene load_splats(const std::filesystem::path& path, ParseMode mode) {
  auto in = open_input(path);
  SplatScene scene;
  scene.header = read_header_checked(in, path);
  const auto& h = scene.header;

  std::vector<std::string> missing;
  std::array<Field, kSplatRequired.size()> fields;
  for (std::size_t i = 0; i < kSplatRequired.size(); ++i) {
    if (auto f = lookup(h, kSplatRequired[i])) {
      fields[i] = *f;
    } else {
      missing.emplace_back(kSplatRequired[i]);
    }
  }
  if (!missing.empty()) {
    std::string names;
    for (const auto& m : missing) names += (names.empty() ? "" : ", ") + m;
    throw SchemaError("'" + path.string() + "': missing required properties: " + names);
  }

  // Payload = all non-required properties, copied as raw byte runs.
  std::vector<std::pair<std::size_t, std::size_t>> payload_runs;
  std::size_t payload_size = 0;
  for (std::size_t i = 0; i < h.properties.size(); ++i) {
    const auto& name = h.properties[i].name;
    if (std::find(kSplatRequired.begin(), kSplatRequired.end(), name) != kSplatRequired.end()) continue;
    const std::size_t size = scalar_size(h.properties[i].type);
    payload_runs.emplace_back(h.offset_of(i), size);
    payload_size += size;
  }

  scene.gaussians.reserve(h.count);
  RecordReader reader(in, h, path);
  reader.for_each([&](std::size_t index, const std::byte* rec) {
    std::array<double, kSplatRequired.size()> v;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = fields[i].read(rec);
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!std::isfinite(v[i])) {
        reject_record(mode, path, index, "non-finite " + std::string(kSplatRequired[i]),
                      scene.dropped_records);
        return;
      }
    }
    GaussianPrimitive g;
    g.centroid = Vec3(v[0], v[1], v[2]);
    g.opacity = sigmoid(v[3]);
    g.scale = Vec3(std::exp(v[4]), std::exp(v[5]), std::exp(v[6]));
    if (!g.scale.allFinite() || (g.scale.array() <= 0.0).any()) {
      reject_record(mode, path, index, "scale out of range after exp", scene.dropped_records);
      return;
    }
    Quat q(v[7], v[8], v[9], v[10]);
    if (q.norm() == 0.0) {
      reject_record(mode, path, index, "zero-norm rotation", scene.dropped_records);
      return;
    }
    g.rotation = q.normalized();
    g.sh_payload.resize(payload_size);
    std::size_t at = 0;
    for (const auto& [off, size] : payload_runs) {
      std::memcpy(g.sh_payload.data() + at, rec + off, size);
      at += size;
    }
    scene.gaussians.push_back(std::move(g));
  });
  return scene;
}

void save_splats(const std::filesystem::path& path, std::span<const GaussianPrimitive> gaussians,
                 std::span<const PlyProperty> payload_layout) {
  SplatFileHeader header;
  header.count = gaussians.size();
  for (const char* n : {"x", "y", "z"}) header.properties.push_back({n, ScalarType::kFloat32});
  std::size_t payload_size = 0;
  for (const auto& p : payload_layout) {
    header.properties.push_back(p);
    payload_size += scalar_size(p.type);
  }
  for (const char* n : {"opacity", "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"}) {
    header.properties.push_back({n, ScalarType::kFloat32});
  }

  std::vector<std::byte> body;
  body.reserve(gaussians.size() * header.record_size());
  for (std::size_t i = 0; i < gaussians.size(); ++i) {
    const auto& g = gaussians[i];
    if (g.sh_payload.size() != payload_size) {
      throw PreconditionError("gaussian " + std::to_string(i) + ": payload has " +
                              std::to_string(g.sh_payload.size()) + " bytes, layout expects " +
                              std::to_string(payload_size));
    }
    for (int a = 0; a < 3; ++a) append_le(body, static_cast<float>(g.centroid[a]));
    body.insert(body.end(), g.sh_payload.begin(), g.sh_payload.end());
    append_le(body, static_cast<float>(logit(g.opacity)));
    for (int a = 0; a < 3; ++a) append_le(body, static_cast<float>(std::log(g.scale[a])));
    const Quat q = g.rotation.normalized();
    for (double c : {q.w(), q.x(), q.y(), q.z()}) append_le(body, static_cast<float>(c));
  }

  auto out = open_output(path);
  write_header(out, header);
  out.write(reinterpret_cast<const char*>(body.data()), static_cast<std::streamsize>(body.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

PointCloudFile load_points(const std::filesystem::path& path, ParseMode mode) {
  auto in = open_input(path);
  const SplatFileHeader h = read_header_checked(in, path);

  auto require_group = [&](std::initializer_list<std::string_view> names, bool required) {
    std::vector<Field> found;
    std::vector<std::string> absent;
    for (auto n : names) {
      if (auto f = lookup(h, n)) {
        found.push_back(*f);
      } else {
        absent.emplace_back(n);
      }
    }
    if (!absent.empty() && (required || !found.empty())) {
      std::string list;
      for (const auto& a : absent) list += (list.empty() ? "" : ", ") + a;
      throw SchemaError("'" + path.string() + "': missing required properties: " + list);
    }
    return found;
  };

  const auto pos = require_group({"x", "y", "z"}, true);
  const auto col = require_group({"red", "green", "blue"}, false);
  const auto nrm = require_group({"nx", "ny", "nz"}, false);
  const auto label = lookup(h, "label");

  PointCloudFile file;
  file.has_colors = !col.empty();
  file.has_normals = !nrm.empty();
  file.has_labels = label.has_value();
  double color_div = 1.0;
  if (file.has_colors) {
    const ScalarType ct = col[0].type;
    if (ct == ScalarType::kUInt8) {
      color_div = 255.0;
    } else if (ct != ScalarType::kFloat32 && ct != ScalarType::kFloat64) {
      throw SchemaError("'" + path.string() + "': colors must be uchar or float, got " +
                        std::string(scalar_name(ct)));
    }
    for (const auto& f : col) {
      if (f.type != ct) throw SchemaError("'" + path.string() + "': mixed color property types");
    }
  }
  if (label && !is_integer(label->type)) {
    throw SchemaError("'" + path.string() + "': label must be an integer property");
  }

  file.points.reserve(h.count);
  RecordReader reader(in, h, path);
  reader.for_each([&](std::size_t index, const std::byte* rec) {
    CloudPoint p;
    p.position = Vec3(pos[0].read(rec), pos[1].read(rec), pos[2].read(rec));
    if (!p.position.allFinite()) {
      reject_record(mode, path, index, "non-finite position", file.dropped_records);
      return;
    }
    if (file.has_colors) {
      p.color = Vec3(col[0].read(rec), col[1].read(rec), col[2].read(rec)) / color_div;
      if (!p.color.allFinite() || (p.color.array() < 0.0).any() || (p.color.array() > 1.0).any()) {
        reject_record(mode, path, index, "color outside [0,1]", file.dropped_records);
        return;
      }
    }
    if (file.has_normals) {
      p.normal = Vec3(nrm[0].read(rec), nrm[1].read(rec), nrm[2].read(rec));
      if (!p.normal.allFinite()) {
        reject_record(mode, path, index, "non-finite normal", file.dropped_records);
        return;
      }
      const double n = p.normal.norm();
      if (n > 0.0) p.normal /= n;
    }
    if (label) {
      const double l = label->read(rec);
      if (l < 0.0 || l >= static_cast<double>(kNoLabel)) {
        reject_record(mode, path, index, "label out of u16 range", file.dropped_records);
        return;
      }
      p.label = static_cast<Label>(l);
    }
    file.points.push_back(p);
  });
  if (!file.has_normals) file.missing_normals = file.points.size();
  return file;
}

void save_points(const std::filesystem::path& path, std::span<const CloudPoint> points) {
  const bool labels = !points.empty() && std::all_of(points.begin(), points.end(),
                                                     [](const CloudPoint& p) { return p.label.has_value(); });
  SplatFileHeader header;
  header.count = points.size();
  for (const char* n : {"x", "y", "z"}) header.properties.push_back({n, ScalarType::kFloat32});
  for (const char* n : {"red", "green", "blue"}) header.properties.push_back({n, ScalarType::kUInt8});
  for (const char* n : {"nx", "ny", "nz"}) header.properties.push_back({n, ScalarType::kFloat32});
  if (labels) header.properties.push_back({"label", ScalarType::kUInt16});

  std::vector<std::byte> body;
  body.reserve(points.size() * header.record_size());
  for (const auto& p : points) {
    for (int a = 0; a < 3; ++a) append_le(body, static_cast<float>(p.position[a]));
    for (int a = 0; a < 3; ++a) {
      append_le(body, static_cast<std::uint8_t>(std::lround(std::clamp(p.color[a], 0.0, 1.0) * 255.0)));
    }
    for (int a = 0; a < 3; ++a) append_le(body, static_cast<float>(p.normal[a]));
    if (labels) append_le(body, *p.label);
  }
  auto out = open_output(path);
  write_header(out, header);
  out.write(reinterpret_cast<const char*>(body.data()), static_cast<std::streamsize>(body.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::vector<Label> load_labels(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  if (bytes.size() % sizeof(Label) != 0) {
    throw ValidationError("'" + path.string() + "': label file size " + std::to_string(bytes.size()) +
                          " is not a multiple of 2");
  }
  std::vector<Label> labels(bytes.size() / sizeof(Label));
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = load_le<Label>(bytes.data() + 2 * i);
  return labels;
}

void save_labels(const std::filesystem::path& path, std::span<const Label> labels) {
  std::vector<std::byte> bytes;
  bytes.reserve(labels.size() * sizeof(Label));
  for (Label l : labels) append_le(bytes, l);
  write_file(path, bytes);
}

namespace {
template <class P>
void attach_labels_impl(std::span<P> points, std::span<const Label> labels) {
  if (points.size() != labels.size()) {
    throw PreconditionError("label count " + std::to_string(labels.size()) + " does not match point count " +
                            std::to_string(points.size()));
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    points[i].label = labels[i] == kNoLabel ? std::nullopt : std::optional<Label>(labels[i]);
  }
}
}  // namespace

void attach_labels(std::span<CloudPoint> points, std::span<const Label> labels) {
  attach_labels_impl(points, labels);
}

void attach_labels(std::span<AugmentedPoint> points, std::span<const Label> labels) {
  attach_labels_impl(points, labels);
}

std::uint8_t pack_flags(bool matched, const PointBoundary& b) {
  std::uint8_t f = 0;
  if (matched) f |= kFlagMatched;
  if (b.in_scale) f |= kFlagInScale;
  if (b.in_sem) f |= kFlagInSem;
  if (b.in_union) f |= kFlagInUnion;
  return f;
}

PointBoundary unpack_boundary(std::uint8_t flags) {
  return {(flags & kFlagInScale) != 0, (flags & kFlagInSem) != 0, (flags & kFlagInUnion) != 0};
}

std::vector<std::byte> encode_augmented(std::span<const AugmentedPoint> points,
                                        std::span<const PointBoundary> boundary) {
  if (!boundary.empty() && boundary.size() != points.size()) {
    throw PreconditionError("boundary labels (" + std::to_string(boundary.size()) +
                            ") and points (" + std::to_string(points.size()) + ") differ in length");
  }
  const bool labels = std::any_of(points.begin(), points.end(),
                                  [](const AugmentedPoint& p) { return p.label.has_value(); });
  const std::size_t n = points.size();
  std::vector<std::byte> out;
  out.reserve(kAugmentedHeaderSize + n * (AugmentedPoint::kFeatureDim * 4 + 1 + (labels ? 2 : 0)));
  for (char c : kAugmentedMagic) out.push_back(static_cast<std::byte>(c));
  const std::uint32_t word = kAugmentedVersion | (static_cast<std::uint32_t>(labels ? kHeaderHasLabels : 0) << 16);
  append_le(out, word);
  append_le(out, static_cast<std::uint64_t>(n));
  for (const auto& p : points) {
    const auto f = p.features();
    for (std::size_t i = 0; i < AugmentedPoint::kFeatureDim; ++i) append_le(out, static_cast<float>(f[i]));
  }
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(static_cast<std::byte>(pack_flags(points[i].matched, boundary.empty() ? PointBoundary{} : boundary[i])));
  }
  if (labels) {
    for (const auto& p : points) append_le(out, p.label.value_or(kNoLabel));
  }
  return out;
}

AugmentedCloud decode_augmented(std::span<const std::byte> bytes) {
  if (bytes.size() < kAugmentedHeaderSize) throw ValidationError("augmented file shorter than its 16-byte header");
  for (std::size_t i = 0; i < 4; ++i) {
    if (static_cast<char>(bytes[i]) != kAugmentedMagic[i]) throw ValidationError("bad magic, expected 'G2PA'");
  }
  const auto word = load_le<std::uint32_t>(bytes.data() + 4);
  const auto version = static_cast<std::uint16_t>(word & 0xFFFFu);
  const auto header_flags = static_cast<std::uint16_t>(word >> 16);
  if (version != kAugmentedVersion) throw ValidationError("unsupported G2PA version " + std::to_string(version));
  if ((header_flags & ~kHeaderHasLabels) != 0) throw ValidationError("unknown G2PA header flags");
  const bool labels = (header_flags & kHeaderHasLabels) != 0;
  const auto count64 = load_le<std::uint64_t>(bytes.data() + 8);
  const std::size_t per_point = AugmentedPoint::kFeatureDim * 4 + 1 + (labels ? 2 : 0);
  if (count64 > (bytes.size() - kAugmentedHeaderSize) / per_point ||
      kAugmentedHeaderSize + count64 * per_point != bytes.size()) {
    throw ValidationError("G2PA declares " + std::to_string(count64) + " points but holds " +
                          std::to_string(bytes.size()) + " bytes");
  }
  const auto n = static_cast<std::size_t>(count64);

  AugmentedCloud cloud;
  cloud.has_labels = labels;
  cloud.points.resize(n);
  cloud.boundary.resize(n);
  const std::byte* feat = bytes.data() + kAugmentedHeaderSize;
  const std::byte* flags = feat + n * AugmentedPoint::kFeatureDim * 4;
  const std::byte* lab = flags + n;
  for (std::size_t i = 0; i < n; ++i) {
    std::array<double, AugmentedPoint::kFeatureDim> f;
    for (std::size_t j = 0; j < f.size(); ++j) f[j] = load_le<float>(feat + (i * f.size() + j) * 4);
    auto& p = cloud.points[i];
    p.position = Vec3(f[0], f[1], f[2]);
    p.color = Vec3(f[3], f[4], f[5]);
    p.normal = Vec3(f[6], f[7], f[8]);
    p.scale = Vec3(f[9], f[10], f[11]);
    p.opacity = f[12];
    const auto fl = static_cast<std::uint8_t>(flags[i]);
    p.matched = (fl & kFlagMatched) != 0;
    cloud.boundary[i] = unpack_boundary(fl);
    if (labels) {
      const auto l = load_le<Label>(lab + 2 * i);
      if (l != kNoLabel) p.label = l;
    }
  }
  return cloud;
}

void save_augmented(std::span<const AugmentedPoint> points, const BoundaryLabels& labels,
                    const std::filesystem::path& path) {
  if (labels.size() != points.size()) {
    throw PreconditionError("cannot save '" + path.string() + "': " + std::to_string(points.size()) +
                            " points but " + std::to_string(labels.size()) + " boundary labels");
  }
  write_file(path, encode_augmented(points, labels.points));
}

void save_augmented(std::span<const AugmentedPoint> points, const std::filesystem::path& path) {
  write_file(path, encode_augmented(points, {}));
}

AugmentedCloud load_augmented(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return decode_augmented(bytes);
  } catch (const ValidationError& e) {
    throw ValidationError("'" + path.string() + "': " + e.what());
  }
}

std::vector<std::uint8_t> boundary_flags(std::span<const AugmentedPoint> points, const BoundaryLabels& labels) {
  if (labels.size() != points.size()) throw PreconditionError("boundary labels and points differ in length");
  std::vector<std::uint8_t> flags(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) flags[i] = pack_flags(points[i].matched, labels.points[i]);
  return flags;
}

void save_boundary_flags(const std::filesystem::path& path, std::span<const std::uint8_t> flags) {
  write_file(path, std::as_bytes(flags));
}

std::vector<std::uint8_t> load_boundary_flags(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  std::vector<std::uint8_t> flags(bytes.size());
  std::transform(bytes.begin(), bytes.end(), flags.begin(), [](std::byte b) { return static_cast<std::uint8_t>(b); });
  return flags;
}

std::vector<std::byte> read_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  in.seekg(0, std::ios::end);
  const auto size = in.tellg();
  if (size < 0) throw IoError("cannot determine size of '" + path.string() + "'");
  in.seekg(0, std::ios::beg);
  std::vector<std::byte> bytes(static_cast<std::size_t>(size));
  in.read(reinterpret_cast<char*>(bytes.data()), size);
  if (!in) throw IoError("read failed for '" + path.string() + "'");
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::byte> bytes) {
  auto out = open_output(path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace g2p
