#include "g2p/scene_io.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <fstream>

#include "g2p/errors.hpp"
#include "support/random.hpp"
#include "support/temp_dir.hpp"

namespace g2p {
namespace {

using testing::fixture;
using testing::Random;
using testing::TempDir;

float payload_float(const GaussianPrimitive& g, std::size_t index) {
  float v;
  std::memcpy(&v, g.sh_payload.data() + 4 * index, 4);
  return v;
}

TEST(LoadSplatsTest, TwoGaussianFixtureMatchesFieldByField) {
  const auto scene = load_splats(fixture("two_gaussians.ply"));
  ASSERT_EQ(scene.gaussians.size(), 2u);
  ASSERT_EQ(scene.header.properties.size(), 17u);
  const auto payload = scene.payload_properties();
  ASSERT_EQ(payload.size(), 6u);
  EXPECT_EQ(payload[0].name, "nx");
  EXPECT_EQ(payload[5].name, "f_dc_2");

  const auto& g0 = scene.gaussians[0];
  EXPECT_EQ(g0.centroid, Vec3(0.5, -1.25, 2.0));
  EXPECT_EQ(g0.scale, Vec3(1, 1, 1));
  EXPECT_EQ(g0.opacity, 0.5);
  EXPECT_EQ(g0.rotation.coeffs(), Quat::Identity().coeffs());
  ASSERT_EQ(g0.sh_payload.size(), 24u);
  EXPECT_EQ(payload_float(g0, 3), 0.1f);
  EXPECT_EQ(payload_float(g0, 4), 0.2f);
  EXPECT_EQ(payload_float(g0, 5), 0.3f);

  const auto& g1 = scene.gaussians[1];
  EXPECT_EQ(g1.centroid, Vec3(1, 2, 3));
  EXPECT_NEAR(g1.opacity, 0.75, 1e-7);
  EXPECT_NEAR(g1.scale.x(), 0.5, 1e-7);
  EXPECT_NEAR(g1.scale.y(), 0.25, 1e-7);
  EXPECT_NEAR(g1.scale.z(), 2.0, 1e-6);
  EXPECT_NEAR(g1.rotation.w(), 0.0, 1e-15);
  EXPECT_NEAR(g1.rotation.z(), 1.0, 1e-15);
  EXPECT_EQ(payload_float(g1, 2), 1.0f);
  EXPECT_EQ(payload_float(g1, 5), -3.0f);
}

TEST(LoadSplatsTest, SaturatedLogitGivesOpacityNearOne) {
  const auto scene = load_splats(fixture("saturated_opacity.ply"));
  ASSERT_EQ(scene.gaussians.size(), 1u);
  EXPECT_NEAR(scene.gaussians[0].opacity, 1.0, 1e-8);
}

TEST(LoadSplatsTest, MissingPropertiesAreListed) {
  try {
    (void)load_splats(fixture("missing_scale.ply"));
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("scale_1"), std::string::npos);
    EXPECT_NE(what.find("scale_2"), std::string::npos);
  }
}

TEST(LoadSplatsTest, NonFiniteRecordStrictAbortsLenientDrops) {
  try {
    (void)load_splats(fixture("nan_record.ply"), ParseMode::kStrict);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("record 1"), std::string::npos);
  }
  const auto scene = load_splats(fixture("nan_record.ply"), ParseMode::kLenient);
  EXPECT_EQ(scene.gaussians.size(), 2u);
  EXPECT_EQ(scene.dropped_records, std::vector<std::size_t>{1});
  EXPECT_EQ(scene.gaussians[1].centroid, Vec3(1, 1, 1));
}

TEST(LoadSplatsTest, TruncatedAndUnsupportedFilesAreTypedErrors) {
  EXPECT_THROW((void)load_splats(fixture("truncated.ply")), ValidationError);
  EXPECT_THROW((void)load_splats(fixture("ascii.ply")), SchemaError);
  EXPECT_THROW((void)load_splats(fixture("does_not_exist.ply")), IoError);
}

TEST(LoadSplatsTest, SaveThenLoadRestoresCanonicalValues) {
  TempDir dir;
  const auto scene = load_splats(fixture("two_gaussians.ply"));
  save_splats(dir / "copy.ply", scene.gaussians, scene.payload_properties());
  const auto again = load_splats(dir / "copy.ply");
  ASSERT_EQ(again.gaussians.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_TRUE(again.gaussians[i].centroid.isApprox(scene.gaussians[i].centroid));
    EXPECT_TRUE(again.gaussians[i].scale.isApprox(scene.gaussians[i].scale, 1e-6));
    EXPECT_NEAR(again.gaussians[i].opacity, scene.gaussians[i].opacity, 1e-6);
    EXPECT_EQ(again.gaussians[i].sh_payload, scene.gaussians[i].sh_payload);
  }
  EXPECT_THROW(save_splats(dir / "bad.ply", scene.gaussians), PreconditionError);
}

TEST(LoadPointsTest, LabeledFixture) {
  const auto file = load_points(fixture("three_labeled_points.ply"));
  ASSERT_EQ(file.points.size(), 3u);
  EXPECT_TRUE(file.has_colors && file.has_normals && file.has_labels);
  const auto& p = file.points;
  EXPECT_EQ(p[0].color, Vec3(1.0, 0.0, 128.0 / 255.0));
  EXPECT_EQ(p[1].normal, Vec3(0, 1, 0));
  EXPECT_EQ(p[2].position, Vec3(0, 1, 0.5));
  EXPECT_EQ(p[0].label, Label{3});
  EXPECT_EQ(p[1].label, Label{0});
  EXPECT_EQ(p[2].label, Label{19});
}

TEST(LoadPointsTest, LabelsRoundTripThroughPointFileAndSidecar) {
  TempDir dir;
  auto file = load_points(fixture("three_labeled_points.ply"));
  save_points(dir / "pts.ply", file.points);
  const auto again = load_points(dir / "pts.ply");
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(again.points[i].label, file.points[i].label);
    EXPECT_TRUE(again.points[i].color.isApprox(file.points[i].color));
  }

  const auto sidecar = load_labels(fixture("three_labels.u16"));
  EXPECT_EQ(sidecar, (std::vector<Label>{3, 0, 19}));
  auto bare = load_points(fixture("positions_only.ply")).points;
  EXPECT_THROW(attach_labels(bare, sidecar), PreconditionError);
  save_labels(dir / "l.u16", sidecar);
  EXPECT_EQ(load_labels(dir / "l.u16"), sidecar);
}

TEST(LoadPointsTest, MissingAttributesDefaultToZero) {
  const auto file = load_points(fixture("positions_only.ply"));
  ASSERT_EQ(file.points.size(), 2u);
  EXPECT_FALSE(file.has_normals);
  EXPECT_EQ(file.missing_normals, 2u);
  EXPECT_EQ(file.points[1].normal, Vec3::Zero());
  EXPECT_EQ(file.points[1].color, Vec3::Zero());
  EXPECT_FALSE(file.points[0].label.has_value());
}

TEST(LoadPointsTest, EmptyFileIsEmptyList) {
  const auto file = load_points(fixture("empty_points.ply"));
  EXPECT_TRUE(file.points.empty());
}

TEST(LoadPointsTest, FloatColorsPassThrough) {
  const auto file = load_points(fixture("float_colors.ply"));
  EXPECT_EQ(file.points[0].color, Vec3(0.25, 0.5, 1.0));
}

TEST(LoadPointsTest, PartialNormalGroupIsSchemaError) {
  try {
    (void)load_points(fixture("partial_normals.ply"));
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("ny"), std::string::npos);
  }
}

TEST(FixtureCorpusTest, LenientLoadingIsTotal) {
  // Every fixture parses or yields a typed library error; nothing else escapes.
  for (const auto& entry : std::filesystem::directory_iterator(G2P_FIXTURE_DIR)) {
    if (entry.path().extension() != ".ply") continue;
    for (int as_points = 0; as_points < 2; ++as_points) {
      try {
        if (as_points) {
          (void)load_points(entry.path(), ParseMode::kLenient);
        } else {
          (void)load_splats(entry.path(), ParseMode::kLenient);
        }
      } catch (const Error&) {
      } catch (...) {
        ADD_FAILURE() << entry.path() << " threw a non-library exception";
      }
    }
  }
}

AugmentedPoint random_augmented(Random& rng) {
  AugmentedPoint p;
  auto f = [&](double lo, double hi) { return static_cast<double>(static_cast<float>(rng.uniform(lo, hi))); };
  p.position = Vec3(f(-5, 5), f(-5, 5), f(0, 3));
  p.color = Vec3(f(0, 1), f(0, 1), f(0, 1));
  p.normal = Vec3(f(-1, 1), f(-1, 1), f(-1, 1));
  p.scale = Vec3(f(0, .1), f(0, .1), f(0, .1));
  p.opacity = f(0, 1);
  p.matched = rng.coin();
  if (rng.coin(0.9)) p.label = static_cast<Label>(rng.index(20));
  return p;
}

TEST(AugmentedFileTest, EmptyCloudIsSixteenByteHeader) {
  const auto bytes = encode_augmented({}, {});
  ASSERT_EQ(bytes.size(), 16u);
  EXPECT_EQ(static_cast<char>(bytes[0]), 'G');
  EXPECT_EQ(static_cast<char>(bytes[3]), 'A');
  EXPECT_EQ(static_cast<std::uint8_t>(bytes[4]), 1);
  for (std::size_t i = 5; i < 16; ++i) EXPECT_EQ(static_cast<std::uint8_t>(bytes[i]), 0) << i;
  EXPECT_TRUE(decode_augmented(bytes).points.empty());
}

TEST(AugmentedFileTest, FlagBitLayout) {
  EXPECT_EQ(pack_flags(true, PointBoundary{false, true, true}), 0b00001101);
  EXPECT_EQ(pack_flags(false, PointBoundary{true, false, true}), 0b00001010);
  EXPECT_EQ(unpack_boundary(0b00001101), (PointBoundary{false, true, true}));
}

TEST(AugmentedFileTest, SaveLoadIsBitwiseIdentity) {
  TempDir dir;
  Random rng(42);
  for (int trial = 0; trial < 3; ++trial) {
    std::vector<AugmentedPoint> points(1000);
    BoundaryLabels labels;
    for (auto& p : points) {
      p = random_augmented(rng);
      PointBoundary b{rng.coin(), rng.coin(), false};
      b.in_union = b.in_scale || b.in_sem;
      labels.points.push_back(b);
    }
    const auto path = dir / ("cloud" + std::to_string(trial) + ".g2pa");
    save_augmented(points, labels, path);
    const auto loaded = load_augmented(path);
    ASSERT_EQ(loaded.points.size(), points.size());
    EXPECT_TRUE(loaded.has_labels);
    for (std::size_t i = 0; i < points.size(); ++i) {
      EXPECT_EQ(loaded.points[i].features(), points[i].features()) << i;
      EXPECT_EQ(loaded.points[i].matched, points[i].matched);
      EXPECT_EQ(loaded.points[i].label, points[i].label);
      EXPECT_EQ(loaded.boundary[i], labels.points[i]);
    }
    // Re-encoding what was loaded reproduces the file byte for byte.
    EXPECT_EQ(encode_augmented(loaded.points, loaded.boundary), read_file(path));
  }
}

TEST(AugmentedFileTest, LabelBlockIsSignaledInHeader) {
  std::vector<AugmentedPoint> points(2);
  EXPECT_EQ(encode_augmented(points, {}).size(), 16u + 2 * 53);
  points[1].label = 4;
  const auto bytes = encode_augmented(points, {});
  EXPECT_EQ(bytes.size(), 16u + 2 * 55);
  EXPECT_EQ(static_cast<std::uint8_t>(bytes[6]), 1);
  const auto cloud = decode_augmented(bytes);
  EXPECT_FALSE(cloud.points[0].label.has_value());
  EXPECT_EQ(cloud.points[1].label, Label{4});
}

TEST(AugmentedFileTest, CorruptContainersAreRejected) {
  std::vector<AugmentedPoint> points(3);
  auto bytes = encode_augmented(points, {});
  auto short_bytes = bytes;
  short_bytes.pop_back();
  EXPECT_THROW((void)decode_augmented(short_bytes), ValidationError);
  auto bad_magic = bytes;
  bad_magic[0] = std::byte{'X'};
  EXPECT_THROW((void)decode_augmented(bad_magic), ValidationError);
  auto bad_version = bytes;
  bad_version[4] = std::byte{2};
  EXPECT_THROW((void)decode_augmented(bad_version), ValidationError);
  auto huge_count = bytes;
  huge_count[15] = std::byte{0x7f};
  EXPECT_THROW((void)decode_augmented(huge_count), ValidationError);
}

TEST(AugmentedFileTest, LengthMismatchIsPreconditionError) {
  TempDir dir;
  std::vector<AugmentedPoint> points(3);
  BoundaryLabels labels;
  labels.points.resize(2);
  EXPECT_THROW(save_augmented(points, labels, dir / "x.g2pa"), PreconditionError);
}

TEST(AugmentedFileTest, IoFailureCarriesPath) {
  try {
    save_augmented({}, std::filesystem::path("/nonexistent_dir_g2p/out.g2pa"));
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent_dir_g2p/out.g2pa"), std::string::npos);
  }
}

TEST(BoundaryFlagsTest, OneBytePerPointInInputOrder) {
  TempDir dir;
  std::vector<AugmentedPoint> points(3);
  points[0].matched = true;
  BoundaryLabels labels;
  labels.points = {{false, true, true}, {true, false, true}, {}};
  const auto flags = boundary_flags(points, labels);
  EXPECT_EQ(flags, (std::vector<std::uint8_t>{0b1101, 0b1010, 0}));
  save_boundary_flags(dir / "b.u8", flags);
  EXPECT_EQ(std::filesystem::file_size(dir / "b.u8"), 3u);
  EXPECT_EQ(load_boundary_flags(dir / "b.u8"), flags);
}

}  // namespace
}  // namespace g2p
