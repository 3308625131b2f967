#include "g2p/augment.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cstring>
#include <numeric>

#include "g2p/covariance.hpp"
#include "g2p/errors.hpp"
#include "support/oracles.hpp"
#include "support/random.hpp"

namespace g2p {
namespace {

using testing::Random;
using Real = long double;

GaussianPrimitive make_gaussian(const Vec3& c, const Vec3& s, double alpha, const Quat& q = Quat::Identity()) {
  GaussianPrimitive g;
  g.centroid = c;
  g.scale = s;
  g.opacity = alpha;
  g.rotation = q;
  return g;
}

CloudPoint make_point(const Vec3& p) {
  CloudPoint c;
  c.position = p;
  c.color = Vec3(0.1, 0.2, 0.3);
  c.normal = Vec3(0, 0, 1);
  return c;
}

std::vector<GaussianPrimitive> random_gaussians(Random& rng, std::size_t n, double extent, double lo = 0.005,
                                                double hi = 0.05) {
  std::vector<GaussianPrimitive> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(rng.gaussian(extent, lo, hi));
  return out;
}

std::vector<CloudPoint> random_points(Random& rng, std::size_t n, double extent) {
  std::vector<CloudPoint> out(n);
  for (auto& p : out) {
    p.position = rng.vec3(0, extent);
    p.color = rng.vec3(0, 1);
    p.normal = rng.vec3(-1, 1).normalized();
    if (rng.coin(0.8)) p.label = static_cast<Label>(rng.index(20));
  }
  return out;
}

TEST(ComputeWeightsTest, HandExamples) {
  const std::vector<double> equal{1, 1, 1};
  for (double w : compute_weights(equal)) EXPECT_DOUBLE_EQ(w, 1.0 / 3.0);

  const std::vector<double> one_two{1, 2};
  const auto w = compute_weights(one_two);
  EXPECT_DOUBLE_EQ(w[0], 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(w[1], 1.0 / 3.0);

  const std::vector<double> coincident{0, 5};
  EXPECT_EQ(compute_weights(coincident), (std::vector<double>{1.0, 0.0}));

  const std::vector<double> two_coincident{3, 0, 1e-13, 2};
  EXPECT_EQ(compute_weights(two_coincident), (std::vector<double>{0.0, 0.5, 0.5, 0.0}));
}

TEST(ComputeWeightsTest, RejectsEmptyAndNegative) {
  EXPECT_THROW((void)compute_weights({}), PreconditionError);
  const std::vector<double> negative{1, -1};
  EXPECT_THROW((void)compute_weights(negative), PreconditionError);
}

TEST(ComputeWeightsTest, SimplexProperty) {
  Random rng(1);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<double> d(1 + rng.index(30));
    for (auto& v : d) v = std::exp(rng.uniform(-12, 4));
    const auto w = compute_weights(d);
    const double sum = std::accumulate(w.begin(), w.end(), 0.0);
    EXPECT_NEAR(sum, 1.0, 1e-9);
    for (double x : w) EXPECT_GT(x, 0.0);
    // Closer neighbors never get less weight.
    for (std::size_t i = 0; i < d.size(); ++i)
      for (std::size_t j = 0; j < d.size(); ++j)
        if (d[i] < d[j]) EXPECT_GE(w[i], w[j]);
  }
}

TEST(AggregateTest, SingleNeighborIsIdentity) {
  const std::vector<GaussianPrimitive> gs{make_gaussian(Vec3::Zero(), Vec3(.1, .2, .3), 0.8)};
  const std::vector<GaussianId> ids{0};
  const std::vector<double> d{0.5}, w{1.0};
  const auto out = aggregate_attributes({ids, d, w, MatchStatus::kDirect}, gs);
  EXPECT_EQ(out.scale, Vec3(.1, .2, .3));
  EXPECT_EQ(out.opacity, 0.8);
}

TEST(AggregateTest, EqualWeightsAverage) {
  const std::vector<GaussianPrimitive> gs{make_gaussian(Vec3::Zero(), Vec3(1, 1, 1), 0.2),
                                          make_gaussian(Vec3::Zero(), Vec3(1, 1, 1), 0.6)};
  const std::vector<GaussianId> ids{0, 1};
  const std::vector<double> d{1, 1}, w{0.5, 0.5};
  EXPECT_NEAR(aggregate_attributes({ids, d, w, MatchStatus::kDirect}, gs).opacity, 0.4, 1e-15);
}

TEST(AggregateTest, EmptyCorrespondenceGivesZeros) {
  const std::vector<GaussianPrimitive> gs{make_gaussian(Vec3::Zero(), Vec3(1, 1, 1), 0.2)};
  const auto out = aggregate_attributes({}, gs);
  EXPECT_EQ(out.scale, Vec3::Zero());
  EXPECT_EQ(out.opacity, 0.0);
}

TEST(AggregateTest, TwentyNeighborsMatchExtendedPrecision) {
  Random rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const auto gs = random_gaussians(rng, 20, 1.0, 1e-3, 1.0);
    std::vector<GaussianId> ids(20);
    std::iota(ids.begin(), ids.end(), 0u);
    std::vector<double> d(20);
    for (auto& v : d) v = rng.uniform(0.01, 3.0);
    const auto w = compute_weights(d);
    const auto out = aggregate_attributes({ids, d, w, MatchStatus::kDirect}, gs);

    Real inv_total = 0;
    for (double v : d) inv_total += 1 / Real(v);
    Real alpha = 0;
    Real scale[3] = {0, 0, 0};
    for (std::size_t j = 0; j < 20; ++j) {
      const Real wj = (1 / Real(d[j])) / inv_total;
      alpha += wj * gs[j].opacity;
      for (int a = 0; a < 3; ++a) scale[a] += wj * gs[j].scale[a];
    }
    EXPECT_NEAR(out.opacity, static_cast<double>(alpha), 1e-12);
    for (int a = 0; a < 3; ++a) EXPECT_NEAR(out.scale[a], static_cast<double>(scale[a]), 1e-12 * (1 + scale[a]));
  }
}

TEST(MatchPointTest, SingleCandidateGetsAllWeight) {
  const auto set = prepare_gaussians({make_gaussian(Vec3(0.02, 0, 0), Vec3(.01, .01, .01), 0.5),
                                      make_gaussian(Vec3(5, 0, 0), Vec3(.01, .01, .01), 0.5)});
  const auto index = build_index(set.primitives, 0.1);
  const auto c = match_point(Vec3::Zero(), index, set, PipelineConfig{});
  ASSERT_EQ(c.ids, std::vector<GaussianId>{0});
  EXPECT_EQ(c.weights, std::vector<double>{1.0});
  EXPECT_EQ(c.status, MatchStatus::kDirect);
  EXPECT_NEAR(c.distances[0], 2.0, 1e-12);
}

TEST(MatchPointTest, SymmetricPairSplitsEvenly) {
  const auto set = prepare_gaussians({make_gaussian(Vec3(-0.03, 0, 0), Vec3(.02, .01, .01), 0.2),
                                      make_gaussian(Vec3(0.03, 0, 0), Vec3(.02, .01, .01), 0.6)});
  const auto index = build_index(set.primitives, 0.1);
  const auto c = match_point(Vec3::Zero(), index, set, PipelineConfig{});
  ASSERT_EQ(c.ids, (std::vector<GaussianId>{0, 1}));
  EXPECT_EQ(c.distances[0], c.distances[1]);
  EXPECT_EQ(c.weights, (std::vector<double>{0.5, 0.5}));
}

TEST(MatchPointTest, FallbackDoublesRadiusThenGivesUp) {
  const auto set = prepare_gaussians({make_gaussian(Vec3(0.35, 0, 0), Vec3(.01, .01, .01), 0.5)});
  const auto index = build_index(set.primitives, 0.1);
  PipelineConfig cfg;
  const auto near = match_point(Vec3::Zero(), index, set, cfg);
  EXPECT_EQ(near.status, MatchStatus::kFallback);
  EXPECT_EQ(near.radius_doublings, 2);  // 0.1 -> 0.2 -> 0.4
  EXPECT_EQ(near.ids, std::vector<GaussianId>{0});

  // 3.2 m is the last radius tried; 3.3 m away stays unmatched.
  const auto far = match_point(Vec3(-2.95, 0, 0), index, set, cfg);
  EXPECT_EQ(far.status, MatchStatus::kUnmatched);
  EXPECT_TRUE(far.ids.empty());
  const auto edge = match_point(Vec3(-2.85, 0, 0), index, set, cfg);
  EXPECT_EQ(edge.status, MatchStatus::kFallback);
  EXPECT_EQ(edge.radius_doublings, 5);
}

TEST(MatchPointTest, TiesBreakByAscendingId) {
  std::vector<GaussianPrimitive> gs;
  for (int i = 0; i < 6; ++i) {
    const double angle = i * 2 * 3.14159265358979323846 / 6;
    gs.push_back(make_gaussian(Vec3(0.05 * std::cos(angle), 0.05 * std::sin(angle), 0), Vec3(.02, .02, .02), 0.5));
  }
  gs.push_back(make_gaussian(Vec3::Zero(), Vec3(.02, .02, .02), 0.5));
  const auto set = prepare_gaussians(gs);
  const auto index = build_index(set.primitives, 0.1);
  PipelineConfig cfg;
  cfg.k = 3;
  cfg.distance_metric = DistanceMetric::kEuclidean;
  // Put six identical distances in play: the query sits at the ring center.
  const auto c = match_point(Vec3(0, 0, 1e-3), index, set, cfg);
  ASSERT_EQ(c.ids.size(), 3u);
  EXPECT_EQ(c.ids[0], 6u);
  std::vector<std::pair<double, GaussianId>> ranked;
  for (GaussianId i = 0; i < 7; ++i)
    ranked.emplace_back(correspondence_distance(Vec3(0, 0, 1e-3), set, i, cfg.distance_metric), i);
  std::sort(ranked.begin(), ranked.end());
  EXPECT_EQ(c.ids[1], ranked[1].second);
  EXPECT_EQ(c.ids[2], ranked[2].second);
}

TEST(MatchPointTest, ExactTiesKeepLowestIds) {
  const Vec3 s(.02, .02, .02);
  const auto set = prepare_gaussians({make_gaussian(Vec3(0, 0.05, 0), s, 0.1), make_gaussian(Vec3(0.05, 0, 0), s, 0.2),
                                      make_gaussian(Vec3(0, -0.05, 0), s, 0.3), make_gaussian(Vec3(-0.05, 0, 0), s, 0.4)});
  const auto index = build_index(set.primitives, 0.1);
  PipelineConfig cfg;
  cfg.k = 2;
  const auto c = match_point(Vec3::Zero(), index, set, cfg);
  EXPECT_EQ(c.ids, (std::vector<GaussianId>{0, 1}));
  EXPECT_EQ(c.distances[0], c.distances[1]);
}

TEST(MatchPointTest, HundredGaussiansMatchAllPairsOracle) {
  Random rng(7);
  for (auto metric : {DistanceMetric::kMahalanobis, DistanceMetric::kEuclidean}) {
    for (int trial = 0; trial < 50; ++trial) {
      const auto set = prepare_gaussians(random_gaussians(rng, 100, 0.3));
      const auto index = build_index(set.primitives, 0.1);
      PipelineConfig cfg;
      cfg.distance_metric = metric;
      const Vec3 p = rng.vec3(0, 0.3);
      const auto got = match_point(p, index, set, cfg);
      const auto want = testing::match_all_pairs(p, set.primitives, cfg.r_match, cfg.k, metric);
      ASSERT_EQ(got.ids, want.ids);
      for (std::size_t j = 0; j < want.ids.size(); ++j) {
        EXPECT_NEAR(got.distances[j], static_cast<double>(want.distances[j]), 1e-9 * (1 + want.distances[j]));
        EXPECT_NEAR(got.weights[j], static_cast<double>(want.weights[j]), 1e-12);
      }
    }
  }
}

TEST(MatchPointTest, FewerCandidatesThanKUsesAll) {
  Random rng(8);
  const auto set = prepare_gaussians(random_gaussians(rng, 5, 0.05));
  const auto index = build_index(set.primitives, 0.1);
  const auto c = match_point(Vec3(0.025, 0.025, 0.025), index, set, PipelineConfig{});
  EXPECT_EQ(c.ids.size(), 5u);
  EXPECT_NEAR(std::accumulate(c.weights.begin(), c.weights.end(), 0.0), 1.0, 1e-12);
}

TEST(AugmentCloudTest, PointOnGaussianCopiesAttributes) {
  const auto set = prepare_gaussians({make_gaussian(Vec3(1, 2, 3), Vec3(.1, .2, .3), 0.8)});
  const std::vector<CloudPoint> pts{make_point(Vec3(1, 2, 3))};
  const auto result = augment_cloud(pts, set, PipelineConfig{});
  ASSERT_EQ(result.points.size(), 1u);
  EXPECT_TRUE(result.points[0].matched);
  EXPECT_EQ(result.points[0].scale, Vec3(.1, .2, .3));
  EXPECT_EQ(result.points[0].opacity, 0.8);
  EXPECT_EQ(result.stats.direct, 1u);
}

TEST(AugmentCloudTest, IsolatedPointIsUnmatchedWithZeros) {
  const auto set = prepare_gaussians({make_gaussian(Vec3(0, 0, 0), Vec3(.1, .2, .3), 0.8)});
  const std::vector<CloudPoint> pts{make_point(Vec3(10, 0, 0)), make_point(Vec3(0.15, 0, 0))};
  const auto result = augment_cloud(pts, set, PipelineConfig{});
  EXPECT_FALSE(result.points[0].matched);
  EXPECT_EQ(result.points[0].scale, Vec3::Zero());
  EXPECT_EQ(result.points[0].opacity, 0.0);
  EXPECT_EQ(result.correspondences[0].status, MatchStatus::kUnmatched);
  // Found only after enlarging the radius: attributes assigned, flag stays false.
  EXPECT_FALSE(result.points[1].matched);
  EXPECT_EQ(result.points[1].opacity, 0.8);
  EXPECT_EQ(result.stats.unmatched, 1u);
  EXPECT_EQ(result.stats.fallback, 1u);
}

class AugmentPropertyTest : public ::testing::Test {
 protected:
  void SetUp() override {
    Random rng(99);
    gaussians = prepare_gaussians(random_gaussians(rng, 3000, 1.0));
    points = random_points(rng, 1500, 1.1);
    result = augment_cloud(points, gaussians, PipelineConfig{});
  }
  GaussianSet gaussians;
  std::vector<CloudPoint> points;
  AugmentResult result;
};

TEST_F(AugmentPropertyTest, WeightsLieOnSimplex) {
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto c = result.correspondences[i];
    if (c.status == MatchStatus::kUnmatched) continue;
    double sum = 0;
    for (double w : c.weights) {
      EXPECT_GT(w, 0.0);
      sum += w;
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST_F(AugmentPropertyTest, AttributesStayInsideNeighborHull) {
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto c = result.correspondences[i];
    if (c.ids.empty()) continue;
    Vec3 lo = Vec3::Constant(1e300), hi = Vec3::Constant(-1e300);
    double alo = 1e300, ahi = -1e300;
    for (auto id : c.ids) {
      lo = lo.cwiseMin(gaussians.primitives[id].scale);
      hi = hi.cwiseMax(gaussians.primitives[id].scale);
      alo = std::min(alo, gaussians.primitives[id].opacity);
      ahi = std::max(ahi, gaussians.primitives[id].opacity);
    }
    const auto& p = result.points[i];
    EXPECT_TRUE((p.scale.array() >= lo.array()).all() && (p.scale.array() <= hi.array()).all());
    EXPECT_GE(p.opacity, alo);
    EXPECT_LE(p.opacity, ahi);
  }
}

TEST_F(AugmentPropertyTest, GeometryIsBitwiseUnchanged) {
  ASSERT_EQ(result.points.size(), points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    EXPECT_EQ(std::memcmp(result.points[i].position.data(), points[i].position.data(), sizeof(Vec3)), 0);
    EXPECT_EQ(std::memcmp(result.points[i].color.data(), points[i].color.data(), sizeof(Vec3)), 0);
    EXPECT_EQ(std::memcmp(result.points[i].normal.data(), points[i].normal.data(), sizeof(Vec3)), 0);
    EXPECT_EQ(result.points[i].label, points[i].label);
  }
}

TEST_F(AugmentPropertyTest, ThreadCountDoesNotChangeOutput) {
  for (std::size_t threads : {2u, 3u, 8u}) {
    const auto other = augment_cloud(points, gaussians, PipelineConfig{}, threads);
    EXPECT_TRUE(other.correspondences == result.correspondences) << threads;
    for (std::size_t i = 0; i < points.size(); ++i) {
      ASSERT_EQ(other.points[i].features(), result.points[i].features());
      ASSERT_EQ(other.points[i].matched, result.points[i].matched);
    }
  }
}

TEST_F(AugmentPropertyTest, PointOrderDoesNotChangePerPointOutput) {
  std::vector<std::size_t> perm(points.size());
  std::iota(perm.begin(), perm.end(), 0u);
  std::reverse(perm.begin(), perm.end());
  std::vector<CloudPoint> reversed;
  for (auto i : perm) reversed.push_back(points[i]);
  const auto other = augment_cloud(reversed, gaussians, PipelineConfig{}, 4);
  for (std::size_t j = 0; j < perm.size(); ++j) {
    ASSERT_EQ(other.points[j].features(), result.points[perm[j]].features());
  }
}

TEST(AugmentCloudTest, IsotropicGaussiansMakeMetricsAgree) {
  Random rng(31);
  std::vector<GaussianPrimitive> gs;
  for (int i = 0; i < 4000; ++i) {
    auto g = rng.gaussian(1.0, 0.02, 0.02);
    g.scale = Vec3::Constant(0.02);
    gs.push_back(g);
  }
  const auto set = prepare_gaussians(gs);
  const auto points = random_points(rng, 2000, 1.0);
  PipelineConfig euclid;
  euclid.distance_metric = DistanceMetric::kEuclidean;
  const auto a = augment_cloud(points, set, PipelineConfig{});
  const auto b = augment_cloud(points, set, euclid);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto ca = a.correspondences[i];
    const auto cb = b.correspondences[i];
    ASSERT_TRUE(std::equal(ca.ids.begin(), ca.ids.end(), cb.ids.begin(), cb.ids.end())) << i;
  }
}

TEST(AugmentCloudTest, EmptyInputsAreHandled) {
  const auto set = prepare_gaussians({});
  const std::vector<CloudPoint> pts{make_point(Vec3::Zero())};
  const auto result = augment_cloud(pts, set, PipelineConfig{});
  EXPECT_FALSE(result.points[0].matched);
  EXPECT_EQ(result.stats.unmatched, 1u);
  const auto none = augment_cloud(std::span<const CloudPoint>{}, set, PipelineConfig{});
  EXPECT_TRUE(none.points.empty());
}

TEST(AugmentCloudTest, FullOracleAgreementOnDenseScene) {
  Random rng(1234);
  const auto set = prepare_gaussians(random_gaussians(rng, 1500, 0.6, 0.005, 0.08));
  const auto points = random_points(rng, 400, 0.6);
  const auto result = augment_cloud(points, set, PipelineConfig{}, 2);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto want = testing::match_all_pairs(points[i].position, set.primitives, 0.1, 20, DistanceMetric::kMahalanobis);
    const auto got = result.correspondences[i];
    ASSERT_TRUE(std::equal(got.ids.begin(), got.ids.end(), want.ids.begin(), want.ids.end())) << i;
    Real alpha = 0;
    for (std::size_t j = 0; j < want.ids.size(); ++j) alpha += want.weights[j] * set.primitives[want.ids[j]].opacity;
    EXPECT_NEAR(result.points[i].opacity, static_cast<double>(alpha), 1e-10);
  }
}

}  // namespace
}  // namespace g2p
