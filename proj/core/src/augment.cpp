#include "g2p/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "g2p/covariance.hpp"
#include "g2p/errors.hpp"
#include "g2p/parallel.hpp"

namespace g2p {

std::vector<Vec3> GaussianSet::centroids() const {
  std::vector<Vec3> out;
  out.reserve(primitives.size());
  for (const auto& g : primitives) out.push_back(g.centroid);
  return out;
}

GaussianSet prepare_gaussians(std::vector<GaussianPrimitive> gaussians, double eps_sigma) {
  GaussianSet set;
  set.covariances.reserve(gaussians.size());
  for (std::size_t i = 0; i < gaussians.size(); ++i) {
    const auto& g = gaussians[i];
    try {
      require_finite(g.centroid, "centroid");
      set.covariances.push_back(covariance_from(g.rotation, g.scale, eps_sigma));
    } catch (const ValidationError& e) {
      throw ValidationError("gaussian " + std::to_string(i) + ": " + e.what());
    }
  }
  set.primitives = std::move(gaussians);
  return set;
}

CorrespondenceView CorrespondenceSet::operator[](std::size_t point) const {
  const std::size_t b = offsets_[point];
  const std::size_t n = offsets_[point + 1] - b;
  return {std::span<const GaussianId>(ids_).subspan(b, n), std::span<const double>(distances_).subspan(b, n),
          std::span<const double>(weights_).subspan(b, n), status_[point]};
}

void CorrespondenceSet::append(const Correspondence& c) {
  ids_.insert(ids_.end(), c.ids.begin(), c.ids.end());
  distances_.insert(distances_.end(), c.distances.begin(), c.distances.end());
  weights_.insert(weights_.end(), c.weights.begin(), c.weights.end());
  status_.push_back(c.status);
  offsets_.push_back(ids_.size());
}

void CorrespondenceSet::append(const CorrespondenceSet& other) {
  const std::size_t base = ids_.size();
  ids_.insert(ids_.end(), other.ids_.begin(), other.ids_.end());
  distances_.insert(distances_.end(), other.distances_.begin(), other.distances_.end());
  weights_.insert(weights_.end(), other.weights_.begin(), other.weights_.end());
  status_.insert(status_.end(), other.status_.begin(), other.status_.end());
  for (std::size_t i = 1; i < other.offsets_.size(); ++i) offsets_.push_back(base + other.offsets_[i]);
}

void CorrespondenceSet::reserve(std::size_t points, std::size_t neighbors) {
  offsets_.reserve(points + 1);
  status_.reserve(points);
  ids_.reserve(points * neighbors);
  distances_.reserve(points * neighbors);
  weights_.reserve(points * neighbors);
}

double correspondence_distance(const Vec3& point, const GaussianSet& gaussians, GaussianId id,
                               DistanceMetric metric) {
  const Vec3 d = point - gaussians.primitives[id].centroid;
  if (metric == DistanceMetric::kEuclidean) return d.norm();
  return std::sqrt(std::max(d.dot(gaussians.covariances[id].inverse * d), 0.0));
}

Correspondence match_point(const Vec3& point, const CentroidIndex& index, const GaussianSet& gaussians,
                           const PipelineConfig& cfg) {
  Correspondence out;
  std::vector<GaussianId> candidates;
  double radius = cfg.r_match;
  int doublings = 0;
  index.radius_query(point, radius, candidates);
  while (candidates.empty() && doublings < kMaxRadiusDoublings) {
    radius *= 2.0;
    ++doublings;
    index.radius_query(point, radius, candidates);
  }
  out.radius_doublings = doublings;
  if (candidates.empty()) {
    out.status = MatchStatus::kUnmatched;
    return out;
  }
  out.status = doublings == 0 ? MatchStatus::kDirect : MatchStatus::kFallback;

  std::vector<std::pair<double, GaussianId>> ranked;
  ranked.reserve(candidates.size());
  for (GaussianId id : candidates) {
    ranked.emplace_back(correspondence_distance(point, gaussians, id, cfg.distance_metric), id);
  }
  const std::size_t keep = std::min(cfg.k, ranked.size());
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(keep), ranked.end());
  ranked.resize(keep);

  out.ids.reserve(keep);
  out.distances.reserve(keep);
  for (const auto& [d, id] : ranked) {
    out.ids.push_back(id);
    out.distances.push_back(d);
  }
  out.weights = compute_weights(out.distances);
  return out;
}

std::vector<double> compute_weights(std::span<const double> distances) {
  if (distances.empty()) throw PreconditionError("compute_weights: empty distance list");
  std::vector<double> w(distances.size(), 0.0);
  std::size_t coincident = 0;
  for (double d : distances) {
    if (!(d >= 0.0)) throw PreconditionError("compute_weights: negative or NaN distance");
    if (d < kCoincidentDistance) ++coincident;
  }
  if (coincident > 0) {
    const double share = 1.0 / static_cast<double>(coincident);
    for (std::size_t j = 0; j < distances.size(); ++j) {
      if (distances[j] < kCoincidentDistance) w[j] = share;
    }
    return w;
  }
  double total = 0.0;
  for (std::size_t j = 0; j < distances.size(); ++j) {
    w[j] = 1.0 / distances[j];
    total += w[j];
  }
  for (double& x : w) x /= total;
  return w;
}

AggregatedAttributes aggregate_attributes(const CorrespondenceView& corr,
                                          std::span<const GaussianPrimitive> gaussians) {
  AggregatedAttributes out;
  if (corr.ids.empty()) return out;
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  double alo = std::numeric_limits<double>::infinity();
  double ahi = -alo;
  for (std::size_t j = 0; j < corr.ids.size(); ++j) {
    const auto& g = gaussians[corr.ids[j]];
    out.scale += corr.weights[j] * g.scale;
    out.opacity += corr.weights[j] * g.opacity;
    lo = lo.cwiseMin(g.scale);
    hi = hi.cwiseMax(g.scale);
    alo = std::min(alo, g.opacity);
    ahi = std::max(ahi, g.opacity);
  }
  // A convex combination stays in the hull; rounding alone can step one ulp out.
  out.scale = out.scale.cwiseMax(lo).cwiseMin(hi);
  out.opacity = std::clamp(out.opacity, alo, ahi);
  return out;
}

namespace {

AugmentedPoint augment_one(const CloudPoint& p, const Correspondence& corr, const GaussianSet& gaussians) {
  AugmentedPoint a;
  a.position = p.position;
  a.color = p.color;
  a.normal = p.normal;
  a.label = p.label;
  const auto attrs = aggregate_attributes(corr.view(), gaussians.primitives);
  a.scale = attrs.scale;
  a.opacity = attrs.opacity;
  a.matched = corr.status == MatchStatus::kDirect;
  return a;
}

}  // namespace

AugmentResult augment_cloud(std::span<const CloudPoint> points, const GaussianSet& gaussians,
                            const CentroidIndex& index, const PipelineConfig& cfg, std::size_t threads) {
  cfg.validate();
  if (index.size() > gaussians.size()) throw PreconditionError("index was built over a different gaussian set");

  AugmentResult result;
  result.points.resize(points.size());
  const auto chunks = partition(points.size(), std::max<std::size_t>(threads, 1));
  std::vector<CorrespondenceSet> partial(chunks.size());
  std::vector<AugmentStats> stats(chunks.size());

  parallel_chunks(points.size(), threads, [&](const Chunk& chunk) {
    auto& corr_out = partial[chunk.index];
    auto& st = stats[chunk.index];
    corr_out.reserve(chunk.end - chunk.begin, cfg.k);
    for (std::size_t i = chunk.begin; i < chunk.end; ++i) {
      const Correspondence corr = match_point(points[i].position, index, gaussians, cfg);
      result.points[i] = augment_one(points[i], corr, gaussians);
      switch (corr.status) {
        case MatchStatus::kDirect:
          ++st.direct;
          break;
        case MatchStatus::kFallback:
          ++st.fallback;
          break;
        case MatchStatus::kUnmatched:
          ++st.unmatched;
          break;
      }
      corr_out.append(corr);
    }
  });

  result.correspondences.reserve(points.size(), cfg.k);
  for (std::size_t c = 0; c < chunks.size(); ++c) {
    result.correspondences.append(partial[c]);
    result.stats.direct += stats[c].direct;
    result.stats.fallback += stats[c].fallback;
    result.stats.unmatched += stats[c].unmatched;
  }
  return result;
}

AugmentResult augment_cloud(std::span<const CloudPoint> points, const GaussianSet& gaussians,
                            const PipelineConfig& cfg, std::size_t threads) {
  cfg.validate();
  const auto index = CentroidIndex::build(gaussians.centroids(), cfg.r_match);
  return augment_cloud(points, gaussians, index, cfg, threads);
}

}  // namespace g2p
