#include "g2p/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "g2p/errors.hpp"

namespace g2p {

ConfusionMatrix::ConfusionMatrix(std::size_t classes) : classes_(classes), counts_(classes * classes, 0) {}

void ConfusionMatrix::accumulate(std::span<const Label> predicted, std::span<const Label> truth,
                                 std::optional<Label> ignore_id) {
  if (predicted.size() != truth.size()) {
    throw ValidationError("prediction count " + std::to_string(predicted.size()) + " differs from truth count " +
                          std::to_string(truth.size()));
  }
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (ignore_id && truth[i] == *ignore_id) continue;
    if (truth[i] >= classes_ || predicted[i] >= classes_) {
      throw ValidationError("label out of range at index " + std::to_string(i) + " (pred " +
                            std::to_string(predicted[i]) + ", true " + std::to_string(truth[i]) + ", classes " +
                            std::to_string(classes_) + ")");
    }
    ++at(predicted[i], truth[i]);
  }
}

ConfusionMatrix& ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.classes_ != classes_) throw ValidationError("cannot merge confusion matrices of different sizes");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  return *this;
}

std::uint64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

std::uint64_t ConfusionMatrix::true_count(std::size_t c) const {
  std::uint64_t s = 0;
  for (std::size_t p = 0; p < classes_; ++p) s += at(p, c);
  return s;
}

std::uint64_t ConfusionMatrix::predicted_count(std::size_t c) const {
  std::uint64_t s = 0;
  for (std::size_t t = 0; t < classes_; ++t) s += at(c, t);
  return s;
}

ConfusionMatrix accumulate(std::span<const Label> predicted, std::span<const Label> truth, std::size_t classes,
                           std::optional<Label> ignore_id) {
  ConfusionMatrix cm(classes);
  cm.accumulate(predicted, truth, ignore_id);
  return cm;
}

std::vector<std::size_t> Taxonomy::ungrouped() const {
  std::vector<bool> grouped(class_names.size(), false);
  for (const auto& g : groups) {
    for (std::size_t c : g.classes) {
      if (c < grouped.size()) grouped[c] = true;
    }
  }
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < grouped.size(); ++c) {
    if (!grouped[c]) out.push_back(c);
  }
  return out;
}

Taxonomy Taxonomy::scannet20() {
  Taxonomy t;
  t.class_names = {"wall",    "floor",   "cabinet", "bed",          "chair",          "sofa",   "table",
                   "door",    "window",  "bookshelf", "picture",    "counter",        "desk",   "curtain",
                   "refrigerator", "shower curtain", "toilet", "sink", "bathtub", "otherfurniture"};
  t.groups = {
      {"geometrically_distinguishable", {0, 1, 2, 3, 4, 5, 6, 9}},
      {"geometrically_challenging", {7, 8, 10, 13, 14, 15}},
  };
  return t;
}

Taxonomy Taxonomy::generic(std::size_t classes) {
  Taxonomy t;
  for (std::size_t c = 0; c < classes; ++c) t.class_names.push_back(std::to_string(c));
  return t;
}

std::vector<GroupMetrics> group_means(std::span<const std::optional<double>> per_class_iou,
                                      std::span<const ClassGroup> groups) {
  std::vector<GroupMetrics> out;
  for (const auto& g : groups) {
    GroupMetrics m;
    m.name = g.name;
    double sum = 0.0;
    for (std::size_t c : g.classes) {
      if (c < per_class_iou.size() && per_class_iou[c]) {
        sum += *per_class_iou[c];
        ++m.classes_present;
      }
    }
    if (m.classes_present > 0) m.mean_iou = sum / static_cast<double>(m.classes_present);
    out.push_back(std::move(m));
  }
  return out;
}

MetricsReport summarize(const ConfusionMatrix& cm, const Taxonomy& taxonomy) {
  if (taxonomy.size() != cm.classes()) {
    throw ValidationError("taxonomy has " + std::to_string(taxonomy.size()) + " classes, confusion matrix has " +
                          std::to_string(cm.classes()));
  }
  MetricsReport r;
  r.total = cm.total();
  if (r.total == 0) throw ValidationError("cannot summarize an empty confusion matrix");

  std::uint64_t correct = 0;
  double iou_sum = 0.0;
  double acc_sum = 0.0;
  std::size_t present = 0;
  std::vector<std::optional<double>> ious(cm.classes());
  r.per_class.resize(cm.classes());
  for (std::size_t c = 0; c < cm.classes(); ++c) {
    const std::uint64_t tp = cm.at(c, c);
    const std::uint64_t support = cm.true_count(c);
    const std::uint64_t fp = cm.predicted_count(c) - tp;
    correct += tp;
    auto& m = r.per_class[c];
    m.support = support;
    if (support == 0) continue;
    const std::uint64_t fn = support - tp;
    m.iou = static_cast<double>(tp) / static_cast<double>(tp + fp + fn);
    m.accuracy = static_cast<double>(tp) / static_cast<double>(support);
    ious[c] = m.iou;
    iou_sum += *m.iou;
    acc_sum += *m.accuracy;
    ++present;
  }
  r.miou = iou_sum / static_cast<double>(present);
  r.macc = acc_sum / static_cast<double>(present);
  r.oa = static_cast<double>(correct) / static_cast<double>(r.total);
  r.groups = group_means(ious, taxonomy.groups);
  return r;
}

}  // namespace g2p
