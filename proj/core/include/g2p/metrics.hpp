#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "g2p/types.hpp"

namespace g2p {

/// C x C counts indexed (predicted, true).
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes = 0);

  /// Adds one count per non-ignored pair. Ids >= classes throw ValidationError.
  void accumulate(std::span<const Label> predicted, std::span<const Label> truth,
                  std::optional<Label> ignore_id = std::nullopt);
  ConfusionMatrix& merge(const ConfusionMatrix& other);

  [[nodiscard]] std::uint64_t at(std::size_t predicted, std::size_t truth) const {
    return counts_[predicted * classes_ + truth];
  }
  std::uint64_t& at(std::size_t predicted, std::size_t truth) { return counts_[predicted * classes_ + truth]; }
  [[nodiscard]] std::size_t classes() const { return classes_; }
  [[nodiscard]] std::uint64_t total() const;
  [[nodiscard]] std::uint64_t true_count(std::size_t c) const;       ///< column sum
  [[nodiscard]] std::uint64_t predicted_count(std::size_t c) const;  ///< row sum

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t classes_ = 0;
  std::vector<std::uint64_t> counts_;
};

[[nodiscard]] ConfusionMatrix accumulate(std::span<const Label> predicted, std::span<const Label> truth,
                                         std::size_t classes, std::optional<Label> ignore_id = std::nullopt);

struct ClassGroup {
  std::string name;
  std::vector<std::size_t> classes;
};

struct Taxonomy {
  std::vector<std::string> class_names;
  std::vector<ClassGroup> groups;

  [[nodiscard]] std::size_t size() const { return class_names.size(); }
  /// Classes that belong to no group, ascending.
  [[nodiscard]] std::vector<std::size_t> ungrouped() const;

  /// The 20-class indoor benchmark taxonomy with the geometrically
  /// distinguishable / challenging split (6 classes left ungrouped).
  [[nodiscard]] static Taxonomy scannet20();
  /// Classes named "0".."n-1", no groups.
  [[nodiscard]] static Taxonomy generic(std::size_t classes);
};

struct ClassMetrics {
  std::uint64_t support = 0;  ///< true count
  std::optional<double> iou;  ///< absent when support is 0
  std::optional<double> accuracy;
};

struct GroupMetrics {
  std::string name;
  std::optional<double> mean_iou;  ///< absent when no member class has support
  std::size_t classes_present = 0;
};

struct MetricsReport {
  std::vector<ClassMetrics> per_class;
  double miou = 0.0;
  double macc = 0.0;
  double oa = 0.0;
  std::vector<GroupMetrics> groups;
  std::uint64_t total = 0;
};

/// Mean IoU of each group over its members that have a value.
[[nodiscard]] std::vector<GroupMetrics> group_means(std::span<const std::optional<double>> per_class_iou,
                                                    std::span<const ClassGroup> groups);

/// IoU = TP / (TP + FP + FN); classes with zero support are excluded from
/// mIoU and mAcc. Throws ValidationError when the matrix is empty or the
/// taxonomy size differs from the matrix.
[[nodiscard]] MetricsReport summarize(const ConfusionMatrix& cm, const Taxonomy& taxonomy);

}  // namespace g2p
