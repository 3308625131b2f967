#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "g2p/types.hpp"

namespace g2p {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

inline constexpr double kNormEpsilon = 1e-12;
inline constexpr double kDiceSmoothing = 1.0;

/// Fixed affine map x -> W x + b from student to teacher feature space.
struct AffineMap {
  Matrix weight;  ///< D' x D
  Vector bias;    ///< D'

  [[nodiscard]] static AffineMap identity(Eigen::Index dim);
  [[nodiscard]] Eigen::Index in_dim() const { return weight.cols(); }
  [[nodiscard]] Eigen::Index out_dim() const { return weight.rows(); }
};

struct FeatureBatch {
  Matrix student;  ///< N x D
  Matrix teacher;  ///< N x D'
  AffineMap mapping;

  void validate() const;
};

struct SemBatch {
  Matrix logits;  ///< N x C
  std::vector<Label> labels;
  std::optional<Label> ignore_id;

  void validate() const;
};

struct BouBatch {
  Vector logits;
  Vector targets;  ///< each 0 or 1

  void validate() const;
};

/// Scalar loss with its gradient with respect to the batch input.
struct LossValue {
  double value = 0.0;
  Matrix gradient;
};

struct SemLossValue {
  double value = 0.0;
  double cross_entropy = 0.0;
  double lovasz = 0.0;
  Matrix gradient;  ///< wrt logits
};

struct BouLossValue {
  double value = 0.0;
  double bce = 0.0;
  double dice = 0.0;
  Vector gradient;  ///< wrt logits
};

/// Mean over rows of 1 - cos(phi(f_p), f_a); gradient wrt the student features.
/// Rows where either norm is below kNormEpsilon contribute 1 with zero gradient.
[[nodiscard]] LossValue distill_loss(const FeatureBatch& batch);

[[nodiscard]] Matrix softmax_rows(const Matrix& logits);

/// Mean softmax cross-entropy over non-ignored rows; gradient wrt logits.
[[nodiscard]] LossValue cross_entropy_loss(const SemBatch& batch);

/// Lovasz-softmax averaged over classes present among non-ignored labels,
/// evaluated on softmax probabilities; gradient wrt logits.
[[nodiscard]] LossValue lovasz_softmax_loss(const SemBatch& batch);

/// Gradient of the Lovasz extension of the Jaccard loss for a descending-error
/// ordering of foreground indicators.
[[nodiscard]] std::vector<double> lovasz_grad(std::span<const std::uint8_t> sorted_foreground);

/// cross_entropy + lovasz_softmax.
[[nodiscard]] SemLossValue sem_loss(const SemBatch& batch);

/// Mean binary cross-entropy on sigmoid(logits); gradient wrt logits.
[[nodiscard]] LossValue bce_loss(const BouBatch& batch);
/// 1 - (2 sum(p t) + s) / (sum p + sum t + s) on probabilities.
[[nodiscard]] double dice_loss(std::span<const double> probabilities, std::span<const double> targets,
                               double smoothing = kDiceSmoothing);
/// Dice on sigmoid(logits); gradient wrt logits.
[[nodiscard]] LossValue dice_loss(const BouBatch& batch);

/// bce + dice.
[[nodiscard]] BouLossValue bou_loss(const BouBatch& batch);

struct LossWeights {
  double lambda_b = 0.9;
  double lambda_d = 0.4;
};

/// sem + lambda_b * bou + lambda_d * distill.
[[nodiscard]] double total_loss(double sem, double bou, double distill, const LossWeights& weights = {});

struct LossReport {
  double sem = 0.0;
  double bou = 0.0;
  double distill = 0.0;
  double total = 0.0;
  LossWeights weights;
};

[[nodiscard]] LossReport evaluate_losses(const SemBatch& sem, const BouBatch& bou, const FeatureBatch& distill,
                                         const LossWeights& weights = {});

}  // namespace g2p
