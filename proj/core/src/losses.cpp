#include "g2p/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "g2p/errors.hpp"
#include "g2p/reduce.hpp"

namespace g2p {

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

bool ignored(const SemBatch& b, std::size_t i) { return b.ignore_id && b.labels[i] == *b.ignore_id; }

}  // namespace

AffineMap AffineMap::identity(Eigen::Index dim) {
  return {Matrix::Identity(dim, dim), Vector::Zero(dim)};
}

void FeatureBatch::validate() const {
  if (student.rows() != teacher.rows()) {
    throw PreconditionError("student has " + std::to_string(student.rows()) + " rows, teacher has " +
                            std::to_string(teacher.rows()));
  }
  if (student.cols() < 1 || teacher.cols() < 1) throw PreconditionError("feature dimensions must be >= 1");
  if (mapping.in_dim() != student.cols() || mapping.out_dim() != teacher.cols() ||
      mapping.bias.size() != mapping.out_dim()) {
    throw PreconditionError("mapping shape does not match student/teacher feature dimensions");
  }
}

void SemBatch::validate() const {
  if (logits.cols() < 2) throw PreconditionError("semantic logits need at least 2 classes");
  if (static_cast<std::size_t>(logits.rows()) != labels.size()) {
    throw PreconditionError("semantic batch: logits rows and label count differ");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!ignored(*this, i) && labels[i] >= logits.cols()) {
      throw PreconditionError("label " + std::to_string(labels[i]) + " at row " + std::to_string(i) +
                              " is out of range for " + std::to_string(logits.cols()) + " classes");
    }
  }
}

void BouBatch::validate() const {
  if (logits.size() != targets.size()) throw PreconditionError("boundary batch: logits and targets differ in length");
  for (Eigen::Index i = 0; i < targets.size(); ++i) {
    if (targets[i] != 0.0 && targets[i] != 1.0) {
      throw PreconditionError("boundary target at row " + std::to_string(i) + " is not 0 or 1");
    }
  }
}

LossValue distill_loss(const FeatureBatch& batch) {
  batch.validate();
  const Eigen::Index n = batch.student.rows();
  LossValue out;
  out.gradient = Matrix::Zero(n, batch.student.cols());
  if (n == 0) return out;

  std::vector<double> terms(static_cast<std::size_t>(n));
  const double inv_n = 1.0 / static_cast<double>(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector u = batch.mapping.weight * batch.student.row(i).transpose() + batch.mapping.bias;
    const Vector a = batch.teacher.row(i).transpose();
    const double nu = u.norm();
    const double na = a.norm();
    if (nu <= kNormEpsilon || na <= kNormEpsilon) {
      terms[static_cast<std::size_t>(i)] = 1.0;
      continue;
    }
    const double cos = u.dot(a) / (nu * na);
    terms[static_cast<std::size_t>(i)] = 1.0 - cos;
    const Vector dcos_du = a / (nu * na) - cos * u / (nu * nu);
    out.gradient.row(i) = (-inv_n * (batch.mapping.weight.transpose() * dcos_du)).transpose();
  }
  out.value = pairwise_sum(terms) * inv_n;
  return out;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    const auto e = (logits.row(i).array() - m).exp();
    p.row(i) = e / e.sum();
  }
  return p;
}

LossValue cross_entropy_loss(const SemBatch& batch) {
  batch.validate();
  const Eigen::Index n = batch.logits.rows();
  LossValue out;
  out.gradient = Matrix::Zero(n, batch.logits.cols());
  std::size_t valid = 0;
  for (std::size_t i = 0; i < batch.labels.size(); ++i) valid += ignored(batch, i) ? 0 : 1;
  if (valid == 0) return out;

  const Matrix p = softmax_rows(batch.logits);
  const double inv = 1.0 / static_cast<double>(valid);
  std::vector<double> terms;
  terms.reserve(valid);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    if (ignored(batch, ui)) continue;
    const auto row = batch.logits.row(i);
    const double m = row.maxCoeff();
    const double lse = m + std::log((row.array() - m).exp().sum());
    terms.push_back(lse - row(batch.labels[ui]));
    out.gradient.row(i) = inv * p.row(i);
    out.gradient(i, batch.labels[ui]) -= inv;
  }
  out.value = pairwise_sum(terms) * inv;
  return out;
}

std::vector<double> lovasz_grad(std::span<const std::uint8_t> fg) {
  const std::size_t n = fg.size();
  std::vector<double> g(n);
  if (n == 0) return g;
  double gts = 0.0;
  for (auto f : fg) gts += f;
  double cum_fg = 0.0;
  double cum_bg = 0.0;
  double prev = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    cum_fg += fg[k];
    cum_bg += 1.0 - fg[k];
    const double jaccard = 1.0 - (gts - cum_fg) / (gts + cum_bg);
    g[k] = jaccard - prev;
    prev = jaccard;
  }
  return g;
}

LossValue lovasz_softmax_loss(const SemBatch& batch) {
  batch.validate();
  const Eigen::Index n = batch.logits.rows();
  const Eigen::Index classes = batch.logits.cols();
  LossValue out;
  out.gradient = Matrix::Zero(n, classes);

  std::vector<std::size_t> rows;
  std::set<Label> present;
  for (std::size_t i = 0; i < batch.labels.size(); ++i) {
    if (ignored(batch, i)) continue;
    rows.push_back(i);
    present.insert(batch.labels[i]);
  }
  if (present.empty()) return out;

  const Matrix p = softmax_rows(batch.logits);
  Matrix dprob = Matrix::Zero(n, classes);
  const double inv_classes = 1.0 / static_cast<double>(present.size());
  std::vector<double> class_losses;
  std::vector<double> errors(rows.size());
  std::vector<std::size_t> order(rows.size());
  std::vector<std::uint8_t> fg_sorted(rows.size());
  std::vector<double> weighted(rows.size());

  for (Label c : present) {
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const double fg = batch.labels[rows[r]] == c ? 1.0 : 0.0;
      errors[r] = std::abs(fg - p(static_cast<Eigen::Index>(rows[r]), c));
    }
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return errors[a] > errors[b]; });
    for (std::size_t k = 0; k < order.size(); ++k) fg_sorted[k] = batch.labels[rows[order[k]]] == c ? 1 : 0;
    const auto g = lovasz_grad(fg_sorted);
    for (std::size_t k = 0; k < order.size(); ++k) {
      const std::size_t r = order[k];
      weighted[k] = errors[r] * g[k];
      // d|fg - p| / dp is -1 for foreground rows and +1 otherwise.
      const double sign = fg_sorted[k] ? -1.0 : 1.0;
      dprob(static_cast<Eigen::Index>(rows[r]), c) += sign * g[k] * inv_classes;
    }
    class_losses.push_back(pairwise_sum(weighted));
  }
  out.value = pairwise_sum(class_losses) * inv_classes;

  // Back through the softmax: dz_k = p_k (dp_k - sum_c dp_c p_c).
  for (std::size_t r : rows) {
    const auto i = static_cast<Eigen::Index>(r);
    const double inner = dprob.row(i).dot(p.row(i));
    out.gradient.row(i) = p.row(i).array() * (dprob.row(i).array() - inner);
  }
  return out;
}

SemLossValue sem_loss(const SemBatch& batch) {
  const auto ce = cross_entropy_loss(batch);
  const auto lov = lovasz_softmax_loss(batch);
  SemLossValue out;
  out.cross_entropy = ce.value;
  out.lovasz = lov.value;
  out.value = ce.value + lov.value;
  out.gradient = ce.gradient + lov.gradient;
  return out;
}

LossValue bce_loss(const BouBatch& batch) {
  batch.validate();
  const Eigen::Index n = batch.logits.size();
  LossValue out;
  out.gradient = Matrix::Zero(n, 1);
  if (n == 0) return out;
  const double inv = 1.0 / static_cast<double>(n);
  std::vector<double> terms(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double b = batch.logits[i];
    const double t = batch.targets[i];
    terms[static_cast<std::size_t>(i)] = softplus(b) - t * b;
    out.gradient(i, 0) = inv * (sigmoid(b) - t);
  }
  out.value = pairwise_sum(terms) * inv;
  return out;
}

double dice_loss(std::span<const double> probabilities, std::span<const double> targets, double smoothing) {
  if (probabilities.size() != targets.size()) throw PreconditionError("dice: length mismatch");
  std::vector<double> pt(probabilities.size());
  for (std::size_t i = 0; i < pt.size(); ++i) pt[i] = probabilities[i] * targets[i];
  const double inter = pairwise_sum(pt);
  const double sum_p = pairwise_sum(probabilities);
  const double sum_t = pairwise_sum(targets);
  return 1.0 - (2.0 * inter + smoothing) / (sum_p + sum_t + smoothing);
}

LossValue dice_loss(const BouBatch& batch) {
  batch.validate();
  const Eigen::Index n = batch.logits.size();
  std::vector<double> p(static_cast<std::size_t>(n));
  std::vector<double> t(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    p[static_cast<std::size_t>(i)] = sigmoid(batch.logits[i]);
    t[static_cast<std::size_t>(i)] = batch.targets[i];
  }
  LossValue out;
  out.value = dice_loss(p, t);
  out.gradient = Matrix::Zero(n, 1);

  std::vector<double> pt(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) pt[i] = p[i] * t[i];
  const double num = 2.0 * pairwise_sum(pt) + kDiceSmoothing;
  const double den = pairwise_sum(p) + pairwise_sum(t) + kDiceSmoothing;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const double dd_dp = -(2.0 * t[ui] * den - num) / (den * den);
    out.gradient(i, 0) = dd_dp * p[ui] * (1.0 - p[ui]);
  }
  return out;
}

BouLossValue bou_loss(const BouBatch& batch) {
  const auto bce = bce_loss(batch);
  const auto dice = dice_loss(batch);
  BouLossValue out;
  out.bce = bce.value;
  out.dice = dice.value;
  out.value = bce.value + dice.value;
  out.gradient = (bce.gradient + dice.gradient).col(0);
  return out;
}

double total_loss(double sem, double bou, double distill, const LossWeights& w) {
  if (!(w.lambda_b >= 0.0) || !(w.lambda_d >= 0.0)) throw PreconditionError("loss weights must be >= 0");
  return sem + w.lambda_b * bou + w.lambda_d * distill;
}

LossReport evaluate_losses(const SemBatch& sem, const BouBatch& bou, const FeatureBatch& distill,
                           const LossWeights& weights) {
  LossReport r;
  r.weights = weights;
  r.sem = sem_loss(sem).value;
  r.bou = bou_loss(bou).value;
  r.distill = distill_loss(distill).value;
  r.total = total_loss(r.sem, r.bou, r.distill, weights);
  return r;
}

}  // namespace g2p
