#pragma once

#include <functional>

#include "g2p/losses.hpp"

namespace g2p {

inline constexpr double kFiniteDifferenceStep = 1e-5;
/// Denominator floor for the elementwise relative error, so components that
/// are analytically ~0 are judged on absolute error at this scale.
inline constexpr double kRelativeErrorFloor = 1e-6;

struct GradCheckResult {
  double max_relative_error = 0.0;
  Eigen::Index worst_row = -1;
  Eigen::Index worst_col = -1;
  double analytic = 0.0;
  double numeric = 0.0;
};

/// Compares `analytic` against central differences of f at x, elementwise:
/// |a - n| / max(|a|, |n|, kRelativeErrorFloor).
[[nodiscard]] GradCheckResult check_gradient(const std::function<double(const Matrix&)>& f, const Matrix& x,
                                             const Matrix& analytic, double step = kFiniteDifferenceStep);

}  // namespace g2p
