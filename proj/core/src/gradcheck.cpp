#include "g2p/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "g2p/errors.hpp"

namespace g2p {

GradCheckResult check_gradient(const std::function<double(const Matrix&)>& f, const Matrix& x,
                               const Matrix& analytic, double step) {
  if (analytic.rows() != x.rows() || analytic.cols() != x.cols()) {
    throw PreconditionError("check_gradient: analytic gradient shape differs from input");
  }
  GradCheckResult out;
  Matrix probe = x;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double orig = probe(i, j);
      probe(i, j) = orig + step;
      const double up = f(probe);
      probe(i, j) = orig - step;
      const double down = f(probe);
      probe(i, j) = orig;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic(i, j);
      const double denom = std::max({std::abs(a), std::abs(numeric), kRelativeErrorFloor});
      const double rel = std::abs(a - numeric) / denom;
      if (rel > out.max_relative_error || out.worst_row < 0) {
        out.max_relative_error = rel;
        out.worst_row = i;
        out.worst_col = j;
        out.analytic = a;
        out.numeric = numeric;
      }
    }
  }
  return out;
}

}  // namespace g2p
