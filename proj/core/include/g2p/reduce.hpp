#pragma once

#include <cstddef>
#include <span>

namespace g2p {

/// Pairwise (cascade) summation with a fixed split: the result depends only on
/// the values and their order, never on how work was scheduled.
[[nodiscard]] double pairwise_sum(std::span<const double> values);

}  // namespace g2p
