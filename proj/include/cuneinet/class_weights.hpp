#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cuneinet {

/// Inverse Number of Samples weighting: w_c = C * (1/n_c) / sum_j (1/n_j),
/// i.e. reciprocal class sizes normalized to mean 1.
struct ClassWeights {
  std::vector<double> weights;
};

ClassWeights inverse_sample_weights(std::span<const std::size_t> counts);

/// Geometric decay lr_start * (lr_end/lr_start)^(epoch/(total_epochs-1)),
/// exact at both endpoints.
double lr_schedule(std::size_t epoch, std::size_t total_epochs, double lr_start = 1e-3,
                   double lr_end = 1e-7);

}  // namespace cuneinet
