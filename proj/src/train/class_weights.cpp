#include "cuneinet/class_weights.hpp"

#include <cmath>
#include <string>

#include "cuneinet/errors.hpp"

namespace cuneinet {

ClassWeights inverse_sample_weights(std::span<const std::size_t> counts) {
  if (counts.empty()) throw InputError("no class counts given");
  double denom = 0.0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == 0) throw InputError("class " + std::to_string(c) + " has no samples");
    denom += 1.0 / static_cast<double>(counts[c]);
  }
  ClassWeights w;
  const double n_classes = static_cast<double>(counts.size());
  for (std::size_t n : counts) w.weights.push_back(n_classes * (1.0 / static_cast<double>(n)) / denom);
  return w;
}

double lr_schedule(std::size_t epoch, std::size_t total_epochs, double lr_start, double lr_end) {
  if (total_epochs < 2 || epoch >= total_epochs)
    throw InputError("lr_schedule needs 0 <= epoch < total_epochs and total_epochs >= 2 (epoch " +
                     std::to_string(epoch) + " of " + std::to_string(total_epochs) + ")");
  if (epoch == 0) return lr_start;
  if (epoch + 1 == total_epochs) return lr_end;
  const double t = static_cast<double>(epoch) / static_cast<double>(total_epochs - 1);
  return std::exp(std::log(lr_start) + t * (std::log(lr_end) - std::log(lr_start)));
}

}  // namespace cuneinet
