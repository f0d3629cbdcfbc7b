#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cuneinet/tensor.hpp"

namespace cuneinet {

template <typename T>
struct NamedParam {
  std::string name;
  Tensor<T> tensor;
};

template <typename T>
using ParameterSet = std::vector<NamedParam<T>>;

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moment estimates, one pair of arrays per parameter in registration order.
struct AdamState {
  AdamHyper hyper;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::uint64_t step_count = 0;
};

template <typename T>
AdamState make_adam_state(const ParameterSet<T>& params, AdamHyper hyper = {});

/// One bias-corrected ADAM update using each parameter's accumulated grad
/// (a missing grad counts as zero). Throws TrainingError naming the first
/// parameter whose gradient is not finite; nothing is updated in that case.
template <typename T>
void adam_step(ParameterSet<T>& params, AdamState& state, double lr);

}  // namespace cuneinet
