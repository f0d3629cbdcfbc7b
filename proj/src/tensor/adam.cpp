#include "cuneinet/adam.hpp"

#include <cmath>

#include "cuneinet/errors.hpp"

namespace cuneinet {

template <typename T>
AdamState make_adam_state(const ParameterSet<T>& params, AdamHyper hyper) {
  AdamState s;
  s.hyper = hyper;
  for (const auto& p : params) {
    s.first_moment.emplace_back(p.tensor.numel(), 0.0);
    s.second_moment.emplace_back(p.tensor.numel(), 0.0);
  }
  return s;
}

template <typename T>
void adam_step(ParameterSet<T>& params, AdamState& state, double lr) {
  if (state.first_moment.size() != params.size())
    throw DimensionError("ADAM state tracks " + std::to_string(state.first_moment.size()) +
                         " parameters, got " + std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& p = params[i];
    if (state.first_moment[i].size() != p.tensor.numel())
      throw DimensionError("ADAM state shape mismatch for parameter '" + p.name + "'");
    if (p.tensor.has_grad() && !all_finite(p.tensor.grad()))
      throw TrainingError("non-finite gradient in parameter '" + p.name + "'");
  }

  const auto& h = state.hyper;
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(h.beta1, t);
  const double c2 = 1.0 - std::pow(h.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    auto w = p.tensor.mutable_values();
    auto g = p.tensor.grad();
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double gj = g.empty() ? 0.0 : static_cast<double>(g[j]);
      m[j] = h.beta1 * m[j] + (1.0 - h.beta1) * gj;
      v[j] = h.beta2 * v[j] + (1.0 - h.beta2) * gj * gj;
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      w[j] = static_cast<T>(static_cast<double>(w[j]) - lr * mhat / (std::sqrt(vhat) + h.epsilon));
    }
  }
}

template AdamState make_adam_state<float>(const ParameterSet<float>&, AdamHyper);
template AdamState make_adam_state<double>(const ParameterSet<double>&, AdamHyper);
template void adam_step<float>(ParameterSet<float>&, AdamState&, double);
template void adam_step<double>(ParameterSet<double>&, AdamState&, double);

}  // namespace cuneinet
