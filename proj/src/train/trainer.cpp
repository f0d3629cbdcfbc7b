#include "cuneinet/trainer.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

#include <spdlog/spdlog.h>

#include "cuneinet/class_weights.hpp"
#include "cuneinet/errors.hpp"
#include "cuneinet/seeding.hpp"

namespace cuneinet {
namespace {

std::vector<double> weights_for(const std::vector<Sample>& samples, std::size_t n_classes) {
  std::vector<std::size_t> counts(n_classes, 0);
  for (const auto& s : samples) ++counts.at(s.label);
  std::vector<std::size_t> present;
  for (std::size_t c : counts)
    if (c) present.push_back(c);
  if (present.size() < 2) throw InputError("training split must contain at least two classes");
  // absent classes never contribute a loss term
  const auto w = inverse_sample_weights(present).weights;
  std::vector<double> out(n_classes, 0.0);
  for (std::size_t c = 0, j = 0; c < n_classes; ++c)
    if (counts[c]) out[c] = w[j++];
  return out;
}

}  // namespace

std::string format_loss_log(const std::vector<EpochLog>& log) {
  std::string out;
  char buf[96];
  for (const auto& e : log) {
    std::snprintf(buf, sizeof buf, "%zu\t%.9g\t%.9g\n", e.epoch, e.lr, e.mean_loss);
    out += buf;
  }
  return out;
}

TrainResult train(const std::vector<Sample>& samples, const std::vector<std::string>& class_names,
                  const NetworkConfig& config, const TrainOptions& options) {
  config.validate();
  if (options.epochs < 2) throw ConfigError("training needs at least 2 epochs");
  if (class_names.size() != config.n_classes)
    throw ConfigError("dataset has " + std::to_string(class_names.size()) +
                      " classes but the network is configured for " +
                      std::to_string(config.n_classes));
  const auto class_weight = weights_for(samples, config.n_classes);

  auto params = init_params<float>(config, derive_seed(options.seed, 0x696e6974));
  AdamState adam = make_adam_state(params.tensors());

  if (!options.out_dir.empty()) std::filesystem::create_directories(options.out_dir);

  std::vector<NeighborTable> tables;
  const std::size_t width = neighbor_table_width(config);
  if (samples.size() * config.n_points * width * sizeof(PointIndex) <= options.neighbor_cache_bytes) {
    tables.reserve(samples.size());
    for (const auto& s : samples) tables.push_back(build_neighbor_table(SpatialIndex(s.cloud.points), width));
  }

  TrainResult result;
  double best_loss = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    const double lr = lr_schedule(epoch, options.epochs, options.lr_start, options.lr_end);
    std::mt19937_64 shuffle_rng(derive_seed(options.seed, 0x73687566, epoch));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double loss_sum = 0.0;
    for (std::size_t step = 0; step < order.size(); ++step) {
      const Sample& s = samples[order[step]];
      const auto step_seed = derive_seed(options.seed, 0x73746570, epoch, step);
      const NeighborTable* table = tables.empty() ? nullptr : &tables[order[step]];
      const auto out = loss_and_grads(params, s.cloud, s.label, class_weight[s.label], config,
                                      step_seed, table);
      if (!std::isfinite(out.loss))
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch));
      loss_sum += out.loss;
      adam_step(params.tensors(), adam, lr);
    }
    const double mean_loss = loss_sum / static_cast<double>(std::max<std::size_t>(1, order.size()));
    result.log.push_back({epoch, lr, mean_loss});
    if (options.verbose) spdlog::info("epoch {:3d}  lr {:.3e}  loss {:.6f}", epoch, lr, mean_loss);

    if (mean_loss < best_loss) {
      best_loss = mean_loss;
      result.best_epoch = epoch;
      result.best_params = params.cast<float>();
    }
    if (!options.out_dir.empty()) {
      save_checkpoint(options.out_dir / "last.ckpt", {config, class_names, params.cast<float>()});
      if (result.best_epoch == epoch)
        save_checkpoint(options.out_dir / "model.ckpt", {config, class_names, result.best_params});
      std::ofstream(options.out_dir / "loss_log.tsv", std::ios::trunc) << format_loss_log(result.log);
    }
  }
  return result;
}

TrainResult train(const LabeledDataset& dataset, const NetworkConfig& config,
                  const TrainOptions& options) {
  auto loaded = load_split(dataset, Split::Train, config);
  auto result = train(loaded.samples, dataset.class_names, config, options);
  result.skipped = loaded.skipped;
  return result;
}

EvalReport evaluate(const ModelParams<float>& params, const std::vector<Sample>& samples,
                    const NetworkConfig& config, const std::vector<std::string>& class_names) {
  if (samples.empty()) throw InputError("cannot evaluate an empty test split");
  std::vector<std::vector<std::size_t>> confusion(config.n_classes,
                                                  std::vector<std::size_t>(config.n_classes, 0));
  for (const auto& s : samples) {
    const auto fwd = forward(params, s.cloud, config, Mode::Eval, eval_seed(s.cloud));
    const auto& p = fwd.trace.probabilities;
    const auto pred = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
    ++confusion.at(s.label).at(pred);
  }
  return report_from_confusion(std::move(confusion), class_names);
}

EvalReport evaluate(const ModelParams<float>& params, const LabeledDataset& dataset,
                    const NetworkConfig& config) {
  const auto loaded = load_split(dataset, Split::Test, config);
  return evaluate(params, loaded.samples, config, dataset.class_names);
}

}  // namespace cuneinet
