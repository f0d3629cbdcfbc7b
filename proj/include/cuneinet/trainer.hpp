#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "cuneinet/dataset.hpp"
#include "cuneinet/metrics.hpp"
#include "cuneinet/network.hpp"

namespace cuneinet {

struct TrainOptions {
  std::size_t epochs = 200;
  std::uint64_t seed = 0;
  double lr_start = 1e-3;
  double lr_end = 1e-7;
  // When set, receives loss_log.tsv, last.ckpt (every epoch) and model.ckpt (best so far).
  std::filesystem::path out_dir;
  bool verbose = false;
  // Neighbour tables of the training clouds are kept in memory when they fit
  // in this budget; they only save time, results are unchanged.
  std::size_t neighbor_cache_bytes = std::size_t(1) << 30;
};

struct EpochLog {
  std::size_t epoch = 0;
  double lr = 0.0;
  double mean_loss = 0.0;
};

struct TrainResult {
  ModelParams<float> best_params;  // lowest mean training loss
  std::size_t best_epoch = 0;
  std::vector<EpochLog> log;
  std::size_t skipped = 0;
};

/// Batch size one ADAM training with inverse-sample-count loss weights.
TrainResult train(const std::vector<Sample>& samples, const std::vector<std::string>& class_names,
                  const NetworkConfig& config, const TrainOptions& options);

TrainResult train(const LabeledDataset& dataset, const NetworkConfig& config,
                  const TrainOptions& options);

std::string format_loss_log(const std::vector<EpochLog>& log);

/// Eval-mode forward per sample with its per-cloud seed, argmax prediction.
EvalReport evaluate(const ModelParams<float>& params, const std::vector<Sample>& samples,
                    const NetworkConfig& config, const std::vector<std::string>& class_names);

EvalReport evaluate(const ModelParams<float>& params, const LabeledDataset& dataset,
                    const NetworkConfig& config);

}  // namespace cuneinet
