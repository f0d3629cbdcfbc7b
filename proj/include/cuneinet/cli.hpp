#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "cuneinet/attention.hpp"
#include "cuneinet/datagen.hpp"
#include "cuneinet/keyvalue.hpp"
#include "cuneinet/network.hpp"

namespace cuneinet::cli {

/// Every tunable of a run as flat key=value text. Unknown keys are errors.
struct RunConfig {
  NetworkConfig network;
  std::size_t epochs = 200;
  std::uint64_t seed = 0;
  double lr_start = 1e-3;
  double lr_end = 1e-7;
  attention::AttentionOptions attention;
  datagen::SyntheticSpec data;

  /// Throws ConfigError for an unknown key or a malformed value.
  void set(std::string_view key, std::string_view value);
  void apply(const kv::Pairs& pairs);
  kv::Pairs to_key_values() const;

  static RunConfig load(const std::filesystem::path& path);
};

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

/// Runs the command line; messages go to `out` and `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cuneinet::cli
