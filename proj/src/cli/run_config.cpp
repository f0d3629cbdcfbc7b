#include <fstream>
#include <sstream>

#include "cuneinet/cli.hpp"
#include "cuneinet/errors.hpp"

namespace cuneinet::cli {

void RunConfig::set(std::string_view key, std::string_view value) {
  if (network.set(key, value)) return;
  if (key == "epochs") epochs = kv::parse_size(key, value);
  else if (key == "seed") seed = kv::parse_u64(key, value);
  else if (key == "lr_start") lr_start = kv::parse_double(key, value);
  else if (key == "lr_end") lr_end = kv::parse_double(key, value);
  else if (key == "attention_epsilon") attention.epsilon = kv::parse_double(key, value);
  else if (key == "attention_cutoff") attention.cutoff_fraction = kv::parse_double(key, value);
  else if (key == "attention_use_logit") attention.use_logit = kv::parse_bool(key, value);
  else if (key == "task") data.task = datagen::parse_task(value);
  else if (key == "per_class") data.per_class = kv::parse_size(key, value);
  else if (key == "points") data.points = kv::parse_size(key, value);
  else if (key == "noise_sigma") data.noise_sigma = kv::parse_double(key, value);
  else if (key == "test_fraction") data.test_fraction = kv::parse_double(key, value);
  else throw ConfigError("unknown configuration key '" + std::string(key) + "'");
}

void RunConfig::apply(const kv::Pairs& pairs) {
  for (const auto& [k, v] : pairs) set(k, v);
}

kv::Pairs RunConfig::to_key_values() const {
  kv::Pairs out = network.to_key_values();
  out.insert(out.end(), {
                            {"epochs", std::to_string(epochs)},
                            {"seed", std::to_string(seed)},
                            {"lr_start", kv::format_double(lr_start)},
                            {"lr_end", kv::format_double(lr_end)},
                            {"attention_epsilon", kv::format_double(attention.epsilon)},
                            {"attention_cutoff", kv::format_double(attention.cutoff_fraction)},
                            {"attention_use_logit", kv::format_bool(attention.use_logit)},
                            {"task", std::string(datagen::task_name(data.task))},
                            {"per_class", std::to_string(data.per_class)},
                            {"points", std::to_string(data.points)},
                            {"noise_sigma", kv::format_double(data.noise_sigma)},
                            {"test_fraction", kv::format_double(data.test_fraction)},
                        });
  return out;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  RunConfig cfg;
  try {
    cfg.apply(kv::parse(ss.str()));
  } catch (const ParseError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return cfg;
}

}  // namespace cuneinet::cli
