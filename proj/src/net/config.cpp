#include "cuneinet/errors.hpp"
#include "cuneinet/keyvalue.hpp"
#include "cuneinet/network.hpp"

namespace cuneinet {
using kv::format_double;
using kv::parse_bool;
using kv::parse_double;
using kv::parse_size;

void NetworkConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (n_classes < 2) fail("n_classes must be at least 2");
  if (k == 0) fail("k must be positive");
  if (k > pool) fail("k (" + std::to_string(k) + ") must not exceed pool (" + std::to_string(pool) + ")");
  if (pool >= n_points)
    fail("pool (" + std::to_string(pool) + ") must be smaller than n_points (" +
         std::to_string(n_points) + ")");
  if (groups == 0 || c1 % groups || c2 % groups || embed % groups)
    fail("c1, c2 and embed must be divisible by groups=" + std::to_string(groups));
  if (c1 == 0 || c2 == 0 || embed == 0 || fc_hidden == 0) fail("layer widths must be positive");
  if (!max_pool && !avg_pool) fail("at least one of max_pool / avg_pool must stay enabled");
  if (!(leaky_slope > 0.0 && leaky_slope < 1.0)) fail("leaky_slope must lie in (0, 1)");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must lie in [0, 1)");
  if (!(norm_eps > 0.0)) fail("norm_eps must be positive");
}

std::vector<std::pair<std::string, std::string>> NetworkConfig::to_key_values() const {
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  return {
      {"n_points", std::to_string(n_points)},
      {"k", std::to_string(k)},
      {"pool", std::to_string(pool)},
      {"c1", std::to_string(c1)},
      {"c2", std::to_string(c2)},
      {"embed", std::to_string(embed)},
      {"fc_hidden", std::to_string(fc_hidden)},
      {"n_classes", std::to_string(n_classes)},
      {"groups", std::to_string(groups)},
      {"leaky_slope", format_double(leaky_slope)},
      {"dropout", format_double(dropout)},
      {"norm_eps", format_double(norm_eps)},
      {"normalize_input", b(normalize_input)},
      {"min_distance_rule", b(min_distance_rule)},
      {"sparse_edge", b(sparse_edge)},
      {"max_pool", b(max_pool)},
      {"avg_pool", b(avg_pool)},
      {"group_norm", b(group_norm)},
  };
}

bool NetworkConfig::set(std::string_view key, std::string_view value) {
  if (key == "n_points") n_points = parse_size(key, value);
  else if (key == "k") k = parse_size(key, value);
  else if (key == "pool") pool = parse_size(key, value);
  else if (key == "c1") c1 = parse_size(key, value);
  else if (key == "c2") c2 = parse_size(key, value);
  else if (key == "embed") embed = parse_size(key, value);
  else if (key == "fc_hidden") fc_hidden = parse_size(key, value);
  else if (key == "n_classes") n_classes = parse_size(key, value);
  else if (key == "groups") groups = parse_size(key, value);
  else if (key == "leaky_slope") leaky_slope = parse_double(key, value);
  else if (key == "dropout") dropout = parse_double(key, value);
  else if (key == "norm_eps") norm_eps = parse_double(key, value);
  else if (key == "normalize_input") normalize_input = parse_bool(key, value);
  else if (key == "min_distance_rule") min_distance_rule = parse_bool(key, value);
  else if (key == "sparse_edge") sparse_edge = parse_bool(key, value);
  else if (key == "max_pool") max_pool = parse_bool(key, value);
  else if (key == "avg_pool") avg_pool = parse_bool(key, value);
  else if (key == "group_norm") group_norm = parse_bool(key, value);
  else return false;
  return true;
}

}  // namespace cuneinet
