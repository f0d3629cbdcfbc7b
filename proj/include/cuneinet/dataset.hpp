#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "cuneinet/network.hpp"
#include "cuneinet/point_cloud.hpp"

namespace cuneinet {

enum class Split { Train, Test };

std::string_view split_name(Split s);

struct DatasetEntry {
  std::string path;  // relative to the manifest's directory
  std::size_t label = 0;
  Split split = Split::Train;
};

/// Manifest lines are `<relative-ply-path>\t<class-name>\t<train|test>`. An
/// optional `# classes\t<name>\t<name>...` line fixes the class order;
/// otherwise classes are numbered by first appearance.
struct LabeledDataset {
  std::filesystem::path root;
  std::vector<std::string> class_names;
  std::vector<DatasetEntry> entries;

  /// Throws InputError on out-of-range labels or a path in both splits.
  void validate() const;
  std::vector<DatasetEntry> entries_in(Split s) const;
  std::vector<std::size_t> class_counts(Split s) const;
};

LabeledDataset parse_manifest(std::string_view text, const std::filesystem::path& root);
LabeledDataset read_manifest(const std::filesystem::path& path);
std::string format_manifest(const LabeledDataset& dataset);
void write_manifest(const std::filesystem::path& path, const LabeledDataset& dataset);

/// A cloud ready for the network (subsampled, normalized per config).
struct Sample {
  PointCloud cloud;
  std::size_t label = 0;
};

struct LoadedSplit {
  std::vector<Sample> samples;
  std::size_t skipped = 0;
};

/// Loads and prepares one split. Unreadable clouds are skipped with a
/// warning; more than 10% skipped is a TrainingError.
LoadedSplit load_split(const LabeledDataset& dataset, Split split, const NetworkConfig& config);

}  // namespace cuneinet
