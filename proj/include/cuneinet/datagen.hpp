#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cuneinet/dataset.hpp"
#include "cuneinet/point_cloud.hpp"

namespace cuneinet::datagen {

enum class Task { LeftImprint, SealImprint, PeriodProxy };

std::string_view task_name(Task t);
/// Accepts left_imprint, seal_imprint, period_proxy; ConfigError otherwise.
Task parse_task(std::string_view name);

struct SyntheticSpec {
  Task task = Task::LeftImprint;
  std::size_t per_class = 50;
  std::size_t points = 1024;
  double noise_sigma = 0.02;  // mm
  double test_fraction = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Class names in label order.
std::vector<std::string> class_names(Task task);

/// Samples per class; period_proxy is imbalanced as 0.37 : 1 : 1 : 1.
std::vector<std::size_t> class_counts(const SyntheticSpec& spec);

struct Box3 {
  Vec3f lo{}, hi{};
  bool contains(const Vec3f& p) const;
};

struct GeneratedSample {
  PointCloud cloud;  // millimetres
  std::size_t label = 0;
  std::array<float, 3> half_extent{};  // tablet half sizes before rounding
  std::optional<Box3> imprint;         // positive samples of the imprint tasks
};

/// One tablet. Pure function of (spec, label, index).
GeneratedSample generate_sample(const SyntheticSpec& spec, std::size_t label, std::size_t index);

struct ImprintRegion {
  std::string path;  // manifest-relative cloud path
  Box3 box;
};

struct GeneratedDataset {
  LabeledDataset dataset;
  std::vector<ImprintRegion> regions;
};

/// Writes clouds/<class>/<class>_NNNN.ply, manifest.tsv and, for the imprint
/// tasks, regions.tsv under out_dir. Byte-identical for equal specs.
GeneratedDataset generate(const SyntheticSpec& spec, const std::filesystem::path& out_dir);

std::string format_regions(const std::vector<ImprintRegion>& regions);
std::vector<ImprintRegion> parse_regions(std::string_view text);
std::vector<ImprintRegion> read_regions(const std::filesystem::path& path);

/// Per-class test assignment: round(test_fraction * n_c) test entries per
/// class, at least one when the class has two or more and test_fraction > 0,
/// never the whole class. Returns one Split per label.
std::vector<Split> stratified_split(const std::vector<std::size_t>& labels, double test_fraction,
                                    std::uint64_t seed);

/// True iff some line, after leading whitespace, starts with `tag` followed by
/// end of line, whitespace or punctuation. Text that is not valid UTF-8 or
/// contains NUL bytes yields false and a warning. `tag` must start with '@'.
bool scan_tags(std::string_view text, std::string_view tag);

/// Pairs <stem>.ply clouds with <stem>.atf or <stem>.txt transliterations,
/// drops unmatched clouds, labels by scan_tags and splits stratified. Paths
/// in the result are relative to ply_dir.
LabeledDataset build_manifest(const std::filesystem::path& ply_dir,
                              const std::filesystem::path& transliteration_dir,
                              std::string_view tag, double test_fraction, std::uint64_t seed);

}  // namespace cuneinet::datagen
