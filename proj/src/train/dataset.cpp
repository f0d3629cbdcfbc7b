#include "cuneinet/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "cuneinet/errors.hpp"
#include "cuneinet/ply.hpp"

namespace cuneinet {

std::string_view split_name(Split s) { return s == Split::Train ? "train" : "test"; }

void LabeledDataset::validate() const {
  std::set<std::string> train_paths, test_paths;
  for (const auto& e : entries) {
    if (e.label >= class_names.size())
      throw InputError("entry '" + e.path + "' has label " + std::to_string(e.label) + " but only " +
                       std::to_string(class_names.size()) + " classes exist");
    (e.split == Split::Train ? train_paths : test_paths).insert(e.path);
  }
  for (const auto& p : train_paths)
    if (test_paths.count(p)) throw InputError("'" + p + "' appears in both train and test splits");
}

std::vector<DatasetEntry> LabeledDataset::entries_in(Split s) const {
  std::vector<DatasetEntry> out;
  for (const auto& e : entries)
    if (e.split == s) out.push_back(e);
  return out;
}

std::vector<std::size_t> LabeledDataset::class_counts(Split s) const {
  std::vector<std::size_t> counts(class_names.size(), 0);
  for (const auto& e : entries)
    if (e.split == s) ++counts[e.label];
  return counts;
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  for (std::string cell; std::getline(in, cell, '\t');) out.push_back(cell);
  return out;
}

}  // namespace

LabeledDataset parse_manifest(std::string_view text, const std::filesystem::path& root) {
  LabeledDataset ds;
  ds.root = root;
  std::istringstream in{std::string(text)};
  std::size_t offset = 0;
  bool fixed_classes = false;
  for (std::string line; std::getline(in, line);) {
    const std::size_t at = offset;
    offset += line.size() + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto cells = split_tabs(line);
      if (!cells.empty() && cells[0] == "# classes") {
        ds.class_names.assign(cells.begin() + 1, cells.end());
        fixed_classes = true;
      }
      continue;
    }
    const auto cells = split_tabs(line);
    if (cells.size() != 3) throw ParseError("manifest line needs 3 tab-separated fields", at);
    DatasetEntry e;
    e.path = cells[0];
    if (std::filesystem::path(e.path).is_absolute())
      throw ParseError("manifest paths must be relative: '" + e.path + "'", at);
    auto it = std::find(ds.class_names.begin(), ds.class_names.end(), cells[1]);
    if (it == ds.class_names.end()) {
      if (fixed_classes) throw ParseError("unknown class '" + cells[1] + "'", at);
      ds.class_names.push_back(cells[1]);
      it = ds.class_names.end() - 1;
    }
    e.label = static_cast<std::size_t>(it - ds.class_names.begin());
    if (cells[2] == "train") e.split = Split::Train;
    else if (cells[2] == "test") e.split = Split::Test;
    else throw ParseError("split must be 'train' or 'test', got '" + cells[2] + "'", at);
    ds.entries.push_back(std::move(e));
  }
  ds.validate();
  return ds;
}

LabeledDataset read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open manifest " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str(), path.parent_path());
}

std::string format_manifest(const LabeledDataset& ds) {
  std::string out = "# classes";
  for (const auto& c : ds.class_names) out += "\t" + c;
  out += "\n";
  for (const auto& e : ds.entries)
    out += e.path + "\t" + ds.class_names.at(e.label) + "\t" + std::string(split_name(e.split)) + "\n";
  return out;
}

void write_manifest(const std::filesystem::path& path, const LabeledDataset& ds) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write manifest " + path.string());
  out << format_manifest(ds);
}

LoadedSplit load_split(const LabeledDataset& dataset, Split split, const NetworkConfig& config) {
  LoadedSplit out;
  const auto entries = dataset.entries_in(split);
  for (const auto& e : entries) {
    try {
      PointCloud raw = ply::read_ply_file(dataset.root / e.path);
      out.samples.push_back({prepare_input(raw, config), e.label});
    } catch (const Error& err) {
      spdlog::warn("skipping '{}': {}", e.path, err.what());
      ++out.skipped;
    }
  }
  if (out.skipped * 10 > entries.size())
    throw TrainingError(std::to_string(out.skipped) + " of " + std::to_string(entries.size()) + " " +
                        std::string(split_name(split)) + " clouds could not be read (limit 10%)");
  return out;
}

}  // namespace cuneinet
