#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include <spdlog/spdlog.h>

#include "cuneinet/datagen.hpp"
#include "cuneinet/errors.hpp"

namespace cuneinet::datagen {
namespace {

bool valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    if (c == 0) return false;
    std::size_t extra;
    std::uint32_t cp;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      extra = 1;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      extra = 2;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      extra = 3;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + extra >= s.size()) return false;
    for (std::size_t k = 1; k <= extra; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    // reject overlong forms, surrogates and values past U+10FFFF
    static constexpr std::uint32_t kMin[4] = {0, 0x80, 0x800, 0x10000};
    if (cp < kMin[extra] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
    i += extra + 1;
  }
  return true;
}

bool is_boundary(char c) {
  const auto u = static_cast<unsigned char>(c);
  return std::isspace(u) || std::ispunct(u);
}

}  // namespace

bool scan_tags(std::string_view text, std::string_view tag) {
  if (tag.size() < 2 || tag[0] != '@')
    throw ConfigError("tag query must be '@' followed by a name, got '" + std::string(tag) + "'");
  if (!valid_utf8(text)) {
    spdlog::warn("transliteration text is not valid UTF-8; treating it as untagged");
    return false;
  }
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    const auto first = line.find_first_not_of(" \t\r\f\v");
    if (first != std::string_view::npos) {
      line.remove_prefix(first);
      if (line.starts_with(tag) && (line.size() == tag.size() || is_boundary(line[tag.size()])))
        return true;
    }
    pos = eol + 1;
  }
  return false;
}

LabeledDataset build_manifest(const std::filesystem::path& ply_dir,
                              const std::filesystem::path& transliteration_dir,
                              std::string_view tag, double test_fraction, std::uint64_t seed) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(ply_dir)) throw InputError("not a directory: " + ply_dir.string());
  if (!fs::is_directory(transliteration_dir))
    throw InputError("not a directory: " + transliteration_dir.string());
  if (tag.size() < 2 || tag[0] != '@')
    throw ConfigError("tag query must be '@' followed by a name, got '" + std::string(tag) + "'");
  const std::string name(tag.substr(1));

  std::map<std::string, fs::path> texts;  // stem -> file, .atf preferred over .txt
  for (const auto& e : fs::directory_iterator(transliteration_dir)) {
    if (!e.is_regular_file()) continue;
    const auto ext = e.path().extension().string();
    if (ext != ".atf" && ext != ".txt") continue;
    auto [it, fresh] = texts.emplace(e.path().stem().string(), e.path());
    if (!fresh && ext == ".atf") it->second = e.path();
  }
  std::vector<fs::path> clouds;
  for (const auto& e : fs::directory_iterator(ply_dir))
    if (e.is_regular_file() && e.path().extension() == ".ply") clouds.push_back(e.path());
  std::sort(clouds.begin(), clouds.end());

  LabeledDataset ds;
  ds.root = ply_dir;
  ds.class_names = {"no_" + name, name};
  std::vector<std::size_t> labels;
  std::size_t discarded = 0;
  for (const auto& cloud : clouds) {
    const auto it = texts.find(cloud.stem().string());
    if (it == texts.end()) {
      ++discarded;
      continue;
    }
    std::ifstream in(it->second, std::ios::binary);
    if (!in) throw InputError("cannot read " + it->second.string());
    std::stringstream ss;
    ss << in.rdbuf();
    const std::size_t label = scan_tags(ss.str(), tag) ? 1 : 0;
    ds.entries.push_back({cloud.filename().string(), label, Split::Train});
    labels.push_back(label);
  }
  if (ds.entries.empty())
    throw InputError("no cloud in " + ply_dir.string() + " has a transliteration in " +
                     transliteration_dir.string());
  if (discarded) spdlog::info("discarded {} clouds without a transliteration", discarded);
  const auto splits = stratified_split(labels, test_fraction, seed);
  for (std::size_t i = 0; i < splits.size(); ++i) ds.entries[i].split = splits[i];
  return ds;
}

}  // namespace cuneinet::datagen
