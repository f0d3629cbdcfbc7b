#include "cuneinet/ply.hpp"

#include <bit>
#include <cctype>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string_view>

#include "cuneinet/errors.hpp"

namespace cuneinet::ply {
namespace {

std::size_t scalar_size(ScalarType t) {
  switch (t) {
    case ScalarType::Int8:
    case ScalarType::UInt8: return 1;
    case ScalarType::Int16:
    case ScalarType::UInt16: return 2;
    case ScalarType::Int32:
    case ScalarType::UInt32:
    case ScalarType::Float32: return 4;
    case ScalarType::Float64: return 8;
  }
  return 0;
}

bool parse_scalar_type(std::string_view s, ScalarType& out) {
  static constexpr std::pair<std::string_view, ScalarType> kNames[] = {
      {"char", ScalarType::Int8},     {"int8", ScalarType::Int8},
      {"uchar", ScalarType::UInt8},   {"uint8", ScalarType::UInt8},
      {"short", ScalarType::Int16},   {"int16", ScalarType::Int16},
      {"ushort", ScalarType::UInt16}, {"uint16", ScalarType::UInt16},
      {"int", ScalarType::Int32},     {"int32", ScalarType::Int32},
      {"uint", ScalarType::UInt32},   {"uint32", ScalarType::UInt32},
      {"float", ScalarType::Float32}, {"float32", ScalarType::Float32},
      {"double", ScalarType::Float64}, {"float64", ScalarType::Float64},
  };
  for (const auto& [name, type] : kNames) {
    if (s == name) {
      out = type;
      return true;
    }
  }
  return false;
}

bool is_float_type(ScalarType t) { return t == ScalarType::Float32 || t == ScalarType::Float64; }

std::vector<std::string_view> split_words(std::string_view line) {
  std::vector<std::string_view> words;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) words.push_back(line.substr(i, j - i));
    i = j;
  }
  return words;
}

template <typename U>
U load_le(const std::uint8_t* p) {
  U v;
  std::memcpy(&v, p, sizeof(U));
  if constexpr (std::endian::native == std::endian::big) {
    auto* b = reinterpret_cast<std::uint8_t*>(&v);
    for (std::size_t i = 0; i < sizeof(U) / 2; ++i) std::swap(b[i], b[sizeof(U) - 1 - i]);
  }
  return v;
}

double load_binary(const std::uint8_t* p, ScalarType t) {
  switch (t) {
    case ScalarType::Int8: return static_cast<std::int8_t>(p[0]);
    case ScalarType::UInt8: return p[0];
    case ScalarType::Int16: return load_le<std::int16_t>(p);
    case ScalarType::UInt16: return load_le<std::uint16_t>(p);
    case ScalarType::Int32: return load_le<std::int32_t>(p);
    case ScalarType::UInt32: return load_le<std::uint32_t>(p);
    case ScalarType::Float32: return load_le<float>(p);
    case ScalarType::Float64: return load_le<double>(p);
  }
  return 0.0;
}

template <typename U>
void store_le(std::vector<std::uint8_t>& out, U v) {
  std::uint8_t b[sizeof(U)];
  std::memcpy(b, &v, sizeof(U));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(U) / 2; ++i) std::swap(b[i], b[sizeof(U) - 1 - i]);
  }
  out.insert(out.end(), b, b + sizeof(U));
}

struct VertexLayout {
  int x = -1, y = -1, z = -1, red = -1, green = -1, blue = -1;
};

VertexLayout locate(const std::vector<Property>& props) {
  VertexLayout l;
  for (std::size_t i = 0; i < props.size(); ++i) {
    const auto& p = props[i];
    if (p.is_list) continue;
    const int idx = static_cast<int>(i);
    if (p.name == "x") l.x = idx;
    else if (p.name == "y") l.y = idx;
    else if (p.name == "z") l.z = idx;
    else if (p.name == "red" && p.type == ScalarType::UInt8) l.red = idx;
    else if (p.name == "green" && p.type == ScalarType::UInt8) l.green = idx;
    else if (p.name == "blue" && p.type == ScalarType::UInt8) l.blue = idx;
  }
  return l;
}

// Whitespace-separated token stream over the ASCII payload.
class AsciiCursor {
 public:
  AsciiCursor(std::span<const std::uint8_t> bytes, std::size_t pos) : bytes_(bytes), pos_(pos) {}

  double next_number() {
    while (pos_ < bytes_.size() && std::isspace(bytes_[pos_])) ++pos_;
    if (pos_ >= bytes_.size()) throw ParseError("unexpected end of ASCII payload", pos_);
    const char* first = reinterpret_cast<const char*>(bytes_.data()) + pos_;
    const char* last = reinterpret_cast<const char*>(bytes_.data()) + bytes_.size();
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || (ptr != last && !std::isspace(static_cast<unsigned char>(*ptr))))
      throw ParseError("malformed number in ASCII payload", pos_);
    pos_ += static_cast<std::size_t>(ptr - first);
    return v;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_;
};

}  // namespace

PlyHeader parse_header(std::span<const std::uint8_t> bytes) {
  PlyHeader h;
  std::size_t pos = 0;
  auto next_line = [&](std::size_t& line_start) -> std::string_view {
    line_start = pos;
    std::size_t end = pos;
    while (end < bytes.size() && bytes[end] != '\n') ++end;
    if (end >= bytes.size()) throw ParseError("header is not terminated by end_header", pos);
    std::string_view line(reinterpret_cast<const char*>(bytes.data()) + pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = end + 1;
    return line;
  };

  std::size_t at = 0;
  if (next_line(at) != "ply") throw ParseError("missing 'ply' magic line", 0);

  bool have_format = false;
  Element* current = nullptr;
  while (true) {
    const std::string_view line = next_line(at);
    const auto w = split_words(line);
    if (w.empty()) continue;
    if (w[0] == "end_header") break;
    if (w[0] == "comment" || w[0] == "obj_info") continue;
    if (w[0] == "format") {
      if (w.size() != 3) throw ParseError("malformed format line", at);
      if (w[1] == "ascii") h.format = Format::Ascii;
      else if (w[1] == "binary_little_endian") h.format = Format::BinaryLittleEndian;
      else throw ParseError("unsupported PLY format '" + std::string(w[1]) + "'", at);
      have_format = true;
    } else if (w[0] == "element") {
      if (w.size() != 3) throw ParseError("malformed element line", at);
      std::size_t count = 0;
      auto [p, ec] = std::from_chars(w[2].data(), w[2].data() + w[2].size(), count);
      if (ec != std::errc() || p != w[2].data() + w[2].size())
        throw ParseError("bad element count '" + std::string(w[2]) + "'", at);
      h.elements.push_back({std::string(w[1]), count, {}});
      current = &h.elements.back();
    } else if (w[0] == "property") {
      if (!current) throw ParseError("property before any element", at);
      Property prop;
      if (w.size() == 5 && w[1] == "list") {
        prop.is_list = true;
        if (!parse_scalar_type(w[2], prop.count_type) || !parse_scalar_type(w[3], prop.type))
          throw ParseError("unknown list property type", at);
        prop.name = std::string(w[4]);
      } else if (w.size() == 3) {
        if (!parse_scalar_type(w[1], prop.type))
          throw ParseError("unknown property type '" + std::string(w[1]) + "'", at);
        prop.name = std::string(w[2]);
      } else {
        throw ParseError("malformed property line", at);
      }
      current->properties.push_back(std::move(prop));
    } else {
      throw ParseError("unexpected header keyword '" + std::string(w[0]) + "'", at);
    }
  }
  if (!have_format) throw ParseError("header has no format line", at);
  h.data_offset = pos;

  const Element* vertex = nullptr;
  for (const auto& e : h.elements)
    if (e.name == "vertex") vertex = &e;
  if (!vertex) throw ParseError("no vertex element in header", at);
  h.vertex_count = vertex->count;
  h.vertex_properties = vertex->properties;
  const auto l = locate(h.vertex_properties);
  if (l.x < 0 || l.y < 0 || l.z < 0) throw ParseError("vertex element lacks x, y or z", at);
  for (int idx : {l.x, l.y, l.z})
    if (!is_float_type(h.vertex_properties[idx].type))
      throw ParseError("vertex coordinate '" + h.vertex_properties[idx].name +
                           "' is not a floating-point property",
                       at);
  h.has_color = l.red >= 0 && l.green >= 0 && l.blue >= 0;
  return h;
}

PointCloud parse_ply(std::span<const std::uint8_t> bytes) {
  const PlyHeader h = parse_header(bytes);
  const auto l = locate(h.vertex_properties);
  PointCloud cloud;
  cloud.points.resize(h.vertex_count);
  if (h.has_color) cloud.colors.resize(h.vertex_count);

  std::vector<double> row;
  auto store_row = [&](std::size_t i) {
    cloud.points[i] = {static_cast<float>(row[l.x]), static_cast<float>(row[l.y]),
                       static_cast<float>(row[l.z])};
    if (h.has_color)
      cloud.colors[i] = {static_cast<std::uint8_t>(row[l.red]),
                         static_cast<std::uint8_t>(row[l.green]),
                         static_cast<std::uint8_t>(row[l.blue])};
  };

  if (h.format == Format::Ascii) {
    AsciiCursor cur(bytes, h.data_offset);
    for (const auto& e : h.elements) {
      const bool is_vertex = e.name == "vertex";
      for (std::size_t i = 0; i < e.count; ++i) {
        row.assign(e.properties.size(), 0.0);
        for (std::size_t p = 0; p < e.properties.size(); ++p) {
          if (e.properties[p].is_list) {
            const double n = cur.next_number();
            for (std::size_t q = 0; q < static_cast<std::size_t>(n); ++q) cur.next_number();
          } else {
            row[p] = cur.next_number();
          }
        }
        if (is_vertex) store_row(i);
      }
      if (is_vertex) break;  // later elements are not needed
    }
  } else {
    std::size_t pos = h.data_offset;
    auto need = [&](std::size_t n) {
      if (pos + n > bytes.size()) throw ParseError("truncated binary payload", bytes.size());
    };
    for (const auto& e : h.elements) {
      const bool is_vertex = e.name == "vertex";
      for (std::size_t i = 0; i < e.count; ++i) {
        row.assign(e.properties.size(), 0.0);
        for (std::size_t p = 0; p < e.properties.size(); ++p) {
          const auto& prop = e.properties[p];
          if (prop.is_list) {
            const std::size_t cs = scalar_size(prop.count_type);
            need(cs);
            const auto n = static_cast<std::size_t>(load_binary(bytes.data() + pos, prop.count_type));
            pos += cs;
            need(n * scalar_size(prop.type));
            pos += n * scalar_size(prop.type);
          } else {
            const std::size_t s = scalar_size(prop.type);
            need(s);
            row[p] = load_binary(bytes.data() + pos, prop.type);
            pos += s;
          }
        }
        if (is_vertex) store_row(i);
      }
      if (is_vertex) break;
    }
  }
  return cloud;
}

std::vector<std::uint8_t> write_ply(const PointCloud& cloud, Format format) {
  std::ostringstream head;
  head << "ply\n"
       << "format " << (format == Format::Ascii ? "ascii" : "binary_little_endian") << " 1.0\n"
       << "element vertex " << cloud.size() << "\n"
       << "property float x\nproperty float y\nproperty float z\n";
  if (cloud.has_colors()) head << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  head << "end_header\n";
  const std::string hs = head.str();
  std::vector<std::uint8_t> out(hs.begin(), hs.end());

  if (format == Format::BinaryLittleEndian) {
    out.reserve(out.size() + cloud.size() * (cloud.has_colors() ? 15 : 12));
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      for (float c : cloud.points[i]) store_le(out, c);
      if (cloud.has_colors()) {
        out.push_back(cloud.colors[i].r);
        out.push_back(cloud.colors[i].g);
        out.push_back(cloud.colors[i].b);
      }
    }
  } else {
    char buf[64];
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      std::string line;
      for (std::size_t a = 0; a < 3; ++a) {
        // shortest representation that reads back to the same float
        auto [end, ec] = std::to_chars(buf, buf + sizeof buf, cloud.points[i][a]);
        (void)ec;
        if (a) line += ' ';
        line.append(buf, end);
      }
      if (cloud.has_colors()) {
        const auto& c = cloud.colors[i];
        line += ' ' + std::to_string(c.r) + ' ' + std::to_string(c.g) + ' ' + std::to_string(c.b);
      }
      line += '\n';
      out.insert(out.end(), line.begin(), line.end());
    }
  }
  return out;
}

PointCloud read_ply_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  PointCloud cloud = parse_ply(bytes);
  cloud.source_id = path.stem().string();
  return cloud;
}

void write_ply_file(const std::filesystem::path& path, const PointCloud& cloud, Format format) {
  const auto bytes = write_ply(cloud, format);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("failed writing " + path.string());
}

}  // namespace cuneinet::ply
