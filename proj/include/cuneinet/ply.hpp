#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cuneinet/point_cloud.hpp"

namespace cuneinet::ply {

enum class Format { Ascii, BinaryLittleEndian };

enum class ScalarType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

struct Property {
  std::string name;
  ScalarType type = ScalarType::Float32;
  bool is_list = false;
  ScalarType count_type = ScalarType::UInt8;  // list length type
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
};

struct PlyHeader {
  Format format = Format::Ascii;
  std::size_t vertex_count = 0;
  std::vector<Property> vertex_properties;
  bool has_color = false;
  std::vector<Element> elements;  // every element, in file order
  std::size_t data_offset = 0;    // first byte after end_header
};

/// Parses just the header. Throws ParseError with the byte offset of the
/// offending line.
PlyHeader parse_header(std::span<const std::uint8_t> bytes);

/// Vertex positions (and red/green/blue uchar colours when present) from an
/// ASCII or binary little-endian PLY. Non-vertex elements are skipped.
PointCloud parse_ply(std::span<const std::uint8_t> bytes);

/// x/y/z as float32, plus uchar red/green/blue when the cloud has colours.
std::vector<std::uint8_t> write_ply(const PointCloud& cloud, Format format);

PointCloud read_ply_file(const std::filesystem::path& path);
void write_ply_file(const std::filesystem::path& path, const PointCloud& cloud, Format format);

}  // namespace cuneinet::ply
