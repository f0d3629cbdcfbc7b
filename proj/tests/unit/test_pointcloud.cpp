#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <set>
#include <string>

#include "cuneinet/errors.hpp"
#include "cuneinet/ply.hpp"
#include "cuneinet/point_cloud.hpp"

using namespace cuneinet;

namespace {

std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

PointCloud random_cloud(std::size_t n, std::mt19937_64& rng, bool colors = false) {
  std::uniform_real_distribution<float> d(-1, 1);
  std::uniform_int_distribution<int> c(0, 255);
  PointCloud pc;
  for (std::size_t i = 0; i < n; ++i) {
    pc.points.push_back({d(rng), d(rng), d(rng)});
    if (colors)
      pc.colors.push_back({static_cast<std::uint8_t>(c(rng)), static_cast<std::uint8_t>(c(rng)),
                           static_cast<std::uint8_t>(c(rng))});
  }
  return pc;
}

double max_radius(const PointCloud& pc) {
  double r = 0;
  for (auto& p : pc.points) r = std::max(r, std::hypot(double(p[0]), double(p[1]), double(p[2])));
  return r;
}

std::array<double, 3> centroid(const PointCloud& pc) {
  std::array<double, 3> c{};
  for (auto& p : pc.points)
    for (int a = 0; a < 3; ++a) c[a] += p[a];
  for (auto& v : c) v /= pc.size();
  return c;
}

template <typename F>
std::size_t parse_error_offset(F&& f) {
  try {
    f();
  } catch (const ParseError& e) {
    return e.offset();
  }
  FAIL("expected ParseError");
  return 0;
}

}  // namespace

TEST_SUITE("pointcloud") {

TEST_CASE("ascii read") {
  const auto text = bytes_of(
      "ply\nformat ascii 1.0\ncomment made by hand\nelement vertex 3\n"
      "property float x\nproperty float y\nproperty float z\n"
      "element face 1\nproperty list uchar int vertex_indices\nend_header\n"
      "0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n");
  const auto pc = ply::parse_ply(text);
  REQUIRE(pc.size() == 3);
  CHECK(pc.points[0] == Vec3f{0, 0, 0});
  CHECK(pc.points[1] == Vec3f{1, 0, 0});
  CHECK(pc.points[2] == Vec3f{0, 1, 0});
  CHECK_FALSE(pc.has_colors());
}

TEST_CASE("property order and float64 honored") {
  const auto text = bytes_of(
      "ply\nformat ascii 1.0\nelement vertex 2\nproperty uchar red\nproperty double z\n"
      "property uchar green\nproperty double x\nproperty uchar blue\nproperty double y\n"
      "property float nx\nend_header\n"
      "10 3.5 20 1.5 30 2.5 0\n1 -1 2 -2 3 -3 0\n");
  const auto pc = ply::parse_ply(text);
  REQUIRE(pc.size() == 2);
  CHECK(pc.points[0] == Vec3f{1.5f, 2.5f, 3.5f});
  CHECK(pc.points[1] == Vec3f{-2, -3, -1});
  REQUIRE(pc.has_colors());
  CHECK(pc.colors[0] == Rgb{10, 20, 30});
}

TEST_CASE("round trips") {
  std::mt19937_64 rng(5);
  for (bool colors : {false, true})
    for (auto fmt : {ply::Format::Ascii, ply::Format::BinaryLittleEndian}) {
      const auto pc = random_cloud(200, rng, colors);
      const auto back = ply::parse_ply(ply::write_ply(pc, fmt));
      CHECK(back.points == pc.points);  // %.9g ascii is exact for float32 too
      CHECK(back.colors == pc.colors);
    }
}

TEST_CASE("single point ascii output") {
  PointCloud pc;
  pc.points = {{1, 2, 3}};
  const auto out = ply::write_ply(pc, ply::Format::Ascii);
  const std::string s(out.begin(), out.end());
  CHECK(s.find("element vertex 1\n") != std::string::npos);
  const auto body = s.substr(s.find("end_header\n") + 11);
  CHECK(std::count(body.begin(), body.end(), '\n') == 1);
}

TEST_CASE("binary size arithmetic") {
  std::mt19937_64 rng(6);
  const auto pc = random_cloud(32768, rng, true);
  const auto out = ply::write_ply(pc, ply::Format::BinaryLittleEndian);
  const auto header = ply::parse_header(out);
  CHECK(header.vertex_count == 32768);
  CHECK(header.has_color);
  CHECK(out.size() == header.data_offset + 32768 * 15);
}

TEST_CASE("truncated binary payload reports the first missing byte") {
  std::mt19937_64 rng(7);
  auto out = ply::write_ply(random_cloud(10, rng), ply::Format::BinaryLittleEndian);
  out.resize(out.size() - 7);
  CHECK(parse_error_offset([&] { ply::parse_ply(out); }) == out.size());
}

TEST_CASE("malformed inputs") {
  CHECK(parse_error_offset([] { ply::parse_ply(bytes_of("plx\n")); }) == 0);
  const std::string big = "ply\nformat binary_big_endian 1.0\n";
  CHECK(parse_error_offset([&] {
          ply::parse_ply(bytes_of(big + "element vertex 1\nproperty float x\nend_header\n"));
        }) == 4);
  CHECK_THROWS_AS(ply::parse_ply(bytes_of("ply\nformat ascii 1.0\nelement vertex 1\n"
                                          "property float x\nproperty float y\nend_header\n1 2\n")),
                  ParseError);
  CHECK_THROWS_AS(ply::parse_ply(bytes_of("ply\nformat ascii 1.0\nelement vertex 1\n"
                                          "property float x\nproperty float y\nproperty float z\n")),
                  ParseError);
  CHECK_THROWS_AS(ply::parse_ply(bytes_of("ply\nformat ascii 1.0\nelement vertex 2\n"
                                          "property float x\nproperty float y\nproperty float z\n"
                                          "end_header\n1 2 3\n")),
                  ParseError);
}

TEST_CASE("file round trip keeps the stem as source id") {
  std::mt19937_64 rng(8);
  const auto dir = std::filesystem::temp_directory_path() / "cuneinet_ply_test";
  std::filesystem::create_directories(dir);
  const auto pc = random_cloud(50, rng, true);
  ply::write_ply_file(dir / "tablet_7.ply", pc, ply::Format::BinaryLittleEndian);
  const auto back = ply::read_ply_file(dir / "tablet_7.ply");
  CHECK(back.points == pc.points);
  CHECK(back.source_id == "tablet_7");
  CHECK_THROWS_AS(ply::read_ply_file(dir / "missing.ply"), InputError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("subsample") {
  std::mt19937_64 rng(9);
  const auto pc = random_cloud(1000, rng);

  const auto all = subsample(pc, 1000, 3);
  std::multiset<Vec3f> a(pc.points.begin(), pc.points.end()), b(all.points.begin(), all.points.end());
  CHECK(a == b);

  const auto s1 = subsample(pc, 100, 42), s2 = subsample(pc, 100, 42);
  CHECK(s1.points == s2.points);
  CHECK(subsample(pc, 100, 43).points != s1.points);
  std::set<Vec3f> distinct(s1.points.begin(), s1.points.end());
  CHECK(distinct.size() == 100);
  for (auto& p : s1.points) CHECK(a.count(p) == 1);

  try {
    subsample(pc, 1001, 1);
    FAIL("expected InputError");
  } catch (const InputError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("1000") != std::string::npos);
    CHECK(msg.find("1001") != std::string::npos);
  }
}

TEST_CASE("subsample octant statistics") {
  std::mt19937_64 rng(10);
  const auto pc = random_cloud(1000, rng);
  auto octant = [](const Vec3f& p) { return (p[0] > 0) | ((p[1] > 0) << 1) | ((p[2] > 0) << 2); };
  std::array<double, 8> population{};
  for (auto& p : pc.points) population[octant(p)] += 1;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::array<double, 8> got{};
    for (auto& p : subsample(pc, 100, seed).points) got[octant(p)] += 1;
    for (int o = 0; o < 8; ++o) {
      // hypergeometric variance is below the binomial one, so 4 binomial sigmas is conservative
      const double prob = population[o] / 1000.0;
      const double mean = 100 * prob, sd = std::sqrt(100 * prob * (1 - prob));
      CHECK(std::abs(got[o] - mean) <= 4 * sd);
    }
  }
}

TEST_CASE("normalize") {
  PointCloud cube;
  for (int i = 0; i < 8; ++i)
    cube.points.push_back({float(i & 1), float((i >> 1) & 1), float((i >> 2) & 1)});
  const auto n = normalize(cube);
  for (double c : centroid(n)) CHECK(std::abs(c) < 1e-6);
  CHECK(max_radius(n) == doctest::Approx(1.0).epsilon(1e-6));

  std::mt19937_64 rng(11);
  const auto pc = random_cloud(500, rng);
  const auto once = normalize(pc), twice = normalize(once);
  for (std::size_t i = 0; i < pc.size(); ++i)
    for (int a = 0; a < 3; ++a) CHECK(std::abs(once.points[i][a] - twice.points[i][a]) < 1e-6);
  for (double c : centroid(once)) CHECK(std::abs(c) < 1e-6);

  auto moved = pc;
  for (auto& p : moved.points)
    for (int a = 0; a < 3; ++a) p[a] = p[a] * 1000.0f + 37.0f * (a + 1);
  const auto m = normalize(moved);
  for (std::size_t i = 0; i < pc.size(); ++i)
    for (int a = 0; a < 3; ++a) CHECK(std::abs(once.points[i][a] - m.points[i][a]) < 1e-5);

  const auto sim = normalization_of(moved);
  for (std::size_t i = 0; i < 10; ++i) {
    const auto back = sim.invert(sim.apply(moved.points[i]));
    for (int a = 0; a < 3; ++a) CHECK(back[a] == doctest::Approx(moved.points[i][a]).epsilon(1e-6));
  }

  PointCloud same;
  same.points.assign(4, {1, 2, 3});
  CHECK_THROWS_AS(normalize(same), InputError);
  PointCloud bad;
  bad.points = {{0, 0, std::nanf("")}};
  CHECK_THROWS_AS(validate(bad), InputError);
  CHECK_THROWS_AS(validate(PointCloud{}), InputError);
}

}  // TEST_SUITE
