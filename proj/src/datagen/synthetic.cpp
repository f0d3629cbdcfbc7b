#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "cuneinet/datagen.hpp"
#include "cuneinet/errors.hpp"
#include "cuneinet/parallel.hpp"
#include "cuneinet/ply.hpp"
#include "cuneinet/seeding.hpp"

namespace cuneinet::datagen {

std::string_view task_name(Task t) {
  switch (t) {
    case Task::LeftImprint: return "left_imprint";
    case Task::SealImprint: return "seal_imprint";
    case Task::PeriodProxy: return "period_proxy";
  }
  return "?";
}

Task parse_task(std::string_view name) {
  for (Task t : {Task::LeftImprint, Task::SealImprint, Task::PeriodProxy})
    if (task_name(t) == name) return t;
  throw ConfigError("unknown task '" + std::string(name) +
                    "' (expected left_imprint, seal_imprint or period_proxy)");
}

void SyntheticSpec::validate() const {
  if (per_class == 0) throw ConfigError("per_class must be at least 1");
  if (points < 16) throw ConfigError("a synthetic cloud needs at least 16 points");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma))
    throw ConfigError("noise_sigma must be a finite non-negative value");
  if (!(test_fraction >= 0.0 && test_fraction < 1.0))
    throw ConfigError("test_fraction must lie in [0, 1)");
}

std::vector<std::string> class_names(Task task) {
  switch (task) {
    case Task::LeftImprint: return {"plain_left", "inscribed_left"};
    case Task::SealImprint: return {"no_seal", "seal"};
    case Task::PeriodProxy: return {"period_a", "period_b", "period_c", "period_d"};
  }
  return {};
}

std::vector<std::size_t> class_counts(const SyntheticSpec& spec) {
  if (spec.task != Task::PeriodProxy) return {spec.per_class, spec.per_class};
  const auto small = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(0.37 * static_cast<double>(spec.per_class))));
  return {small, spec.per_class, spec.per_class, spec.per_class};
}

bool Box3::contains(const Vec3f& p) const {
  for (int a = 0; a < 3; ++a)
    if (p[a] < lo[a] || p[a] > hi[a]) return false;
  return true;
}

namespace {

constexpr double kCornerRadius = 3.0;

// Faces of the tablet box. Local (u, v) are the two remaining axes in
// ascending order, so the left face uses (y, z) and the front face (x, y).
enum Face { kRight, kLeft, kTop, kBottom, kFront, kBack };

int face_axis(int f) { return f / 2; }
double face_sign(int f) { return f % 2 == 0 ? 1.0 : -1.0; }
std::array<int, 2> face_local_axes(int f) {
  switch (face_axis(f)) {
    case 0: return {1, 2};
    case 1: return {0, 2};
    default: return {0, 1};
  }
}

// Wedge impression: V-shaped cross-section, deepest at the head, narrowing
// and shallowing towards the tail along its axis.
struct Wedge {
  double u = 0, v = 0;        // head position
  double du = 1, dv = 0;      // unit axis
  double length = 0, width = 0, depth = 0;

  double depth_at(double pu, double pv) const {
    const double ru = pu - u, rv = pv - v;
    const double a = ru * du + rv * dv;
    if (a < 0.0 || a > length) return 0.0;
    const double b = std::abs(-ru * dv + rv * du);
    const double taper = 1.0 - a / length;
    const double half = 0.5 * width * taper;
    if (b >= half) return 0.0;
    return depth * (0.5 + 0.5 * taper) * (1.0 - b / half);
  }

  void extend(double& u0, double& v0, double& u1, double& v1) const {
    const double hw = 0.5 * width;
    for (double s : {-hw, hw}) {
      const double cu[2] = {u + s * -dv, u + length * du};
      const double cv[2] = {v + s * du, v + length * dv};
      for (int t = 0; t < 2; ++t) {
        u0 = std::min(u0, cu[t]);
        u1 = std::max(u1, cu[t]);
        v0 = std::min(v0, cv[t]);
        v1 = std::max(v1, cv[t]);
      }
    }
  }
};

struct Seal {
  double u = 0, v = 0, radius = 0, depth = 0;

  double depth_at(double pu, double pv) const {
    const double r = std::hypot(pu - u, pv - v);
    if (r >= radius) return 0.0;
    return r <= radius - 1.0 ? depth : depth * (radius - r);
  }
};

struct Tablet {
  std::array<double, 3> half{};
  std::array<std::vector<Wedge>, 6> wedges;
  std::optional<Seal> seal;  // front face

  double depth_at(int face, double u, double v) const {
    double d = 0.0;
    for (const auto& w : wedges[face]) d = std::max(d, w.depth_at(u, v));
    if (seal && face == kFront) d = std::max(d, seal->depth_at(u, v));
    return d;
  }
};

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Lines of horizontal filler wedges over the flat part of a z face.
void add_writing(Tablet& t, int face, double presence, double length, Rng& rng) {
  const double hu = t.half[0] - kCornerRadius - 2.0;
  const double hv = t.half[1] - kCornerRadius - 3.0;
  const double depth_lo = 0.02 * 2.0 * t.half[2], depth_hi = 0.05 * 2.0 * t.half[2];
  for (double v = hv; v >= -hv; v -= uniform(rng, 7.0, 9.0)) {
    for (double u = -hu; u + length <= hu; u += length + uniform(rng, 1.0, 3.0)) {
      if (uniform(rng, 0.0, 1.0) >= presence) continue;
      const double angle = uniform(rng, -0.15, 0.15);
      Wedge w;
      w.u = u;
      w.v = v + uniform(rng, -0.8, 0.8);
      w.du = std::cos(angle);
      w.dv = std::sin(angle);
      w.length = length * uniform(rng, 0.85, 1.15);
      w.width = uniform(rng, 3.0, 4.5);
      w.depth = uniform(rng, depth_lo, depth_hi);
      t.wedges[face].push_back(w);
    }
  }
}

// Lines of wedges filling the left face, rotated ninety degrees against the
// front writing; returns the imprint's bounding box in millimetres.
Box3 add_left_text(Tablet& t, Rng& rng) {
  const double hu = t.half[1] - kCornerRadius - 2.0;  // y
  const double hv = t.half[2] - kCornerRadius - 1.5;  // z
  const double span = uniform(rng, 0.6, 1.0) * 2.0 * hu;
  const double start = uniform(rng, -hu, hu - span);
  const double depth_lo = 0.02 * 2.0 * t.half[2], depth_hi = 0.05 * 2.0 * t.half[2];
  double u0 = 1e9, v0 = 1e9, u1 = -1e9, v1 = -1e9, max_depth = 0.0;
  for (double row : {-0.5 * hv, 0.5 * hv}) {
    for (double u = start; u + 12.0 <= start + span; u += uniform(rng, 12.5, 14.0)) {
      if (uniform(rng, 0.0, 1.0) >= 0.9) continue;
      // axis along y; the front writing runs along x, which maps onto z
      // when the tablet is turned over its left edge
      const double angle = uniform(rng, -0.15, 0.15);
      Wedge w;
      w.u = u;
      w.v = row + uniform(rng, -0.5, 0.5);
      w.du = std::cos(angle);
      w.dv = std::sin(angle);
      w.length = uniform(rng, 11.0, 12.0);
      w.width = uniform(rng, 9.0, 10.5);
      w.depth = uniform(rng, depth_lo, depth_hi);
      w.extend(u0, v0, u1, v1);
      max_depth = std::max(max_depth, w.depth);
      t.wedges[kLeft].push_back(w);
    }
  }
  if (t.wedges[kLeft].empty()) return add_left_text(t, rng);
  const double x = -t.half[0];
  Box3 box;
  box.lo = {static_cast<float>(x - 1.0), static_cast<float>(u0 - 1.0), static_cast<float>(v0 - 1.0)};
  box.hi = {static_cast<float>(x + max_depth + 1.0), static_cast<float>(u1 + 1.0),
            static_cast<float>(v1 + 1.0)};
  return box;
}

Box3 add_seal(Tablet& t, Rng& rng) {
  Seal s;
  s.radius = uniform(rng, 8.0, 12.0);
  const double mu = t.half[0] - kCornerRadius - s.radius - 1.0;
  const double mv = t.half[1] - kCornerRadius - s.radius - 1.0;
  s.u = uniform(rng, -mu, mu);
  s.v = uniform(rng, -mv, mv);
  s.depth = uniform(rng, 0.02, 0.05) * 2.0 * t.half[2];
  t.seal = s;
  const double z = t.half[2];
  Box3 box;
  box.lo = {static_cast<float>(s.u - s.radius - 1.0), static_cast<float>(s.v - s.radius - 1.0),
            static_cast<float>(z - s.depth - 1.0)};
  box.hi = {static_cast<float>(s.u + s.radius + 1.0), static_cast<float>(s.v + s.radius + 1.0),
            static_cast<float>(z + 1.0)};
  return box;
}

}  // namespace

GeneratedSample generate_sample(const SyntheticSpec& spec, std::size_t label, std::size_t index) {
  spec.validate();
  const auto counts = class_counts(spec);
  if (label >= counts.size()) throw ConfigError("label out of range for task");
  Rng rng(derive_seed(spec.seed, label, index));

  Tablet t;
  t.half = {25.0 * uniform(rng, 0.95, 1.05), 35.0 * uniform(rng, 0.95, 1.05),
            15.0 * uniform(rng, 0.95, 1.05)};
  GeneratedSample out;
  out.label = label;
  if (spec.task == Task::PeriodProxy) {
    const double c = static_cast<double>(label);
    add_writing(t, kFront, 0.35 + 0.2 * c, 5.0 + 1.5 * c, rng);
    add_writing(t, kBack, 0.35 + 0.2 * c, 5.0 + 1.5 * c, rng);
  } else {
    add_writing(t, kFront, 0.7, 6.0, rng);
    add_writing(t, kBack, 0.7, 6.0, rng);
    if (label == 1)
      out.imprint = spec.task == Task::LeftImprint ? add_left_text(t, rng) : add_seal(t, rng);
  }

  const double area[6] = {
      4 * t.half[1] * t.half[2], 4 * t.half[1] * t.half[2], 4 * t.half[0] * t.half[2],
      4 * t.half[0] * t.half[2], 4 * t.half[0] * t.half[1], 4 * t.half[0] * t.half[1]};
  std::discrete_distribution<int> pick_face(std::begin(area), std::end(area));
  std::normal_distribution<double> noise(0.0, spec.noise_sigma);

  out.cloud.points.reserve(spec.points);
  for (std::size_t n = 0; n < spec.points; ++n) {
    const int f = pick_face(rng);
    const int axis = face_axis(f);
    const auto [ua, va] = face_local_axes(f);
    std::array<double, 3> p{};
    p[axis] = face_sign(f) * t.half[axis];
    p[ua] = uniform(rng, -t.half[ua], t.half[ua]);
    p[va] = uniform(rng, -t.half[va], t.half[va]);
    // push onto the rounded box: nearest point of the inner box plus radius
    std::array<double, 3> inner{}, d{};
    double len2 = 0.0;
    for (int a = 0; a < 3; ++a) {
      const double lim = t.half[a] - kCornerRadius;
      inner[a] = std::clamp(p[a], -lim, lim);
      d[a] = p[a] - inner[a];
      len2 += d[a] * d[a];
    }
    const double len = std::sqrt(len2);
    for (int a = 0; a < 3; ++a) p[a] = inner[a] + kCornerRadius * d[a] / len;
    const double lim_u = t.half[ua] - kCornerRadius, lim_v = t.half[va] - kCornerRadius;
    if (std::abs(p[ua]) <= lim_u && std::abs(p[va]) <= lim_v)
      p[axis] -= face_sign(f) * t.depth_at(f, p[ua], p[va]);
    Vec3f q;
    for (int a = 0; a < 3; ++a) {
      const double e = spec.noise_sigma > 0.0 ? noise(rng) : 0.0;
      q[a] = static_cast<float>(p[a] + e);
    }
    out.cloud.points.push_back(q);
  }
  for (int a = 0; a < 3; ++a) out.half_extent[a] = static_cast<float>(t.half[a]);
  return out;
}

std::vector<Split> stratified_split(const std::vector<std::size_t>& labels, double test_fraction,
                                    std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0))
    throw ConfigError("test_fraction must lie in [0, 1)");
  std::vector<Split> out(labels.size(), Split::Train);
  const std::size_t n_classes =
      labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  for (std::size_t c = 0; c < n_classes; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == c) members.push_back(i);
    if (members.size() < 2 || test_fraction == 0.0) continue;
    auto n_test = static_cast<std::size_t>(
        std::lround(test_fraction * static_cast<double>(members.size())));
    n_test = std::clamp<std::size_t>(n_test, 1, members.size() - 1);
    Rng rng(derive_seed(seed, 0x73706c74, c));
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t t = 0; t < n_test; ++t) out[members[t]] = Split::Test;
  }
  return out;
}

GeneratedDataset generate(const SyntheticSpec& spec, const std::filesystem::path& out_dir) {
  spec.validate();
  const auto names = class_names(spec.task);
  const auto counts = class_counts(spec);

  struct Job {
    std::size_t label, index;
    std::string path;
  };
  std::vector<Job> jobs;
  std::vector<std::size_t> labels;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    std::filesystem::create_directories(out_dir / "clouds" / names[c]);
    for (std::size_t i = 0; i < counts[c]; ++i) {
      char file[64];
      std::snprintf(file, sizeof file, "_%04zu.ply", i);
      jobs.push_back({c, i, "clouds/" + names[c] + "/" + names[c] + file});
      labels.push_back(c);
    }
  }

  std::vector<std::optional<Box3>> boxes(jobs.size());
  parallel_for(
      jobs.size(),
      [&](std::size_t begin, std::size_t end) {
        for (std::size_t j = begin; j < end; ++j) {
          auto s = generate_sample(spec, jobs[j].label, jobs[j].index);
          ply::write_ply_file(out_dir / jobs[j].path, s.cloud, ply::Format::BinaryLittleEndian);
          boxes[j] = s.imprint;
        }
      },
      1);

  GeneratedDataset out;
  out.dataset.root = out_dir;
  out.dataset.class_names = names;
  const auto splits = stratified_split(labels, spec.test_fraction, derive_seed(spec.seed, 0x74657374));
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    out.dataset.entries.push_back({jobs[j].path, jobs[j].label, splits[j]});
    if (boxes[j]) out.regions.push_back({jobs[j].path, *boxes[j]});
  }
  write_manifest(out_dir / "manifest.tsv", out.dataset);
  if (spec.task != Task::PeriodProxy) {
    std::ofstream r(out_dir / "regions.tsv", std::ios::trunc);
    if (!r) throw InputError("cannot write " + (out_dir / "regions.tsv").string());
    r << format_regions(out.regions);
  }
  return out;
}

std::string format_regions(const std::vector<ImprintRegion>& regions) {
  std::string out = "# path\txmin\tymin\tzmin\txmax\tymax\tzmax\n";
  char buf[160];
  for (const auto& r : regions) {
    std::snprintf(buf, sizeof buf, "\t%.9g\t%.9g\t%.9g\t%.9g\t%.9g\t%.9g\n", r.box.lo[0],
                  r.box.lo[1], r.box.lo[2], r.box.hi[0], r.box.hi[1], r.box.hi[2]);
    out += r.path + buf;
  }
  return out;
}

std::vector<ImprintRegion> parse_regions(std::string_view text) {
  std::vector<ImprintRegion> out;
  std::istringstream in{std::string(text)};
  std::size_t offset = 0;
  for (std::string line; std::getline(in, line);) {
    const std::size_t at = offset;
    offset += line.size() + 1;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream cells(line);
    ImprintRegion r;
    std::getline(cells, r.path, '\t');
    for (float* v : {&r.box.lo[0], &r.box.lo[1], &r.box.lo[2], &r.box.hi[0], &r.box.hi[1],
                     &r.box.hi[2]})
      if (!(cells >> *v)) throw ParseError("regions line needs a path and six numbers", at);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<ImprintRegion> read_regions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_regions(ss.str());
}

}  // namespace cuneinet::datagen
