// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails. Optional arguments select criteria by number.

#define CUNEINET_ALLOC_COUNTER_IMPL
#include "alloc_counter.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cuneinet/class_weights.hpp"
#include "cuneinet/cli.hpp"
#include "cuneinet/datagen.hpp"
#include "cuneinet/metrics.hpp"
#include "cuneinet/neighbor_graph.hpp"
#include "cuneinet/network.hpp"
#include "cuneinet/ply.hpp"
#include "cuneinet/tensor.hpp"
#include "../unit/gradcheck.hpp"

using namespace cuneinet;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli_run(std::vector<std::string> args, std::string* out = nullptr) {
  std::ostringstream o, e;
  const int code = cli::run(args, o, e);
  if (out) *out = o.str();
  if (code != 0) std::fprintf(stderr, "command failed (%d): %s\n", code, e.str().c_str());
  return code;
}

fs::path work_root() {
  const auto dir = fs::temp_directory_path() / "cuneinet_acceptance";
  fs::create_directories(dir);
  return dir;
}

// ---- gradient integrity ------------------------------------------------------

Outcome gradient_integrity() {
  using testutil::check_gradients;
  using testutil::random_coeffs;
  using testutil::random_tensor;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> dim(2, 6);
  double worst_op = 0;
  std::string worst_name;
  std::size_t probes = 0;

  auto record = [&](const std::string& name, const testutil::GradCheck& r) {
    probes += r.checked;
    if (r.worst >= worst_op) {
      worst_op = r.worst;
      worst_name = name + " (" + r.where + ")";
    }
  };
  auto wsum = [](const Tensor<double>& t, const std::vector<double>& c) {
    return ops::weighted_sum(t, std::span<const double>(c));
  };
  auto away_from_zero = [](Tensor<double>& t) {
    for (auto& v : t.mutable_values())
      if (std::abs(v) < 0.05) v = v < 0 ? -0.3 : 0.3;
  };

  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t m = dim(rng), k = dim(rng), p = dim(rng);
    auto a = random_tensor({m, k}, rng), b = random_tensor({k, p}, rng);
    auto cmp = random_coeffs(m * p, rng);
    record("matmul", check_gradients([&] { return wsum(ops::matmul(a, b), cmp); }, {&a, &b}));

    auto x = random_tensor({m, k}, rng), y = random_tensor({m, k}, rng), row = random_tensor({k}, rng);
    auto cxy = random_coeffs(m * k, rng);
    record("add/sub/add_row",
           check_gradients([&] { return wsum(ops::add_row(ops::sub(ops::add(x, y), y), row), cxy); },
                           {&x, &y, &row}));

    auto z = random_tensor({m, k}, rng);
    away_from_zero(z);
    record("leaky_relu", check_gradients([&] { return wsum(ops::leaky_relu(z, 0.2), cxy); }, {&z}));

    const std::size_t groups = 2, ch = 2 * dim(rng);
    auto g = random_tensor({m, ch}, rng, -2, 3), gamma = random_tensor({ch}, rng, 0.5, 1.5),
         beta = random_tensor({ch}, rng);
    auto cg = random_coeffs(m * ch, rng);
    record("group_norm",
           check_gradients([&] { return wsum(ops::group_norm(g, groups, gamma, beta, 1e-8), cg); },
                           {&g, &gamma, &beta}));

    auto r3 = random_tensor({m, k, p}, rng);
    auto cr = random_coeffs(m * p, rng);
    record("reduce_max",
           check_gradients([&] { return wsum(ops::reduce_max_with_argmax(r3, 1).values, cr); }, {&r3}));
    record("reduce_mean", check_gradients([&] { return wsum(ops::reduce_mean(r3, 1), cr); }, {&r3}));

    auto q = random_tensor({p, k}, rng);
    auto cc = random_coeffs((m + p) * k, rng);
    record("concat/slice/reshape", check_gradients(
                                       [&] {
                                         auto cat = ops::concat(x, q, 0);
                                         auto back = ops::slice(ops::reshape(cat, {(m + p) * k}), 0, 0,
                                                                (m + p) * k);
                                         return wsum(back, cc);
                                       },
                                       {&x, &q}));

    const std::size_t n = m + 3, kk = 3;
    std::vector<PointIndex> nb(n * kk);
    for (auto& v : nb) v = static_cast<PointIndex>(rng() % n);
    auto s = random_tensor({n, ch}, rng), t = random_tensor({n, ch}, rng);
    auto cn = random_coeffs(n * kk * ch, rng), ce = random_coeffs(n * ch, rng),
         cf = random_coeffs(n * kk * 2 * ch, rng);
    record("neighbor_gather_add",
           check_gradients([&] { return wsum(ops::neighbor_gather_add(s, t, nb, kk), cn); }, {&s, &t}));
    record("gather_edge_features",
           check_gradients([&] { return wsum(ops::gather_edge_features(s, nb, kk), cf); }, {&s}));
    record("edge_max",
           check_gradients(
               [&] { return wsum(ops::edge_max(s, t, nb, kk, &gamma, &beta, groups, 1e-8, 0.2), ce); },
               {&s, &t, &gamma, &beta}));
    record("edge_max (no norm)",
           check_gradients(
               [&] { return wsum(ops::edge_max<double>(s, t, nb, kk, nullptr, nullptr, groups, 1e-8, 0.2), ce); },
               {&s, &t}));

    record("dropout", check_gradients([&] { return wsum(ops::dropout(x, 0.5, 77), cxy); }, {&x}));
    auto logits = random_tensor({1, p}, rng, -2, 2);
    record("weighted_cross_entropy",
           check_gradients([&] { return ops::weighted_cross_entropy(logits, trial % p, 1.3); }, {&logits}));
  }

  // end-to-end network, double precision, graphs and dropout frozen by a fixed seed
  NetworkConfig c;
  c.n_points = 64;
  c.k = 4;
  c.pool = 8;
  auto params = init_params<double>(c, 5);
  PointCloud pc;
  std::uniform_real_distribution<float> u(-1, 1);
  for (int i = 0; i < 64; ++i) pc.points.push_back({u(rng), u(rng), 0.4f * u(rng)});
  pc = normalize(pc);
  loss_and_grads(params, pc, 1, 1.0, c, 99);
  std::vector<std::vector<double>> analytic;
  for (auto& np : params.tensors())
    analytic.emplace_back(np.tensor.grad().begin(), np.tensor.grad().end());
  double worst_e2e = 0;
  std::string worst_e2e_at;
  std::size_t e2e_probes = 0;
  for (std::size_t q = 0; q < params.tensors().size(); ++q) {
    auto v = params.tensors()[q].tensor.mutable_values();
    const std::size_t n_probe = std::min<std::size_t>(v.size(), 16);
    for (std::size_t s = 0; s < n_probe; ++s) {
      const std::size_t i = v.size() <= 16 ? s : rng() % v.size();
      const double orig = v[i];
      v[i] = orig + 1e-5;
      const double up = loss_and_grads(params, pc, 1, 1.0, c, 99).loss;
      v[i] = orig - 1e-5;
      const double down = loss_and_grads(params, pc, 1, 1.0, c, 99).loss;
      v[i] = orig;
      const double err = testutil::relative_error(analytic[q][i], (up - down) / 2e-5);
      ++e2e_probes;
      if (err > worst_e2e) {
        worst_e2e = err;
        worst_e2e_at = params.tensors()[q].name + "[" + std::to_string(i) + "]";
      }
    }
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = worst_op < 1e-4 && worst_e2e < 1e-3 && secs < 120;
  o.detail = fmt("ops worst rel err %.2e over %zu probes [%s]; end-to-end worst %.2e over %zu probes [%s]; %.1fs",
                 worst_op, probes, worst_name.c_str(), worst_e2e, e2e_probes,
                 worst_e2e_at.c_str(), secs);
  return o;
}

// ---- neighbour oracle ---------------------------------------------------------

std::vector<Vec3f> oracle_cloud(int which, std::mt19937_64& rng) {
  const std::size_t n = 100 + rng() % 1901;  // 100 .. 2000
  std::vector<Vec3f> pts;
  std::uniform_real_distribution<float> u(-1, 1);
  std::normal_distribution<float> g(0, 0.1f);
  switch (which % 4) {
    case 0:
      for (std::size_t i = 0; i < n; ++i) pts.push_back({u(rng), u(rng), u(rng)});
      break;
    case 1:  // clustered
      for (std::size_t i = 0; i < n; ++i) {
        const float cx = (i % 5) * 0.5f;
        pts.push_back({cx + g(rng), g(rng), g(rng)});
      }
      break;
    case 2: {  // lattice with many exact distance ties and some duplicates
      const int side = static_cast<int>(std::ceil(std::cbrt(double(n))));
      for (std::size_t i = 0; i < n; ++i)
        pts.push_back({float(i % side), float((i / side) % side), float(i / (side * side))});
      for (std::size_t i = 0; i < n / 20; ++i) pts[rng() % n] = pts[rng() % n];
      break;
    }
    default: {  // a synthetic tablet surface
      datagen::SyntheticSpec spec;
      spec.points = n;
      spec.seed = rng();
      pts = normalize(datagen::generate_sample(spec, which % 2, 0).cloud).points;
    }
  }
  return pts;
}

std::vector<Neighbor> brute_sorted(const std::vector<Vec3f>& pts, std::size_t i) {
  std::vector<Neighbor> all;
  all.reserve(pts.size());
  for (std::size_t j = 0; j < pts.size(); ++j)
    if (j != i) all.push_back({squared_distance(pts[i], pts[j]), static_cast<PointIndex>(j)});
  std::sort(all.begin(), all.end());
  return all;
}

Outcome neighbor_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(77);
  const std::size_t k = 20, pool = 60;
  std::size_t pool_mismatch = 0, qual_mismatch = 0, outside_pool = 0, outside_qual = 0,
              rule_violations = 0, knn_mismatch = 0, edges = 0, points = 0;
  for (int c = 0; c < 100; ++c) {
    const auto pts = oracle_cloud(c, rng);
    const SpatialIndex index(pts);
    const auto g1 = sparse_edge_neighbors(index, k, pool, rng());
    const auto g2 = min_distance_neighbors(index, g1.mean_dist, k, pool, rng());
    const auto exact = sparse_edge_neighbors(index, k, k, 0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      ++points;
      const auto all = brute_sorted(pts, i);
      std::vector<PointIndex> want_pool, want_qual;
      for (std::size_t t = 0; t < pool; ++t) want_pool.push_back(all[t].index);
      const double mu = g1.mean_dist[i];
      for (const auto& nb : all)
        if (want_qual.size() < pool && point_distance(pts[i], pts[nb.index]) >= mu)
          want_qual.push_back(nb.index);
      pool_mismatch += candidate_pool(index, static_cast<PointIndex>(i), pool) != want_pool;
      qual_mismatch += qualified_pool(index, static_cast<PointIndex>(i), mu, pool) != want_qual;
      for (std::size_t t = 0; t < k; ++t) knn_mismatch += exact.row(i)[t] != all[t].index;
      const std::set<PointIndex> ps(want_pool.begin(), want_pool.end());
      const std::set<PointIndex> qs(want_qual.begin(), want_qual.end());
      for (auto j : g1.row(i)) outside_pool += !ps.count(j);
      for (auto j : g2.row(i)) {
        ++edges;
        rule_violations += point_distance(pts[i], pts[j]) < mu;
        if (want_qual.size() >= k) outside_qual += !qs.count(j);
      }
    }
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = pool_mismatch + qual_mismatch + outside_pool + outside_qual + rule_violations +
               knn_mismatch ==
           0;
  o.pass = o.pass && secs < 60;
  o.detail = fmt(
      "100 clouds, %zu points: pool mismatches %zu, qualified-set mismatches %zu, exact-kNN "
      "mismatches %zu, layer-1 picks outside pool %zu, layer-2 picks outside qualified set %zu, "
      "layer-2 edges closer than mu %zu of %zu; %.1fs",
      points, pool_mismatch, qual_mismatch, knn_mismatch, outside_pool, outside_qual,
      rule_violations, edges, secs);
  return o;
}

// ---- formula checks ----------------------------------------------------------

Outcome class_weights() {
  const std::vector<std::size_t> counts{37, 100, 100, 100};
  const auto w = inverse_sample_weights(counts).weights;
  const std::vector<double> want{1.90, 0.70, 0.70, 0.70};
  bool ok = true;
  for (int c = 0; c < 4; ++c) ok = ok && std::abs(w[c] - want[c]) <= 0.005;
  return {ok, fmt("weights (%.4f, %.4f, %.4f, %.4f)", w[0], w[1], w[2], w[3])};
}

Outcome lr_endpoints() {
  bool decreasing = true;
  for (std::size_t e = 1; e < 200; ++e) decreasing = decreasing && lr_schedule(e, 200) < lr_schedule(e - 1, 200);
  const double first = lr_schedule(0, 200), last = lr_schedule(199, 200);
  return {first == 1e-3 && last == 1e-7 && decreasing,
          fmt("epoch 0: %.17g, epoch 199: %.17g, strictly decreasing: %s", first, last,
              decreasing ? "yes" : "no")};
}

Outcome f1_oracle() {
  const auto a = report_from_confusion({{10, 2}, {1, 22}});
  const auto b = report_from_confusion({{6, 1}, {1, 27}});
  const bool ok = std::abs(a.per_class_f1[0] - 0.870) <= 0.001 &&
                  std::abs(a.per_class_f1[1] - 0.936) <= 0.001 &&
                  std::abs(b.per_class_f1[0] - 0.857) <= 0.001 &&
                  std::abs(b.per_class_f1[1] - 0.964) <= 0.001;
  return {ok, fmt("[[10,2],[1,22]] -> (%.4f, %.4f); [[6,1],[1,27]] -> (%.4f, %.4f)",
                  a.per_class_f1[0], a.per_class_f1[1], b.per_class_f1[0], b.per_class_f1[1])};
}

// ---- synthetic end-to-end and attention -------------------------------------

struct SyntheticRuns {
  std::vector<double> full, no_max;
  fs::path first_data, first_model;
  double seconds = 0;
  bool failed = false;
};

const SyntheticRuns& synthetic_runs() {
  static SyntheticRuns runs = [] {
    SyntheticRuns r;
    const auto t0 = Clock::now();
    const auto root = work_root() / "synthetic";
    fs::remove_all(root);
    for (int seed = 1; seed <= 3; ++seed) {
      const auto data = root / ("data" + std::to_string(seed));
      const auto s = std::to_string(seed);
      if (cli_run({"gen-data", "--task", "left_imprint", "--per-class", "50", "--points", "1024",
                   "--seed", s, "--out", data.string()}) != 0) {
        r.failed = true;
        return r;
      }
      for (bool max_pool : {true, false}) {
        const auto out = root / ((max_pool ? "full" : "nomax") + s);
        std::vector<std::string> args{"train", "--manifest", (data / "manifest.tsv").string(),
                                      "--out", out.string(), "--n-points", "1024", "--epochs",
                                      "50", "--seed", s, "--quiet"};
        if (!max_pool) args.push_back("--no-max-pool");
        const auto tr0 = Clock::now();
        if (cli_run(args) != 0) {
          r.failed = true;
          return r;
        }
        const double f1 = parse_report(slurp(out / "eval_report.txt")).macro_f1;
        std::fprintf(stderr, "  seed %d %-7s macro F1 %.3f (%.0fs)\n", seed,
                     max_pool ? "full" : "no-max", f1, seconds_since(tr0));
        (max_pool ? r.full : r.no_max).push_back(f1);
        if (seed == 1 && max_pool) {
          r.first_data = data;
          r.first_model = out / "model.ckpt";
        }
      }
    }
    r.seconds = seconds_since(t0);
    return r;
  }();
  return runs;
}

double mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / v.size();
}

Outcome synthetic_end_to_end() {
  const auto& r = synthetic_runs();
  if (r.failed) return {false, "a gen-data or train command failed"};
  const double full = mean(r.full), no_max = mean(r.no_max);
  Outcome o;
  o.pass = full >= 0.90 && full - no_max >= 0.02 && r.seconds < 1800;
  o.detail = fmt(
      "macro F1 full (%.3f, %.3f, %.3f) mean %.3f, no-max-pool (%.3f, %.3f, %.3f) mean %.3f, "
      "gap %+.3f; needs mean full >= 0.90 and gap >= 0.02; %.0fs",
      r.full[0], r.full[1], r.full[2], full, r.no_max[0], r.no_max[1], r.no_max[2], no_max,
      full - no_max, r.seconds);
  return o;
}

Outcome attention_localization() {
  const auto& r = synthetic_runs();
  if (r.failed) return {false, "training for the attention check failed"};
  const auto t0 = Clock::now();
  const auto ds = read_manifest(r.first_data / "manifest.tsv");
  const auto regions = datagen::read_regions(r.first_data / "regions.tsv");
  std::map<std::string, datagen::Box3> box_of;
  for (const auto& reg : regions) box_of[reg.path] = reg.box;
  const DatasetEntry* positive = nullptr;
  for (const auto& e : ds.entries)
    if (e.split == Split::Test && e.label == 1) {
      positive = &e;
      break;
    }
  if (!positive) return {false, "no positive test sample"};

  const auto out = work_root() / "attention.ply";
  const auto scores = work_root() / "attention_scores.tsv";
  if (cli_run({"attend", "--checkpoint", r.first_model.string(), "--cloud",
               (r.first_data / positive->path).string(), "--out", out.string(), "--class", "1",
               "--dump-scores", scores.string()}) != 0)
    return {false, "attend command failed"};
  const auto colored = ply::read_ply_file(out);
  const auto& box = box_of.at(positive->path);
  std::size_t green = 0, inside = 0;
  for (std::size_t i = 0; i < colored.size(); ++i) {
    if (colored.colors[i] != attention::color_rgb(attention::Color::Green)) continue;
    ++green;
    inside += box.contains(colored.points[i]);
  }
  std::size_t nonzero = 0;
  std::istringstream lines(slurp(scores));
  for (std::string line; std::getline(lines, line);) {
    std::istringstream f(line);
    std::size_t idx;
    double score;
    f >> idx >> score;
    nonzero += score != 0.0;
  }
  const std::size_t embed = load_checkpoint(r.first_model).config.embed;
  const double share = green ? double(inside) / green : 0.0;
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = green > 0 && share >= 0.5 && nonzero <= embed && secs < 60;
  o.detail = fmt("%s: %zu green points, %zu inside the imprint box (%.0f%%); %zu nonzero scores "
                 "(embed %zu); %.1fs",
                 positive->path.c_str(), green, inside, 100 * share, nonzero, embed, secs);
  return o;
}

// ---- memory ------------------------------------------------------------------

struct GraphMemory {
  std::size_t peak_aux = 0;
  std::size_t output = 0;
};

GraphMemory graph_memory(std::size_t n, std::size_t k, std::size_t pool) {
  std::mt19937_64 rng(n);
  std::uniform_real_distribution<float> u(-1, 1);
  std::vector<Vec3f> pts(n);
  for (auto& p : pts) p = {u(rng), u(rng), u(rng)};
  const std::size_t base = alloc_counter::reset_peak();
  GraphMemory m;
  {
    const SpatialIndex index(pts);
    const auto g1 = sparse_edge_neighbors(index, k, pool, 1);
    const auto g2 = min_distance_neighbors(index, g1.mean_dist, k, pool, 2);
    m.output = 2 * (g1.neighbors.size() * sizeof(PointIndex) + g1.mean_dist.size() * sizeof(double));
  }
  m.peak_aux = alloc_counter::peak.load() - base;
  return m;
}

Outcome memory_property() {
  const auto t0 = Clock::now();
  const std::size_t k = 20, pool = 60;
  const auto small = graph_memory(8192, k, pool);
  const auto big = graph_memory(32768, k, pool);
  const double per_slot = double(big.peak_aux) / (32768.0 * pool);
  const double growth = double(big.peak_aux) / double(small.peak_aux);
  const double dense = 32768.0 * 32768.0 * sizeof(float);
  Outcome o;
  // linear growth is 4x for 4x the points; an N x N structure would be 16x
  o.pass = per_slot <= 64.0 && growth < 6.0 && big.peak_aux < dense / 10;
  o.detail = fmt(
      "N=32768 pool=60: peak auxiliary %.1f MiB (%.1f bytes per N*pool slot, graphs themselves "
      "%.1f MiB); N=8192: %.1f MiB; growth x%.2f for 4x points; a dense float N x N matrix "
      "would be %.0f MiB; %.1fs",
      big.peak_aux / 1048576.0, per_slot, big.output / 1048576.0, small.peak_aux / 1048576.0,
      growth, dense / 1048576.0, seconds_since(t0));
  return o;
}

// ---- determinism -------------------------------------------------------------

Outcome determinism() {
  const auto t0 = Clock::now();
  const auto root = work_root() / "determinism";
  fs::remove_all(root);
  const std::vector<std::string> net = {"--n-points", "512", "--k", "10", "--pool", "30"};
  std::vector<std::string> artifacts[2];
  for (int rep = 0; rep < 2; ++rep) {
    const auto dir = root / ("run" + std::to_string(rep));
    const auto data = dir / "data";
    if (cli_run({"gen-data", "--task", "left_imprint", "--per-class", "10", "--points", "1024",
                 "--seed", "5", "--out", data.string()}) != 0)
      return {false, "gen-data failed"};
    std::vector<std::string> train{"train", "--manifest", (data / "manifest.tsv").string(),
                                   "--out", (dir / "model").string(), "--epochs", "4",
                                   "--seed", "9", "--quiet"};
    train.insert(train.end(), net.begin(), net.end());
    if (cli_run(train) != 0) return {false, "train failed"};
    if (cli_run({"eval", "--checkpoint", (dir / "model" / "model.ckpt").string(), "--manifest",
                 (data / "manifest.tsv").string(), "--report-path", (dir / "report.txt").string()}) != 0)
      return {false, "eval failed"};
    if (cli_run({"attend", "--checkpoint", (dir / "model" / "model.ckpt").string(), "--cloud",
                 (data / "clouds/inscribed_left/inscribed_left_0003.ply").string(), "--out",
                 (dir / "attention.ply").string()}) != 0)
      return {false, "attend failed"};
    artifacts[rep] = {slurp(dir / "model" / "loss_log.tsv"), slurp(dir / "report.txt"),
                      slurp(dir / "attention.ply"), slurp(data / "manifest.tsv")};
  }
  const char* names[] = {"loss log", "eval report", "attention PLY", "dataset manifest"};
  std::string diffs;
  for (int i = 0; i < 4; ++i)
    if (artifacts[0][i] != artifacts[1][i] || artifacts[0][i].empty()) diffs += std::string(" ") + names[i];
  Outcome o;
  o.pass = diffs.empty();
  o.detail = diffs.empty()
                 ? fmt("loss log (%zu B), eval report (%zu B), attention PLY (%zu B) and manifest "
                       "byte-identical across two runs; %.1fs",
                       artifacts[0][0].size(), artifacts[0][1].size(), artifacts[0][2].size(),
                       seconds_since(t0))
                 : "differing:" + diffs;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient integrity", gradient_integrity},
      {"neighbor oracle", neighbor_oracle},
      {"class weights", class_weights},
      {"lr schedule", lr_endpoints},
      {"F1 oracle", f1_oracle},
      {"synthetic end-to-end", synthetic_end_to_end},
      {"attention localization", attention_localization},
      {"graph memory", memory_property},
      {"determinism", determinism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(number)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", number, criteria[i].first.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failures ? 1 : 0;
}
