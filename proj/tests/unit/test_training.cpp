#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "cuneinet/class_weights.hpp"
#include "cuneinet/datagen.hpp"
#include "cuneinet/dataset.hpp"
#include "cuneinet/errors.hpp"
#include "cuneinet/metrics.hpp"
#include "cuneinet/ply.hpp"
#include "cuneinet/trainer.hpp"

using namespace cuneinet;
namespace fs = std::filesystem;

namespace {

NetworkConfig tiny_config(std::size_t n = 256) {
  NetworkConfig c;
  c.n_points = n;
  c.k = 8;
  c.pool = 16;
  c.c1 = 16;
  c.c2 = 16;
  c.embed = 32;
  c.fc_hidden = 16;
  c.groups = 4;
  return c;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("cuneinet_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<Sample> synthetic_samples(std::size_t per_class, std::size_t n, std::uint64_t seed) {
  datagen::SyntheticSpec spec;
  spec.per_class = per_class;
  spec.points = n;
  spec.seed = seed;
  std::vector<Sample> out;
  const auto cfg = tiny_config(256);
  for (std::size_t label = 0; label < 2; ++label)
    for (std::size_t i = 0; i < per_class; ++i) {
      auto g = datagen::generate_sample(spec, label, i);
      g.cloud.source_id = "s" + std::to_string(label) + "_" + std::to_string(i);
      out.push_back({prepare_input(g.cloud, cfg), label});
    }
  return out;
}

}  // namespace

TEST_SUITE("training") {

TEST_CASE("inverse sample weights") {
  const std::vector<std::size_t> period{37, 100, 100, 100};
  const auto w = inverse_sample_weights(period).weights;
  CHECK(std::abs(w[0] - 1.90) <= 0.005);
  for (int c = 1; c < 4; ++c) CHECK(std::abs(w[c] - 0.70) <= 0.005);
  double mean = 0;
  for (double x : w) mean += x / 4;
  CHECK(std::abs(mean - 1.0) < 1e-9);

  const std::vector<std::size_t> equal{5, 5, 5};
  for (double x : inverse_sample_weights(equal).weights) CHECK(x == 1.0);
  const std::vector<std::size_t> two{10, 30};
  const auto w2 = inverse_sample_weights(two).weights;
  CHECK(w2[0] == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(w2[1] == doctest::Approx(0.5).epsilon(1e-12));

  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::size_t> counts(2 + trial % 5);
    for (auto& c : counts) c = 1 + rng() % 300;
    const auto ws = inverse_sample_weights(counts).weights;
    double m = 0;
    for (double x : ws) m += x / ws.size();
    CHECK(std::abs(m - 1.0) < 1e-9);
    for (std::size_t a = 0; a < counts.size(); ++a)
      for (std::size_t b = 0; b < counts.size(); ++b)
        if (counts[a] < counts[b]) CHECK(ws[a] > ws[b]);
  }
  const std::vector<std::size_t> zero{3, 0};
  CHECK_THROWS_AS(inverse_sample_weights(zero), InputError);
}

TEST_CASE("learning rate schedule") {
  CHECK(lr_schedule(0, 200) == 1e-3);
  CHECK(lr_schedule(199, 200) == 1e-7);
  for (std::size_t e = 1; e < 200; ++e) CHECK(lr_schedule(e, 200) < lr_schedule(e - 1, 200));
  CHECK(lr_schedule(100, 201) == doctest::Approx(1e-5).epsilon(1e-12));
  CHECK_THROWS_AS(lr_schedule(200, 200), InputError);
  CHECK_THROWS_AS(lr_schedule(0, 1), InputError);
}

TEST_CASE("F1 from confusion matrices") {
  const auto seal = report_from_confusion({{10, 2}, {1, 22}});
  CHECK(std::abs(seal.per_class_f1[0] - 0.870) <= 0.001);
  CHECK(std::abs(seal.per_class_f1[1] - 0.936) <= 0.001);
  const auto left = report_from_confusion({{6, 1}, {1, 27}});
  CHECK(std::abs(left.per_class_f1[0] - 0.857) <= 0.001);
  CHECK(std::abs(left.per_class_f1[1] - 0.964) <= 0.001);
  CHECK(left.samples() == 35);
  CHECK(left.macro_f1 == doctest::Approx((left.per_class_f1[0] + left.per_class_f1[1]) / 2));

  CHECK(report_from_confusion({{4, 0, 0}, {0, 2, 0}, {0, 0, 9}}).macro_f1 == 1.0);
  const auto never = report_from_confusion({{3, 0}, {2, 0}});
  CHECK(never.per_class_f1[1] == 0.0);
  CHECK_THROWS_AS(report_from_confusion({{1, 2}}), DimensionError);
}

TEST_CASE("report text round trip") {
  const auto r = report_from_confusion({{10, 2, 0}, {1, 22, 3}, {0, 0, 7}}, {"a", "b b", "c"});
  const auto text = format_report(r);
  CHECK(text.find("macro_f1") != std::string::npos);
  const auto back = parse_report(text);
  CHECK(back.confusion == r.confusion);
  CHECK(back.class_names == r.class_names);
  CHECK(back.macro_f1 == doctest::Approx(r.macro_f1).epsilon(1e-6));
  CHECK(format_report(back) == text);
  CHECK_THROWS_AS(parse_report("macro_f1\t0.5\n"), ParseError);
}

TEST_CASE("manifest parsing") {
  const auto ds = parse_manifest(
      "clouds/a.ply\tseal\ttrain\nclouds/b.ply\tplain\ttest\n\nclouds/c.ply\tseal\ttest\n", "/data");
  CHECK(ds.class_names == std::vector<std::string>{"seal", "plain"});
  REQUIRE(ds.entries.size() == 3);
  CHECK(ds.entries[1].label == 1);
  CHECK(ds.entries[1].split == Split::Test);
  CHECK(ds.entries_in(Split::Test).size() == 2);
  CHECK(ds.class_counts(Split::Test) == std::vector<std::size_t>{1, 1});

  const auto fixed = parse_manifest("# classes\tplain\tseal\nx.ply\tseal\ttrain\n", ".");
  CHECK(fixed.class_names == std::vector<std::string>{"plain", "seal"});
  CHECK(fixed.entries[0].label == 1);
  CHECK(parse_manifest(format_manifest(ds), "/data").entries.size() == 3);
  CHECK(format_manifest(parse_manifest(format_manifest(ds), "/data")) == format_manifest(ds));

  CHECK_THROWS_AS(parse_manifest("a.ply\tseal\n", "."), ParseError);
  CHECK_THROWS_AS(parse_manifest("/abs/a.ply\tseal\ttrain\n", "."), ParseError);
  CHECK_THROWS_AS(parse_manifest("a.ply\tseal\tvalidate\n", "."), ParseError);
  CHECK_THROWS_AS(parse_manifest("# classes\tx\ty\na.ply\tz\ttrain\n", "."), ParseError);
  CHECK_THROWS_AS(parse_manifest("a.ply\tx\ttrain\na.ply\tx\ttest\n", ".").validate(), InputError);
}

TEST_CASE("load_split skips unreadable clouds up to 10 percent") {
  const auto dir = scratch("load_split");
  const auto samples = synthetic_samples(10, 300, 2);
  LabeledDataset ds;
  ds.root = dir;
  ds.class_names = {"neg", "pos"};
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto name = "c" + std::to_string(i) + ".ply";
    ply::write_ply_file(dir / name, samples[i].cloud, ply::Format::BinaryLittleEndian);
    ds.entries.push_back({name, samples[i].label, Split::Train});
  }
  const auto cfg = tiny_config(256);
  CHECK(load_split(ds, Split::Train, cfg).samples.size() == 20);
  ds.entries.push_back({"missing.ply", 0, Split::Train});
  const auto one_bad = load_split(ds, Split::Train, cfg);
  CHECK(one_bad.skipped == 1);
  CHECK(one_bad.samples.size() == 20);
  for (int i = 0; i < 3; ++i) ds.entries.push_back({"gone" + std::to_string(i) + ".ply", 1, Split::Train});
  CHECK_THROWS_AS(load_split(ds, Split::Train, cfg), TrainingError);
  fs::remove_all(dir);
}

TEST_CASE("training is deterministic and writes its artifacts") {
  const auto samples = synthetic_samples(4, 300, 3);
  const auto cfg = tiny_config(256);
  TrainOptions opt;
  opt.epochs = 3;
  opt.seed = 5;
  opt.out_dir = scratch("train_a");
  const auto a = train(samples, {"neg", "pos"}, cfg, opt);
  opt.out_dir = scratch("train_b");
  opt.neighbor_cache_bytes = 0;  // the cache must not change results
  const auto b = train(samples, {"neg", "pos"}, cfg, opt);
  CHECK(format_loss_log(a.log) == format_loss_log(b.log));
  REQUIRE(a.log.size() == 3);
  CHECK(a.log[0].lr == 1e-3);
  CHECK(a.log[2].lr == 1e-7);
  for (auto dir : {fs::temp_directory_path() / "cuneinet_train_a", opt.out_dir}) {
    CHECK(fs::exists(dir / "model.ckpt"));
    CHECK(fs::exists(dir / "last.ckpt"));
    std::ifstream in(dir / "loss_log.tsv");
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) ++lines;
    CHECK(lines == 3);
  }
  const auto best = load_checkpoint(opt.out_dir / "model.ckpt");
  CHECK(evaluate(best.params, samples, cfg, {"neg", "pos"}).confusion ==
        evaluate(b.best_params, samples, cfg, {"neg", "pos"}).confusion);

  opt.seed = 6;
  opt.out_dir.clear();
  CHECK(format_loss_log(train(samples, {"neg", "pos"}, cfg, opt).log) != format_loss_log(a.log));

  const std::vector<Sample> one_class(samples.begin(), samples.begin() + 4);
  CHECK_THROWS_AS(train(one_class, {"neg", "pos"}, cfg, opt), InputError);
  CHECK_THROWS_AS(train(samples, {"neg", "pos", "other"}, cfg, opt), ConfigError);
  fs::remove_all(fs::temp_directory_path() / "cuneinet_train_a");
  fs::remove_all(fs::temp_directory_path() / "cuneinet_train_b");
}

TEST_CASE("single sample overfits") {
  // one sample, batch size one, first 10 epochs of the default 200-epoch schedule;
  // the seed is held fixed so every step sees the same graph and dropout mask
  const auto sample = synthetic_samples(1, 300, 4)[1];
  const auto cfg = tiny_config(256);
  auto params = init_params<float>(cfg, 7);
  auto adam = make_adam_state(params.tensors());
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t epoch = 0; epoch < 10; ++epoch) {
    const double loss = loss_and_grads(params, sample.cloud, sample.label, 1.0, cfg, 11).loss;
    CHECK(loss < prev);
    prev = loss;
    adam_step(params.tensors(), adam, lr_schedule(epoch, 200));
  }
}

TEST_CASE("training makes progress on the synthetic set") {
  const auto samples = synthetic_samples(10, 300, 12);
  TrainOptions opt;
  opt.epochs = 15;
  opt.seed = 1;
  const auto r = train(samples, {"neg", "pos"}, tiny_config(256), opt);
  CHECK(r.log.back().mean_loss < r.log.front().mean_loss);
  CHECK(r.best_epoch > 0);
}

TEST_CASE("evaluation is pure") {
  const auto samples = synthetic_samples(3, 300, 8);
  const auto cfg = tiny_config(256);
  const auto p = init_params<float>(cfg, 9);
  const auto a = evaluate(p, samples, cfg, {"neg", "pos"});
  const auto b = evaluate(p, samples, cfg, {"neg", "pos"});
  CHECK(format_report(a) == format_report(b));
  CHECK(a.samples() == 6);
  CHECK_THROWS_AS(evaluate(p, std::vector<Sample>{}, cfg, {"neg", "pos"}), InputError);
}

TEST_CASE("every ablation configuration trains") {
  const auto samples = synthetic_samples(3, 300, 10);
  TrainOptions opt;
  opt.epochs = 2;
  for (int off = -1; off < 5; ++off) {
    auto cfg = tiny_config(256);
    if (off == 0) cfg.min_distance_rule = false;
    if (off == 1) cfg.sparse_edge = false;
    if (off == 2) cfg.max_pool = false;
    if (off == 3) cfg.avg_pool = false;
    if (off == 4) cfg.group_norm = false;
    const auto r = train(samples, {"neg", "pos"}, cfg, opt);
    CHECK(r.log.size() == 2);
    CHECK(std::isfinite(r.log.back().mean_loss));
  }
}

}  // TEST_SUITE
