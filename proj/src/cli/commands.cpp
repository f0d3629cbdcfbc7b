#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "cuneinet/cli.hpp"
#include "cuneinet/errors.hpp"
#include "cuneinet/parallel.hpp"
#include "cuneinet/ply.hpp"
#include "cuneinet/seeding.hpp"
#include "cuneinet/trainer.hpp"

namespace cuneinet::cli {
namespace {

namespace fs = std::filesystem;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
  if (!out) throw InputError("failed writing " + path.string());
}

// Options shared by every subcommand: a config file plus key overrides
// collected in command-line order.
struct Common {
  std::string config_path;
  kv::Pairs overrides;
  unsigned threads = 0;

  void attach(CLI::App* sub) {
    sub->add_option("--config", config_path, "key=value configuration file");
    sub->add_option_function<std::vector<std::string>>(
        "--set",
        [this](const std::vector<std::string>& items) {
          for (const auto& item : items) {
            const auto eq = item.find('=');
            if (eq == std::string::npos)
              throw CLI::ValidationError("--set", "expected key=value, got '" + item + "'");
            overrides.emplace_back(item.substr(0, eq), item.substr(eq + 1));
          }
        },
        "override any configuration key (key=value)");
    sub->add_option("--threads", threads, "worker thread cap (0 = all cores)");
  }

  // --flag VALUE mapped onto a configuration key
  CLI::Option* value(CLI::App* sub, const std::string& flag, const std::string& key,
                     const std::string& help) {
    return sub->add_option_function<std::string>(
        flag, [this, key](const std::string& v) { overrides.emplace_back(key, v); }, help);
  }

  void toggle_off(CLI::App* sub, const std::string& flag, const std::string& key,
                  const std::string& help) {
    sub->add_flag_callback(flag, [this, key] { overrides.emplace_back(key, "false"); }, help);
  }

  RunConfig resolve() const {
    RunConfig cfg = config_path.empty() ? RunConfig{} : RunConfig::load(config_path);
    cfg.apply(overrides);
    set_max_threads(threads);
    return cfg;
  }
};

void add_network_flags(Common& c, CLI::App* sub) {
  c.value(sub, "--n-points", "n_points", "points per cloud after subsampling");
  c.value(sub, "--k", "k", "neighbours per point");
  c.value(sub, "--pool", "pool", "candidate pool size");
  c.toggle_off(sub, "--no-min-distance", "min_distance_rule",
               "layer 2 uses plain sampled neighbours");
  c.toggle_off(sub, "--no-sparse-edge", "sparse_edge", "exact k nearest neighbours (pool = k)");
  c.toggle_off(sub, "--no-max-pool", "max_pool", "classify from the global average only");
  c.toggle_off(sub, "--no-avg-pool", "avg_pool", "classify from the global maximum only");
  c.toggle_off(sub, "--no-group-norm", "group_norm", "no normalization layers");
}

void print_report(std::ostream& out, const EvalReport& report) { out << format_report(report); }

int cmd_gen_data(const Common& c, const std::string& out_dir, bool force, std::ostream& out) {
  RunConfig cfg = c.resolve();
  const fs::path dir(out_dir);
  if (fs::exists(dir / "manifest.tsv") && !force)
    throw InputError(dir.string() + " already holds a dataset; pass --force to overwrite it");
  cfg.data.seed = cfg.seed;
  const auto result = datagen::generate(cfg.data, dir);
  write_text(dir / "config.txt", kv::format(cfg.to_key_values()));
  out << "wrote " << result.dataset.entries.size() << " clouds and "
      << (dir / "manifest.tsv").string() << "\n";
  return kOk;
}

int cmd_train(const Common& c, const std::string& manifest, const std::string& out_dir, bool quiet,
              std::ostream& out) {
  RunConfig cfg = c.resolve();
  const auto dataset = read_manifest(manifest);
  cfg.network.n_classes = dataset.class_names.size();
  cfg.network.validate();
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  write_text(dir / "config.txt", kv::format(cfg.to_key_values()));

  TrainOptions opts;
  opts.epochs = cfg.epochs;
  opts.seed = cfg.seed;
  opts.lr_start = cfg.lr_start;
  opts.lr_end = cfg.lr_end;
  opts.out_dir = dir;
  opts.verbose = !quiet;
  const auto result = train(dataset, cfg.network, opts);
  out << "best epoch " << result.best_epoch << ", mean loss "
      << result.log[result.best_epoch].mean_loss << "\n";
  if (!dataset.entries_in(Split::Test).empty()) {
    const auto report = evaluate(result.best_params, dataset, cfg.network);
    write_text(dir / "eval_report.txt", format_report(report));
    print_report(out, report);
  }
  return kOk;
}

int cmd_eval(const Common& c, const std::string& checkpoint, const std::string& manifest,
             const std::string& report_path, std::ostream& out) {
  c.resolve();
  const auto ckpt = load_checkpoint(checkpoint);
  const auto dataset = read_manifest(manifest);
  if (!ckpt.class_names.empty() && ckpt.class_names != dataset.class_names)
    throw InputError("manifest classes do not match the checkpoint's classes");
  const auto report = evaluate(ckpt.params, dataset, ckpt.config);
  print_report(out, report);
  if (!report_path.empty()) write_text(report_path, format_report(report));
  return kOk;
}

int cmd_attend(const Common& c, const std::string& checkpoint, const std::string& cloud_path,
               const std::string& out_path, long target, const std::string& dump_path,
               std::ostream& out) {
  const RunConfig cfg = c.resolve();
  const auto ckpt = load_checkpoint(checkpoint);
  PointCloud raw = ply::read_ply_file(cloud_path);
  const PointCloud input = prepare_input(raw, ckpt.config);
  const auto fwd = forward(ckpt.params, input, ckpt.config, Mode::Eval, eval_seed(input));
  const auto& p = fwd.trace.probabilities;
  const auto predicted = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
  const std::size_t cls = target < 0 ? predicted : static_cast<std::size_t>(target);
  if (cls >= ckpt.config.n_classes)
    throw ConfigError("--class " + std::to_string(cls) + " out of range for " +
                      std::to_string(ckpt.config.n_classes) + " classes");
  const auto map = attention::max_attention(ckpt.params, ckpt.config, fwd.trace, cls, cfg.attention);

  // back to the input's units so the result overlays the original scan
  PointCloud colored = attention::export_attention(input, map);
  if (ckpt.config.normalize_input) {
    const Similarity sim = normalization_of(subsample(raw, ckpt.config.n_points, hash_string(raw.source_id)));
    for (auto& q : colored.points) q = sim.invert(q);
  }
  ply::write_ply_file(out_path, colored, ply::Format::BinaryLittleEndian);
  if (!dump_path.empty()) write_text(dump_path, attention::format_scores(map));

  std::size_t green = 0, red = 0;
  for (auto col : map.color) {
    green += col == attention::Color::Green;
    red += col == attention::Color::Red;
  }
  const std::string name =
      cls < ckpt.class_names.size() ? ckpt.class_names[cls] : std::to_string(cls);
  out << "class " << name << " (p=" << p[cls] << "), " << green << " green, " << red
      << " red, epsilon " << map.epsilon << ", cutoff " << map.cutoff << "\n";
  return kOk;
}

int cmd_graph_dump(const Common& c, const std::string& cloud_path, const std::string& out_path,
                   std::ostream& out) {
  const RunConfig cfg = c.resolve();
  PointCloud raw = ply::read_ply_file(cloud_path);
  const PointCloud input = prepare_input(raw, cfg.network);
  const SpatialIndex index(input.points);
  const auto graph = sparse_edge_neighbors(index, cfg.network.k, cfg.network.effective_pool(),
                                           derive_seed(cfg.seed, 1));
  if (out_path.empty()) {
    write_graph_dump(out, graph);
  } else {
    std::ofstream f(out_path, std::ios::trunc);
    if (!f) throw InputError("cannot write " + out_path);
    write_graph_dump(f, graph);
  }
  return kOk;
}

int cmd_build_manifest(const Common& c, const std::string& ply_dir, const std::string& text_dir,
                       const std::string& tag, const std::string& out_path, std::ostream& out) {
  const RunConfig cfg = c.resolve();
  auto ds = datagen::build_manifest(ply_dir, text_dir, tag, cfg.data.test_fraction, cfg.seed);
  // paths relative to wherever the manifest lands
  const fs::path target_dir = fs::absolute(out_path).parent_path();
  fs::create_directories(target_dir);
  for (auto& e : ds.entries)
    e.path = fs::relative(fs::absolute(ds.root / e.path), target_dir).generic_string();
  write_manifest(out_path, ds);
  const auto test = ds.class_counts(Split::Test);
  const auto trainc = ds.class_counts(Split::Train);
  out << ds.entries.size() << " entries: " << ds.class_names[0] << " " << trainc[0] << "+"
      << test[0] << ", " << ds.class_names[1] << " " << trainc[1] << "+" << test[1]
      << " (train+test)\n";
  return kOk;
}

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case Error::Kind::Config: return kUsage;
    case Error::Kind::Numeric: return kNumeric;
    default: return kData;
  }
}

// Routes spdlog through the caller's error stream for the duration of a run.
class LogToStream {
 public:
  explicit LogToStream(std::ostream& err) {
    auto logger = std::make_shared<spdlog::logger>(
        "cuneinet", std::make_shared<spdlog::sinks::ostream_sink_mt>(err, true));
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
  }
  ~LogToStream() {
    spdlog::set_default_logger(std::make_shared<spdlog::logger>(
        "cuneinet", std::make_shared<spdlog::sinks::stderr_sink_mt>()));
  }
  LogToStream(const LogToStream&) = delete;
  LogToStream& operator=(const LogToStream&) = delete;
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  LogToStream log(err);
  CLI::App app{"Point-cloud tablet classification with edge convolutions"};
  app.require_subcommand(1);

  Common gen_c, train_c, eval_c, attend_c, graph_c, manifest_c;

  auto* gen = app.add_subcommand("gen-data", "generate a synthetic tablet dataset");
  std::string gen_out;
  bool force = false;
  gen_c.attach(gen);
  gen_c.value(gen, "--task", "task", "left_imprint, seal_imprint or period_proxy")->required();
  gen_c.value(gen, "--per-class", "per_class", "clouds per class");
  gen_c.value(gen, "--points", "points", "points per cloud");
  gen_c.value(gen, "--noise-sigma", "noise_sigma", "surface noise in mm");
  gen_c.value(gen, "--test-fraction", "test_fraction", "share of each class held out");
  gen_c.value(gen, "--seed", "seed", "random seed");
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_flag("--force", force, "overwrite an existing dataset");

  auto* tr = app.add_subcommand("train", "train a classifier on a manifest");
  std::string tr_manifest, tr_out;
  bool quiet = false;
  train_c.attach(tr);
  add_network_flags(train_c, tr);
  train_c.value(tr, "--epochs", "epochs", "training epochs");
  train_c.value(tr, "--seed", "seed", "random seed");
  tr->add_option("--manifest", tr_manifest, "dataset manifest")->required()->check(CLI::ExistingFile);
  tr->add_option("--out", tr_out, "run directory")->required();
  tr->add_flag("--quiet", quiet, "no per-epoch log lines");

  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a manifest's test split");
  std::string ev_ckpt, ev_manifest, ev_report;
  eval_c.attach(ev);
  ev->add_option("--checkpoint", ev_ckpt, "model checkpoint")->required()->check(CLI::ExistingFile);
  ev->add_option("--manifest", ev_manifest, "dataset manifest")->required()->check(CLI::ExistingFile);
  ev->add_option("--report-path", ev_report, "also write the report here");

  auto* at = app.add_subcommand("attend", "colour a cloud by maximum attention");
  std::string at_ckpt, at_cloud, at_out, at_dump;
  long at_class = -1;
  attend_c.attach(at);
  at->add_option("--checkpoint", at_ckpt, "model checkpoint")->required()->check(CLI::ExistingFile);
  at->add_option("--cloud", at_cloud, "input PLY")->required()->check(CLI::ExistingFile);
  at->add_option("--out", at_out, "coloured output PLY")->required();
  at->add_option("--class", at_class, "target class index (default: predicted)");
  attend_c.value(at, "--epsilon", "attention_epsilon", "perturbation size (0 = automatic)");
  attend_c.value(at, "--cutoff", "attention_cutoff", "blue cutoff as a fraction of the peak score");
  at->add_flag_callback(
      "--use-logit", [&] { attend_c.overrides.emplace_back("attention_use_logit", "true"); },
      "measure the raw logit instead of the probability");
  at->add_option("--dump-scores", at_dump, "write point_index, score, colour per line");

  auto* gd = app.add_subcommand("graph-dump", "print the layer-1 neighbour graph of a cloud");
  std::string gd_cloud, gd_out;
  graph_c.attach(gd);
  add_network_flags(graph_c, gd);
  graph_c.value(gd, "--seed", "seed", "random seed");
  gd->add_option("--cloud", gd_cloud, "input PLY")->required()->check(CLI::ExistingFile);
  gd->add_option("--out", gd_out, "output file (default stdout)");

  auto* bm = app.add_subcommand("build-manifest", "label scans by a transliteration tag");
  std::string bm_ply, bm_text, bm_tag, bm_out;
  manifest_c.attach(bm);
  bm->add_option("--ply-dir", bm_ply, "directory of <id>.ply scans")->required();
  bm->add_option("--text-dir", bm_text, "directory of <id>.atf / <id>.txt files")->required();
  bm->add_option("--tag", bm_tag, "tag such as @seal or @left")->required();
  bm->add_option("--out", bm_out, "manifest to write")->required();
  manifest_c.value(bm, "--test-fraction", "test_fraction", "share of each class held out");
  manifest_c.value(bm, "--seed", "seed", "split seed");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(gen_c, gen_out, force, out);
    if (tr->parsed()) return cmd_train(train_c, tr_manifest, tr_out, quiet, out);
    if (ev->parsed()) return cmd_eval(eval_c, ev_ckpt, ev_manifest, ev_report, out);
    if (at->parsed()) return cmd_attend(attend_c, at_ckpt, at_cloud, at_out, at_class, at_dump, out);
    if (gd->parsed()) return cmd_graph_dump(graph_c, gd_cloud, gd_out, out);
    if (bm->parsed()) return cmd_build_manifest(manifest_c, bm_ply, bm_text, bm_tag, bm_out, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}

}  // namespace cuneinet::cli
