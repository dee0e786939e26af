// seqmod: file-staged command line front end of the library.
//
//   synth -> sweep -> label -> variation -> curate -> train -> evaluate/report
//
// Every stage reads its inputs from --in-dir (default: --out-dir), writes its
// artifacts to --out-dir and records both in <out-dir>/manifest.json.

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>

#include "manifest.hpp"
#include "seqmod/benchmark.hpp"
#include "seqmod/errors.hpp"
#include "seqmod/eval.hpp"
#include "seqmod/parallel.hpp"
#include "seqmod/pipeline.hpp"
#include "seqmod/synth.hpp"
#include "seqmod/variation.hpp"

namespace fs = std::filesystem;
using namespace seqmod;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitData = 2;

// File names shared by the stages.
constexpr const char* kRefs = "refs.vprf";
constexpr const char* kQueries = "queries.vprf";
constexpr const char* kGroundTruth = "gt.csv";
constexpr const char* kSpec = "synth_spec.json";
constexpr const char* kChunks = "chunks.csv";
constexpr const char* kSplits = "splits.csv";
constexpr const char* kSweep = "sweep.csv";
constexpr const char* kLabels = "labels.csv";
constexpr const char* kDescriptors = "descriptors.vprf";
constexpr const char* kCurated = "curated.csv";
constexpr const char* kModel = "model.sqml";
constexpr const char* kHistory = "history.csv";

struct Options {
  std::string config_path;
  std::string out_dir = ".";
  std::string in_dir;
  std::uint64_t seed = 0;
  std::string metric;
  std::string lengths;
  double target = 0.0;
  double alpha = 0.0;
  std::vector<std::string> sets;
  std::string log_level = "warn";

  // stage specific
  std::string spec_path;
  std::size_t noise_features = 0;
  std::string refs, queries, gt;
  std::string strategy = "dynamic";
  std::vector<std::string> datasets;

  CLI::App* active = nullptr;  // the subcommand being run
  bool given(const char* flag) const { return active->count(flag) > 0; }

  fs::path out() const { return out_dir; }
  fs::path in() const { return in_dir.empty() ? fs::path(out_dir) : fs::path(in_dir); }
};

std::string num(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

std::string join_lengths(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

// defaults <- --config <- --set <- dedicated flags
PipelineConfig resolve_config(const Options& o) {
  PipelineConfig c;
  if (!o.config_path.empty()) c = load_config(o.config_path);
  for (const auto& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw ValidationError("--set expects key=value, got '" + kv + "'");
    set_config_value(c, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.given("--seed")) c.seed = o.seed;
  if (o.given("--metric")) c.metric = parse_metric(o.metric);
  if (o.given("--lengths")) c.lengths = parse_lengths(o.lengths);
  if (o.given("--target")) c.target_recall = o.target;
  if (o.given("--alpha")) c.alpha = o.alpha;
  c.validate();
  return c;
}

// Tracks a stage's files, checks inputs against the input directory's
// manifest and records everything once the stage finishes.
class Stage {
 public:
  Stage(std::string name, const Options& o, const PipelineConfig& config)
      : name_(std::move(name)), opts_(o), config_(config) {
    fs::create_directories(o.out());
  }

  fs::path input(const fs::path& p) {
    if (!fs::exists(p)) throw DataError("missing input " + p.string());
    inputs_.push_back(p);
    return p;
  }
  fs::path in(const char* name) { return input(opts_.in() / name); }
  fs::path output(const std::string& name) {
    outputs_.push_back(opts_.out() / name);
    return outputs_.back();
  }

  void check() const {
    cli::Manifest(opts_.in()).check_inputs(inputs_);
    if (fs::weakly_canonical(opts_.in()) != fs::weakly_canonical(opts_.out()))
      cli::Manifest(opts_.out()).check_inputs(inputs_);
  }

  void finish() const {
    cli::Manifest m(opts_.out());
    m.record({name_, to_text(config_), config_.seed, inputs_, outputs_});
    for (const auto& p : outputs_) std::cout << "wrote " << p.string() << '\n';
  }

 private:
  std::string name_;
  const Options& opts_;
  const PipelineConfig& config_;
  std::vector<fs::path> inputs_;
  std::vector<fs::path> outputs_;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Rebuilds the evaluation-side view of a prepared dataset from stage files.
PreparedDataset load_prepared(Stage& st, const fs::path& dir,
                              const PipelineConfig& config, std::string name,
                              bool need_descriptors) {
  PreparedDataset ds;
  ds.name = std::move(name);
  ds.target = config.target_recall;
  ds.table = load_sweep(st.input(dir / kSweep));
  ds.split = load_splits(st.input(dir / kSplits));
  if (ds.table.lengths != config.lengths)
    throw DataError((dir / kSweep).string() + " was swept over lengths " +
                    join_lengths(ds.table.lengths) + ", config has " +
                    join_lengths(config.lengths));
  ds.labels = label_required_lengths(ds.table, config.target_recall);
  const std::size_t n = ds.table.chunks();
  if (ds.split.train.size() + ds.split.valid.size() + ds.split.test.size() != n)
    throw DataError((dir / kSplits).string() + " does not cover the " +
                    std::to_string(n) + " swept chunks");
  if (need_descriptors) {
    ds.descriptors = load_descriptors(st.input(dir / kDescriptors));
    if (ds.descriptors.rows() != n)
      throw DataError((dir / kDescriptors).string() + " has " +
                      std::to_string(ds.descriptors.rows()) +
                      " rows, sweep has " + std::to_string(n) + " chunks");
  }
  return ds;
}

// ---- subcommands ----

void run_synth(const Options& o) {
  const auto config = resolve_config(o);
  Stage st("synth", o, config);
  SynthSpec spec;
  if (!o.spec_path.empty()) {
    spec = synth_spec_from_json(read_text(st.input(o.spec_path)));
    if (o.given("--seed")) spec.seed = config.seed;
  } else {
    spec = benchmark_spec(config.seed, o.noise_features);
  }
  st.check();
  const auto data = generate(spec);
  store_features(st.output(kRefs), data.refs);
  store_features(st.output(kQueries), data.queries);
  store_ground_truth(st.output(kGroundTruth), data.gt);
  write_text(st.output(kSpec), to_json(spec));
  st.finish();
}

void run_sweep(const Options& o) {
  const auto config = resolve_config(o);
  Stage st("sweep", o, config);
  const auto refs_path = o.refs.empty() ? st.in(kRefs) : st.input(o.refs);
  const auto queries_path = o.queries.empty() ? st.in(kQueries) : st.input(o.queries);
  const auto gt_path = o.gt.empty() ? st.in(kGroundTruth) : st.input(o.gt);
  st.check();

  const auto refs = load_features(refs_path);
  const auto queries = load_features(queries_path);
  if (refs.cols() != queries.cols())
    throw DataError("reference and query features differ in dimension");
  const auto gt = load_ground_truth(gt_path, config.tolerance_frames);
  validate(gt, queries.rows(), refs.rows());

  const auto chunks = build_chunks(refs, gt, config.m, config.step);
  const auto split = split_chunks(chunks.size(), config.fractions, config.seed);
  const auto table = sweep(queries, refs, chunks, gt, config.lengths, config.metric);
  store_chunks(st.output(kChunks), chunks);
  store_splits(st.output(kSplits), split);
  store_sweep(st.output(kSweep), table);
  std::cout << chunks.size() << " chunks (" << chunks.dropped()
            << " empty windows dropped): train " << split.train.size()
            << ", valid " << split.valid.size() << ", test " << split.test.size()
            << '\n';
  st.finish();
}

void run_label(const Options& o) {
  const auto config = resolve_config(o);
  Stage st("label", o, config);
  const auto sweep_path = st.in(kSweep);
  st.check();
  const auto table = load_sweep(sweep_path);
  const auto labels = label_required_lengths(table, config.target_recall);
  store_labels(st.output(kLabels), labels);
  std::size_t missed = 0;
  for (bool a : labels.achieved) missed += !a;
  std::cout << labels.size() << " chunks labelled, " << missed
            << " cannot reach target " << num(config.target_recall) << '\n';
  st.finish();
}

void run_variation(const Options& o) {
  const auto config = resolve_config(o);
  Stage st("variation", o, config);
  const auto refs_path = o.refs.empty() ? st.in(kRefs) : st.input(o.refs);
  const auto gt_path = o.gt.empty() ? st.in(kGroundTruth) : st.input(o.gt);
  const auto chunks_path = st.in(kChunks);
  st.check();
  const auto refs = load_features(refs_path);
  const auto gt = load_ground_truth(gt_path, config.tolerance_frames);
  const auto chunks = load_chunks(chunks_path, gt, refs.rows(), config.m, config.step);
  store_descriptors(st.output(kDescriptors), chunk_descriptors(refs, chunks));
  st.finish();
}

void run_curate(const Options& o) {
  const auto config = resolve_config(o);
  Stage st("curate", o, config);
  const auto desc = load_descriptors(st.in(kDescriptors));
  const auto labels = load_labels(st.in(kLabels));
  const auto split = load_splits(st.in(kSplits));
  st.check();
  if (desc.rows() != labels.size())
    throw DataError("descriptors and labels differ in chunk count");
  PreparedDataset ds;
  ds.descriptors = desc;
  ds.labels = labels;
  ds.split = split;
  const DatasetRows rows[] = {{&ds, split.train, split.valid}};
  for (auto c : split.train)
    if (c >= desc.rows()) throw DataError("split references unknown chunk");
  const auto curated = curate_rows(rows, config);
  store_curated(st.output(kCurated), curated);
  std::cout << curated.retained.size() << " of " << curated.scores.size()
            << " features above alpha " << num(config.alpha) << '\n';
  st.finish();
}

void run_train(const Options& o) {
  const auto config = resolve_config(o);
  Stage st("train", o, config);
  auto ds = load_prepared(st, o.in(), config, "dataset", true);
  const auto labels = load_labels(st.in(kLabels));
  const auto curated = load_curated(st.in(kCurated), config.alpha);
  st.check();
  if (labels.required_length != ds.labels.required_length)
    throw DataError(std::string(kLabels) + " does not match " + kSweep +
                    " at target " + num(config.target_recall) + "; rerun label");
  if (curated.scores.size() != ds.descriptors.cols())
    throw DataError(std::string(kCurated) + " scores " +
                    std::to_string(curated.scores.size()) +
                    " features, descriptors have " +
                    std::to_string(ds.descriptors.cols()));

  std::vector<EpochRecord> history;
  const DatasetRows rows[] = {{&ds, ds.split.train, ds.split.valid}};
  const auto model = fit_regressor(rows, config, curated, &history);
  save_regressor(st.output(kModel), model);
  std::string h = "epoch,train_loss,valid_loss,learning_rate\n";
  for (std::size_t e = 0; e < history.size(); ++e)
    h += std::to_string(e) + ',' + num(history[e].train_loss) + ',' +
         num(history[e].valid_loss) + ',' + num(history[e].learning_rate) + '\n';
  write_text(st.output(kHistory), h);
  std::cout << "trained " << history.size() << " epochs on "
            << curated.retained.size() << " features\n";
  st.finish();
}

void run_evaluate(const Options& o) {
  const auto config = resolve_config(o);
  Stage st("evaluate", o, config);
  const bool dynamic = o.strategy == "dynamic";
  std::size_t fixed_len = 0;
  if (!dynamic && o.strategy != "train-fixed") {
    const auto s = o.strategy.rfind("fixed:", 0) == 0 ? o.strategy.substr(6) : "";
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), fixed_len);
    if (s.empty() || ec != std::errc() || p != s.data() + s.size() || fixed_len == 0)
      throw ValidationError("bad --strategy '" + o.strategy +
                            "' (dynamic, fixed:N, train-fixed)");
    if (std::find(config.lengths.begin(), config.lengths.end(), fixed_len) ==
        config.lengths.end())
      throw ValidationError("--strategy " + o.strategy +
                            ": length is not among the swept lengths " +
                            join_lengths(config.lengths));
  }
  auto ds = load_prepared(st, o.in(), config, "dataset", dynamic);
  std::optional<Regressor> model;
  if (dynamic) model = load_regressor(st.in(kModel));
  st.check();

  std::string tag;
  std::optional<Strategy> strategy;
  if (dynamic) {
    if (model->descriptor_dim != ds.descriptors.cols())
      throw DataError("model expects " + std::to_string(model->descriptor_dim) +
                      " descriptor features, got " +
                      std::to_string(ds.descriptors.cols()));
    strategy = Strategy::dynamic(*model);
    tag = "dynamic";
  } else if (o.strategy == "train-fixed") {
    const auto len = baseline_train_fixed(ds.table.select(ds.split.train),
                                          config.target_recall);
    strategy = Strategy::fixed(len);
    tag = "train-fixed";
  } else {
    strategy = Strategy::fixed(fixed_len);
    tag = "fixed-" + std::to_string(fixed_len);
  }
  const auto report = evaluate_strategy(*strategy, test_set(ds), config.target_recall);
  store_report_csv(st.output("eval_" + tag + ".csv"), report);
  store_report_json(st.output("eval_" + tag + ".json"), report);
  std::cout << report.strategy_id << ": sects " << format_pct(report.sects_pct)
            << "%, median length " << num(report.median_length) << '\n';
  st.finish();
}

void run_crosseval(const Options& o) {
  const auto config = resolve_config(o);
  Stage st("crosseval", o, config);
  if (o.datasets.empty()) throw ValidationError("crosseval needs --dataset NAME=DIR");
  std::vector<PreparedDataset> datasets;
  std::vector<NamedModel> models;
  for (const auto& d : o.datasets) {
    const auto eq = d.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ValidationError("--dataset expects NAME=DIR, got '" + d + "'");
    const auto name = d.substr(0, eq);
    const fs::path dir = d.substr(eq + 1);
    datasets.push_back(load_prepared(st, dir, config, name, true));
    models.push_back({name, load_regressor(st.input(dir / kModel))});
  }
  st.check();
  const auto grid = cross_evaluate(models, datasets, config);

  std::string csv = "train,test,sects_pct,median_len\n";
  json doc;
  doc["target_recall"] = config.target_recall;
  auto& cells = doc["cells"] = json::array();
  for (std::size_t i = 0; i < grid.train_names.size(); ++i)
    for (std::size_t j = 0; j < grid.test_names.size(); ++j) {
      const auto& r = grid.reports[i][j];
      csv += grid.train_names[i] + ',' + grid.test_names[j] + ',' +
             format_pct(r.sects_pct) + ',' + num(r.median_length) + '\n';
      cells.push_back({{"train", grid.train_names[i]},
                       {"test", grid.test_names[j]},
                       {"sects_pct", r.sects_pct},
                       {"median_length", r.median_length}});
    }
  write_text(st.output("crosseval.csv"), csv);
  write_text(st.output("crosseval.json"), doc.dump(2) + "\n");
  std::cout << csv;
  st.finish();
}

void run_report(const Options& o) {
  const auto config = resolve_config(o);
  Stage st("report", o, config);
  auto ds = load_prepared(st, o.in(), config, "dataset", true);
  const auto model = load_regressor(st.in(kModel));
  st.check();
  const auto cmp = compare_strategies(ds, model);

  const SummaryRow rows[] = {{ds.name, &cmp.no_sequence},
                             {ds.name, &cmp.train_fixed},
                             {ds.name, &cmp.dynamic},
                             {ds.name, &cmp.match_length},
                             {ds.name, &cmp.match_consistency}};
  const auto summary = summary_csv(rows);
  write_text(st.output("summary.csv"), summary);

  // consistency/latency curve of every fixed length plus the dynamic point
  const auto test = test_set(ds);
  json doc;
  doc["target_recall"] = config.target_recall;
  auto& curve = doc["fixed_curve"] = json::array();
  for (auto len : config.lengths) {
    const auto r = evaluate_strategy(Strategy::fixed(len), test, config.target_recall);
    curve.push_back({{"length", len}, {"sects_pct", r.sects_pct}});
  }
  const auto entry = [](const EvalReport& r) {
    return json{{"strategy", r.strategy_id},
                {"oracle", r.oracle},
                {"sects_pct", std::stod(format_pct(r.sects_pct))},
                {"median_length", r.median_length}};
  };
  doc["no_sequence"] = entry(cmp.no_sequence);
  doc["train_fixed"] = entry(cmp.train_fixed);
  doc["dynamic"] = entry(cmp.dynamic);
  doc["match_length"] = entry(cmp.match_length);
  doc["match_consistency"] = entry(cmp.match_consistency);
  doc["delta_sects_pct"] = cmp.delta_sects_pct();
  doc["delta_median_length"] = cmp.delta_median_length();
  write_text(st.output("report.json"), doc.dump(2) + "\n");
  std::cout << summary << "delta sects% at matched length: "
            << format_pct(cmp.delta_sects_pct())
            << ", delta median length at matched sects: "
            << num(cmp.delta_median_length()) << '\n';
  st.finish();
}

}  // namespace

int main(int argc, char** argv) {
  const PipelineConfig defaults;
  Options o;

  CLI::App app{"Dynamic sequence-length selection for visual place recognition"};
  app.require_subcommand(1);
  app.footer("Config keys and defaults (--config file or --set key=value):\n" +
             to_text(defaults) +
             "\nEnvironment: SEQMOD_WORKERS sets the worker thread count (default: "
             "hardware concurrency). SOURCE_DATE_EPOCH pins manifest timestamps.");

  const auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "key = value config file");
    sub->add_option("--out-dir", o.out_dir, "output directory")->capture_default_str();
    sub->add_option("--in-dir", o.in_dir, "input directory (default: --out-dir)");
    sub->add_option("--seed", o.seed, "split/model/synth seed")
                     ->default_str(std::to_string(defaults.seed));
    sub->add_option("--metric", o.metric, "cosine | negative-euclidean")
                       ->default_str(std::string(to_string(defaults.metric)));
    sub->add_option("--lengths", o.lengths,
                                    "comma-separated odd sequence lengths")
                        ->default_str(join_lengths(defaults.lengths));
    sub->add_option("--target", o.target, "target recall")
                       ->default_str(num(defaults.target_recall));
    sub->add_option("--alpha", o.alpha, "AMI curation threshold")
                      ->default_str(num(defaults.alpha));
    sub->add_option("--set", o.sets, "override any config key: key=value");
    sub->add_option("--log-level", o.log_level, "trace|debug|info|warn|error|off")
        ->capture_default_str();
  };

  std::map<CLI::App*, void (*)(const Options&)> handlers;
  const auto add = [&](const char* name, const char* help, void (*fn)(const Options&)) {
    auto* sub = app.add_subcommand(name, help);
    common(sub);
    handlers[sub] = fn;
    return sub;
  };

  auto* synth = add("synth", "generate a synthetic traverse pair", run_synth);
  synth->add_option("--spec", o.spec_path, "synthetic spec JSON (default: benchmark)");
  synth->add_option("--noise-features", o.noise_features,
                    "pure-noise columns added to the benchmark spec")
      ->capture_default_str();
  auto* sw = add("sweep", "chunk, split and sweep sequence lengths", run_sweep);
  add("label", "required sequence length per chunk", run_label);
  auto* var = add("variation", "per-chunk appearance variation", run_variation);
  for (auto* sub : {sw, var}) {
    sub->add_option("--refs", o.refs, "reference features (default: <in-dir>/refs.vprf)");
    sub->add_option("--gt", o.gt, "ground truth CSV (default: <in-dir>/gt.csv)");
  }
  sw->add_option("--queries", o.queries, "query features (default: <in-dir>/queries.vprf)");
  add("curate", "AMI feature curation on training chunks", run_curate);
  add("train", "train the sequence-length regressor", run_train);
  add("evaluate", "score one strategy on the test chunks", run_evaluate)
      ->add_option("--strategy", o.strategy, "dynamic | fixed:N | train-fixed")
      ->capture_default_str();
  add("crosseval", "train/test grid across datasets", run_crosseval)
      ->add_option("--dataset", o.datasets, "NAME=DIR of a trained dataset (repeat)");
  add("report", "strategy comparison and matched deltas", run_report);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitValidation;
  }

  auto logger = spdlog::stderr_color_st("seqmod");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(o.log_level));

  try {
    for (auto* sub : app.get_subcommands()) {
      o.active = sub;
      handlers.at(sub)(o);
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const CurationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return 0;
}
