// flarepp command-line front end.
//
// Exit codes: 0 success, 2 usage/config, 3 training divergence,
// 4 undefined metric, 5 I/O.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "flarepp/benchmark.hpp"
#include "flarepp/dataset_io.hpp"
#include "flarepp/loss.hpp"
#include "flarepp/metrics.hpp"
#include "flarepp/pipeline.hpp"
#include "flarepp/synth.hpp"
#include "flarepp/trainer.hpp"
#include "flarepp/version.hpp"
#include "run_manifest.hpp"

namespace fs = std::filesystem;
using namespace flarepp;
using namespace flarepp::cli;

namespace {

enum ExitCode : int { kOk = 0, kUsage = 2, kDiverged = 3, kUndefined = 4, kIo = 5 };

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

constexpr const char* kManifestCsv = "manifest.csv";
constexpr const char* kPrepareJson = "prepare.json";
constexpr const char* kCheckpoint = "checkpoint.txt";

std::vector<std::string> split_list(const std::string& text, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw UsageError(what + ": not a number: '" + s + "'");
  }
}

std::size_t parse_size(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(s, &pos);
    if (pos != s.size() || s.front() == '-') throw std::invalid_argument(s);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw UsageError(what + ": not a nonnegative integer: '" + s + "'");
  }
}

// "FQ=100,C=50,M=20"
ClassCounts parse_counts(const std::string& text) {
  ClassCounts counts{};
  for (const auto& item : split_list(text)) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw UsageError("--counts entries look like CLASS=N, got '" + item + "'");
    try {
      counts[static_cast<std::size_t>(parse_class(item.substr(0, eq)))] = parse_size(item.substr(eq + 1), "--counts");
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  return counts;
}

UndersampleRates parse_rates(const std::string& text) {
  UndersampleRates rates;
  for (const auto& item : split_list(text)) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw UsageError("--rates entries look like CLASS=FRACTION, got '" + item + "'");
    try {
      rates[parse_class(item.substr(0, eq))] = parse_double(item.substr(eq + 1), "--rates");
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  return rates;
}

ThresholdSpec parse_threshold(const std::string& text) {
  try {
    return ThresholdSpec::parse(text);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

Json counts_json(const ClassCounts& c) {
  Json j = Json::object();
  for (FlareClass k : kAllClasses) j[std::string(to_token(k))] = c[static_cast<std::size_t>(k)];
  return j;
}

std::string format_counts(const ClassCounts& c) {
  std::string out;
  for (FlareClass k : kAllClasses) {
    out += (out.empty() ? "" : " ") + std::string(to_token(k)) + "=" +
           std::to_string(c[static_cast<std::size_t>(k)]);
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

// Flat key=value file; '#' starts a comment.
std::map<std::string, std::string> read_flat_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t n = 0;
  const auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++n;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty() || line.front() == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError(path.string() + ":" + std::to_string(n) + ": expected key=value");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

// Dataset on disk split by partition role (1,2 train; 3 validation; 4 test).
struct RoleSplit {
  std::vector<LabeledSample> train, validation, test;
  SplitAssignment assignment;
};

RoleSplit load_by_role(const fs::path& manifest) {
  RoleSplit out;
  for (auto& ls : read_dataset(manifest)) {
    out.assignment.assign(ls.row.region_id, ls.row.partition);
    switch (out.assignment.role_of_partition(ls.row.partition)) {
      case SplitRole::train: out.train.push_back(std::move(ls.sample)); break;
      case SplitRole::validation: out.validation.push_back(std::move(ls.sample)); break;
      case SplitRole::test: out.test.push_back(std::move(ls.sample)); break;
    }
  }
  return out;
}

ThresholdSpec prepared_threshold(const fs::path& data_dir) {
  std::ifstream in(data_dir / kPrepareJson);
  if (!in) return ThresholdSpec{};
  try {
    return ThresholdSpec::parse(Json::parse(in).at("threshold").get<std::string>());
  } catch (const std::exception& e) {
    throw IoError("malformed " + (data_dir / kPrepareJson).string() + ": " + e.what());
  }
}

Json train_config_json(const TrainConfig& c) {
  Json j;
  j["loss"] = std::string(to_token(c.loss_kind));
  j["lr"] = c.initial_lr;
  j["weight_decay"] = c.weight_decay;
  j["batch_size"] = c.batch_size;
  j["alpha"] = c.alpha;
  j["epochs"] = c.epochs;
  j["seed"] = c.seed;
  j["threshold"] = c.threshold.to_string();
  return j;
}

Json model_json(const ModelSpec& m, std::size_t grid) {
  Json j;
  j["model"] = std::string(to_token(m.kind));
  j["hidden"] = m.hidden_sizes;
  j["feature_grid"] = grid;
  return j;
}

struct Context {
  RunManifest manifest;
  fs::path manifest_path;
  bool dry_run = false;
};

// ---------------------------------------------------------------- gen

struct GenOptions {
  std::string counts;
  std::string preset;
  double scale = 50.0;
  std::size_t size = 32;
  std::uint64_t seed = 42;
  std::string threshold = ">=M";
  std::string partitions = "1,2,3,4";
  std::string out;
};

int cmd_gen(const GenOptions& o, Context& ctx) {
  if (o.counts.empty() == o.preset.empty()) throw UsageError("give exactly one of --counts or --preset");
  if (!o.preset.empty() && o.preset != "reference") throw UsageError("unknown preset '" + o.preset + "'");
  const ThresholdSpec t = parse_threshold(o.threshold);
  std::vector<int> partitions;
  for (const auto& p : split_list(o.partitions)) {
    const auto v = parse_size(p, "--partitions");
    if (v < 1 || v > 4) throw UsageError("--partitions must be within 1..4");
    partitions.push_back(static_cast<int>(v));
  }
  if (partitions.empty()) throw UsageError("--partitions is empty");
  if (o.size == 0) throw UsageError("--size must be >= 1");

  ctx.manifest.seed = o.seed;
  auto& cfg = ctx.manifest.config;
  cfg["size"] = o.size;
  cfg["threshold"] = t.to_string();
  if (!o.counts.empty()) {
    cfg["counts"] = counts_json(parse_counts(o.counts));
    cfg["partitions"] = partitions;
  } else {
    cfg["preset"] = o.preset;
    cfg["scale"] = o.scale;
  }
  ctx.manifest.outputs = {(fs::path(o.out) / kManifestCsv).string()};
  if (ctx.dry_run) return kOk;

  std::vector<LabeledSample> samples;
  if (!o.counts.empty()) {
    SynthSpec spec;
    spec.counts = parse_counts(o.counts);
    spec.image_size = o.size;
    spec.threshold = t;
    spec.partitions = partitions;
    samples = synth_dataset(spec, o.seed);
  } else {
    if (!(o.scale > 0.0)) throw UsageError("--scale must be > 0");
    auto s = synth_splits(scaled_counts(reference_counts(), o.scale), o.size, o.seed, t);
    samples = std::move(s.train);
    samples.insert(samples.end(), std::make_move_iterator(s.validation.begin()),
                   std::make_move_iterator(s.validation.end()));
    samples.insert(samples.end(), std::make_move_iterator(s.test.begin()), std::make_move_iterator(s.test.end()));
  }
  std::vector<RegionObservation> obs;
  for (const auto& s : samples) obs.push_back({s.region_id, s.timestamp});
  write_dataset(o.out, kManifestCsv, samples, obs.empty() ? SplitAssignment{} : assign_partitions(obs));
  std::cerr << "wrote " << samples.size() << " samples (" << format_counts(count_classes(samples)) << ") to "
            << o.out << "\n";
  return kOk;
}

// ---------------------------------------------------------------- prepare

struct PrepareOptions {
  std::string in;
  std::string threshold = ">=M";
  bool balance = false;
  std::string rates;
  std::uint64_t seed = 42;
  std::string out;
};

int cmd_prepare(const PrepareOptions& o, Context& ctx) {
  const ThresholdSpec t = parse_threshold(o.threshold);
  const UndersampleRates rates = o.rates.empty() ? default_undersample_rates() : parse_rates(o.rates);
  const fs::path in_manifest = fs::path(o.in) / kManifestCsv;
  ctx.manifest.seed = o.seed;
  ctx.manifest.inputs = {in_manifest.string()};
  ctx.manifest.outputs = {(fs::path(o.out) / kManifestCsv).string(), (fs::path(o.out) / kPrepareJson).string()};
  auto& cfg = ctx.manifest.config;
  cfg["threshold"] = t.to_string();
  cfg["balance"] = o.balance;
  Json rj = Json::object();
  for (const auto& [c, r] : rates) rj[std::string(to_token(c))] = r;
  cfg["rates"] = rj;
  if (ctx.dry_run) return kOk;

  RoleSplit split = load_by_role(in_manifest);
  for (auto* part : {&split.train, &split.validation, &split.test}) {
    for (auto& s : *part) s.label = binarize(s.subclass, t);
  }
  if (split.train.empty() || split.validation.empty() || split.test.empty()) {
    throw UsageError("dataset is missing a partition role (train " + std::to_string(split.train.size()) +
                     ", validation " + std::to_string(split.validation.size()) + ", test " +
                     std::to_string(split.test.size()) + " samples)");
  }
  const ClassCounts before = count_classes(split.train);
  if (o.balance) split.train = balance_training(split.train, rates, o.seed, t);
  const ClassCounts after = count_classes(split.train);
  std::cerr << "train before: " << format_counts(before) << "\n"
            << "train after:  " << format_counts(after) << "\n";

  std::vector<LabeledSample> all = std::move(split.train);
  for (auto* part : {&split.validation, &split.test}) {
    all.insert(all.end(), std::make_move_iterator(part->begin()), std::make_move_iterator(part->end()));
  }
  write_dataset(o.out, kManifestCsv, all, split.assignment);

  Json info;
  info["threshold"] = t.to_string();
  info["balanced"] = o.balance;
  info["seed"] = o.seed;
  info["train_before"] = counts_json(before);
  info["train_after"] = counts_json(after);
  info["validation"] = counts_json(count_classes(split.validation));
  info["test"] = counts_json(count_classes(split.test));
  write_text(fs::path(o.out) / kPrepareJson, info.dump(2) + "\n");
  return kOk;
}

// ---------------------------------------------------------------- train

struct TrainOptions {
  std::string data;
  std::string config;
  std::string loss;
  double alpha = 0;
  double lr = 0;
  double weight_decay = 0;
  std::size_t batch_size = 0;
  std::size_t epochs = 0;
  std::uint64_t seed = 42;
  std::string model = "linear";
  std::string hidden;
  std::size_t feature_grid = 8;
  bool grid = false;
  std::string grid_lr, grid_wd, grid_batch, grid_alpha;
  std::size_t workers = 1;
  std::string out;
  // Which flags were given explicitly.
  std::map<std::string, bool> given;
};

std::vector<double> doubles(const std::string& list, const std::string& what) {
  std::vector<double> v;
  for (const auto& s : split_list(list)) v.push_back(parse_double(s, what));
  return v;
}

int cmd_train(TrainOptions o, Context& ctx) {
  std::map<std::string, std::string> file;
  if (!o.config.empty()) file = read_flat_config(o.config);
  const auto pick = [&](const std::string& key, const std::string& flag) -> std::optional<std::string> {
    if (o.given[flag]) return std::nullopt;  // flag value wins, handled by caller
    auto it = file.find(key);
    if (it == file.end()) return std::nullopt;
    return it->second;
  };
  static const std::set<std::string> known{"loss", "lr", "weight_decay", "batch_size", "alpha", "epochs",
                                           "seed", "model", "hidden", "feature_grid"};
  for (const auto& [k, v] : file) {
    if (!known.contains(k)) throw UsageError("unknown config key '" + k + "'");
  }

  std::string loss = o.given["loss"] ? o.loss : pick("loss", "loss").value_or("bce-pp");
  LossKind kind;
  try {
    kind = parse_loss_kind(loss);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  TrainConfig cfg = TrainConfig::defaults_for(kind);
  if (auto v = pick("lr", "lr")) cfg.initial_lr = parse_double(*v, "lr");
  if (auto v = pick("weight_decay", "weight-decay")) cfg.weight_decay = parse_double(*v, "weight_decay");
  if (auto v = pick("batch_size", "batch-size")) cfg.batch_size = parse_size(*v, "batch_size");
  if (auto v = pick("alpha", "alpha")) cfg.alpha = parse_double(*v, "alpha");
  if (auto v = pick("epochs", "epochs")) cfg.epochs = parse_size(*v, "epochs");
  if (auto v = pick("seed", "seed")) cfg.seed = parse_size(*v, "seed");
  if (auto v = pick("model", "model")) o.model = *v;
  if (auto v = pick("hidden", "hidden")) o.hidden = *v;
  if (auto v = pick("feature_grid", "feature-grid")) o.feature_grid = parse_size(*v, "feature_grid");
  if (o.given["lr"]) cfg.initial_lr = o.lr;
  if (o.given["weight-decay"]) cfg.weight_decay = o.weight_decay;
  if (o.given["batch-size"]) cfg.batch_size = o.batch_size;
  if (o.given["alpha"]) cfg.alpha = o.alpha;
  if (o.given["epochs"]) cfg.epochs = o.epochs;
  if (o.given["seed"]) cfg.seed = o.seed;
  cfg.threshold = prepared_threshold(o.data);

  ModelSpec spec;
  try {
    spec.kind = parse_model_kind(o.model);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  for (const auto& h : split_list(o.hidden)) spec.hidden_sizes.push_back(parse_size(h, "hidden"));
  if (o.feature_grid == 0) throw UsageError("feature_grid must be >= 1");
  spec.input_dim = FeatureExtractor{o.feature_grid}.dim();
  try {
    cfg.validate();
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (kind == LossKind::bce_pp) {
    if (auto w = cfg.loss_config().alpha_warning()) std::cerr << "warning: " << *w << "\n";
  }

  const fs::path out(o.out);
  ctx.manifest.seed = cfg.seed;
  ctx.manifest.inputs = {(fs::path(o.data) / kManifestCsv).string()};
  if (!o.config.empty()) ctx.manifest.inputs.push_back(o.config);
  ctx.manifest.outputs = {(out / kCheckpoint).string(), (out / "epoch_log.csv").string()};
  ctx.manifest.config = train_config_json(cfg);
  ctx.manifest.config.update(model_json(spec, o.feature_grid));

  GridSpace space;
  if (o.grid) {
    const bool custom = !o.grid_lr.empty() || !o.grid_wd.empty() || !o.grid_batch.empty() || !o.grid_alpha.empty();
    if (!custom) space = GridSpace::reference();
    space.learning_rates = o.grid_lr.empty() ? space.learning_rates : doubles(o.grid_lr, "--grid-lr");
    space.weight_decays = o.grid_wd.empty() ? space.weight_decays : doubles(o.grid_wd, "--grid-wd");
    if (!o.grid_batch.empty()) {
      space.batch_sizes.clear();
      for (const auto& s : split_list(o.grid_batch)) space.batch_sizes.push_back(parse_size(s, "--grid-batch"));
    }
    space.alphas = o.grid_alpha.empty() ? space.alphas : doubles(o.grid_alpha, "--grid-alpha");
    Json g;
    g["learning_rates"] = space.learning_rates;
    g["weight_decays"] = space.weight_decays;
    g["batch_sizes"] = space.batch_sizes;
    g["alphas"] = space.alphas;
    g["workers"] = o.workers;
    g["points"] = space.expand(cfg).size();
    ctx.manifest.config["grid"] = g;
    ctx.manifest.outputs.push_back((out / "leaderboard.csv").string());
  }
  if (ctx.dry_run) return kOk;

  RoleSplit split = load_by_role(fs::path(o.data) / kManifestCsv);
  if (split.train.empty() || split.validation.empty()) {
    throw UsageError("training needs samples in the train and validation partitions");
  }
  const FeatureExtractor fx{o.feature_grid};
  TrainData data{extract_split(split.train, fx), extract_split(split.validation, fx)};
  const FeatureScaler scaler = FeatureScaler::fit(data.train.features);
  standardize(data.train, scaler);
  standardize(data.validation, scaler);

  if (o.grid) {
    const auto board = grid_search(space, spec, data, cfg, std::max<std::size_t>(o.workers, 1));
    write_text(out / "leaderboard.csv", leaderboard_csv(board));
    cfg = board.front().config;
    ctx.manifest.config["selected"] = train_config_json(cfg);
    std::cerr << "best grid point: " << cfg.canonical() << "\n";
  }

  const TrainResult r = train(data, spec, cfg);
  write_text(out / "epoch_log.csv", epoch_log_csv(r.history));
  save_checkpoint(out / kCheckpoint, Checkpoint{r.model, o.feature_grid, scaler, cfg});
  const auto& last = r.history.back();
  std::printf("epochs=%zu final_train_loss=%.6f val_loss=%.6f val_css=%.4f\n", r.history.size(),
              last.train_loss, last.val_loss, last.val_css);
  return kOk;
}

// ---------------------------------------------------------------- eval

struct EvalOptions {
  std::string checkpoint;
  std::string data;
  std::string split = "test";
  double cutoff = 0.5;
  std::string out = ".";
};

int cmd_eval(const EvalOptions& o, Context& ctx) {
  SplitRole role;
  try {
    role = parse_split_role(o.split);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  ctx.manifest.inputs = {o.checkpoint, (fs::path(o.data) / kManifestCsv).string()};
  ctx.manifest.config["split"] = std::string(to_token(role));
  ctx.manifest.config["cutoff"] = o.cutoff;
  if (ctx.dry_run) return kOk;

  const Checkpoint ck = load_checkpoint(o.checkpoint);
  RoleSplit split = load_by_role(fs::path(o.data) / kManifestCsv);
  const auto& samples = role == SplitRole::train ? split.train
                        : role == SplitRole::validation ? split.validation
                                                        : split.test;
  if (samples.empty()) throw UsageError("split '" + o.split + "' has no samples");
  FeatureSplit fs_split = extract_split(samples, FeatureExtractor{ck.feature_grid});
  standardize(fs_split, ck.scaler);
  const Evaluation ev = evaluate(ck.model, fs_split, o.cutoff);
  std::cout << format_report(ev.cm, ev.scores);
  return kOk;
}

// ---------------------------------------------------------------- metrics

struct MetricsOptions {
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::string out = ".";
};

int cmd_metrics(const MetricsOptions& o, Context& ctx) {
  const ConfusionMatrix cm{o.tp, o.fp, o.tn, o.fn};
  ctx.manifest.config = {{"tp", o.tp}, {"fp", o.fp}, {"tn", o.tn}, {"fn", o.fn}};
  if (ctx.dry_run) return kOk;
  std::cout << format_report(cm, skill_scores(cm));
  return kOk;
}

// ---------------------------------------------------------------- curves

struct CurvesOptions {
  std::string alphas = "0.25,1";
  std::string threshold = ">=M";
  std::size_t grid = 101;
  std::string out;
};

std::string alpha_tag(double a) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", a);
  return buf;
}

int cmd_curves(const CurvesOptions& o, Context& ctx) {
  const ThresholdSpec t = parse_threshold(o.threshold);
  const auto alphas = doubles(o.alphas, "--alpha");
  if (alphas.empty()) throw UsageError("--alpha list is empty");
  if (o.grid < 2) throw UsageError("--grid must be >= 2");
  LossConfig base;
  base.weights = proximity_weights(t);
  for (double a : alphas) {
    LossConfig c = base;
    c.alpha = a;
    try {
      c.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    if (auto w = c.alpha_warning()) std::cerr << "warning: " << *w << "\n";
  }
  ctx.manifest.config["alphas"] = alphas;
  ctx.manifest.config["threshold"] = t.to_string();
  ctx.manifest.config["grid"] = o.grid;

  const auto grid = probability_grid(o.grid);
  std::vector<std::pair<fs::path, std::string>> files;
  for (double a : alphas) {
    LossConfig c = base;
    c.alpha = a;
    for (FlareClass k : kAllClasses) {
      const BinaryLabel target = binarize(k, t);
      const fs::path path = fs::path(o.out) / ("curve_" + std::string(to_token(k)) + "_" +
                                               std::string(to_token(target)) + "_a" + alpha_tag(a) + ".csv");
      ctx.manifest.outputs.push_back(path.string());
      if (!ctx.dry_run) files.emplace_back(path, curve_to_csv(loss_curve(k, target, c, grid)));
    }
  }
  for (const auto& [path, text] : files) write_text(path, text);
  return kOk;
}

// ---------------------------------------------------------------- preprocess

struct PreprocessOptions {
  std::string in;
  std::string roi;
  std::size_t size = kImageSize;
  std::string out;
};

int cmd_preprocess(const PreprocessOptions& o, Context& ctx) {
  if (o.size == 0) throw UsageError("--size must be >= 1");
  ctx.manifest.inputs = {o.in};
  if (!o.roi.empty()) ctx.manifest.inputs.push_back(o.roi);
  ctx.manifest.outputs = {o.out};
  ctx.manifest.config["size"] = o.size;
  if (ctx.dry_run) return kOk;
  const Raster raw = load_raster(o.in);
  const Bitmap roi = o.roi.empty() ? Bitmap(raw.width(), raw.height(), true) : load_bitmap(o.roi);
  save_raster(o.out, preprocess(raw, roi, o.size));
  return kOk;
}

// ---------------------------------------------------------------- bench

struct BenchOptions {
  std::uint64_t seed = 42;
  double scale = 50.0;
  std::size_t epochs = 50;
  std::size_t size = 32;
  std::size_t feature_grid = 8;
  std::string out;
};

int cmd_bench(const BenchOptions& o, Context& ctx) {
  BenchmarkOptions b;
  b.seed = o.seed;
  b.scale = o.scale;
  b.epochs = o.epochs;
  b.image_size = o.size;
  b.feature_grid = o.feature_grid;
  if (!(b.scale > 0.0) || b.epochs == 0 || b.image_size == 0 || b.feature_grid == 0) {
    throw UsageError("--scale, --epochs, --size and --feature-grid must be positive");
  }
  ctx.manifest.seed = o.seed;
  ctx.manifest.config = {{"scale", o.scale}, {"epochs", o.epochs}, {"size", o.size}, {"feature_grid", o.feature_grid}};
  const fs::path out(o.out);
  ctx.manifest.outputs = {(out / "report.txt").string(), (out / "epoch_log_bce.csv").string(),
                          (out / "epoch_log_bce-pp.csv").string()};
  if (ctx.dry_run) return kOk;
  const BenchmarkReport r = run_benchmark(b);
  const std::string report = format_benchmark(r);
  std::cout << report;
  write_text(out / "report.txt", report);
  write_text(out / "epoch_log_bce.csv", epoch_log_csv(r.bce.history));
  write_text(out / "epoch_log_bce-pp.csv", epoch_log_csv(r.bce_pp.history));
  return kOk;
}

// ---------------------------------------------------------------- driver


int run(const std::vector<std::string>& args, bool allow_replay) {
  CLI::App app{"flarepp: ordinal proximity-penalized BCE for flare prediction"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  bool manifest_only = false;
  std::string manifest_override;
  app.add_flag("--manifest-only", manifest_only, "Resolve configuration and write the manifest without running");
  app.add_option("--manifest-out", manifest_override, "Where to write the run manifest");
  app.fallthrough();

  GenOptions gen;
  auto* g = app.add_subcommand("gen", "Generate a synthetic dataset");
  g->add_option("--counts", gen.counts, "Per-class counts, e.g. FQ=100,C=50,M=20");
  g->add_option("--preset", gen.preset, "Named class mix (reference)");
  g->add_option("--scale", gen.scale, "Divide preset counts by this")->capture_default_str();
  g->add_option("--size", gen.size, "Image side in pixels")->capture_default_str();
  g->add_option("--seed", gen.seed)->capture_default_str();
  g->add_option("--threshold", gen.threshold)->capture_default_str();
  g->add_option("--partitions", gen.partitions, "Partitions regions are drawn from (--counts only)")
      ->capture_default_str();
  g->add_option("--out", gen.out, "Output directory")->required();

  PrepareOptions prep;
  auto* p = app.add_subcommand("prepare", "Relabel, partition and balance a dataset");
  p->add_option("--in", prep.in, "Dataset directory")->required();
  p->add_option("--threshold", prep.threshold)->capture_default_str();
  p->add_flag("--balance", prep.balance, "Augment FL and undersample NF in the train split");
  p->add_option("--rates", prep.rates, "NF undersampling rates, e.g. FQ=0.06,A=0.3");
  p->add_option("--seed", prep.seed)->capture_default_str();
  p->add_option("--out", prep.out, "Output directory")->required();

  TrainOptions tr;
  auto* t = app.add_subcommand("train", "Train a model on a prepared dataset");
  t->add_option("--data", tr.data, "Prepared dataset directory")->required();
  t->add_option("--config", tr.config, "Flat key=value config file; flags override it");
  t->add_option("--loss", tr.loss, "bce or bce-pp");
  t->add_option("--alpha", tr.alpha);
  t->add_option("--lr", tr.lr);
  t->add_option("--weight-decay", tr.weight_decay);
  t->add_option("--batch-size", tr.batch_size);
  t->add_option("--epochs", tr.epochs);
  t->add_option("--seed", tr.seed);
  t->add_option("--model", tr.model, "linear or mlp");
  t->add_option("--hidden", tr.hidden, "Hidden layer sizes, e.g. 16,8");
  t->add_option("--feature-grid", tr.feature_grid);
  t->add_flag("--grid", tr.grid, "Grid search, then retrain the best point");
  t->add_option("--grid-lr", tr.grid_lr);
  t->add_option("--grid-wd", tr.grid_wd);
  t->add_option("--grid-batch", tr.grid_batch);
  t->add_option("--grid-alpha", tr.grid_alpha);
  t->add_option("--workers", tr.workers)->capture_default_str();
  t->add_option("--out", tr.out, "Output directory")->required();

  EvalOptions ev;
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint on one split");
  e->add_option("--checkpoint", ev.checkpoint)->required();
  e->add_option("--data", ev.data, "Prepared dataset directory")->required();
  e->add_option("--split", ev.split, "train, val or test")->capture_default_str();
  e->add_option("--cutoff", ev.cutoff)->capture_default_str();
  e->add_option("--out", ev.out, "Directory for the run manifest")->capture_default_str();

  MetricsOptions me;
  auto* m = app.add_subcommand("metrics", "Skill scores from confusion counts");
  m->add_option("--tp", me.tp)->required();
  m->add_option("--fp", me.fp)->required();
  m->add_option("--tn", me.tn)->required();
  m->add_option("--fn", me.fn)->required();
  m->add_option("--out", me.out, "Directory for the run manifest")->capture_default_str();

  CurvesOptions cu;
  auto* c = app.add_subcommand("curves", "Loss-versus-probability tables");
  c->add_option("--alpha", cu.alphas, "Comma-separated alpha values")->capture_default_str();
  c->add_option("--threshold", cu.threshold)->capture_default_str();
  c->add_option("--grid", cu.grid, "Number of probability points")->capture_default_str();
  c->add_option("--out", cu.out, "Output directory")->required();

  PreprocessOptions pp;
  auto* pr = app.add_subcommand("preprocess", "Run the preprocessing chain on one raster");
  pr->add_option("--in", pp.in)->required();
  pr->add_option("--roi", pp.roi, "Bitmap file; default keeps every pixel");
  pr->add_option("--size", pp.size)->capture_default_str();
  pr->add_option("--out", pp.out)->required();

  BenchOptions be;
  auto* b = app.add_subcommand("bench", "Fixed-seed BCE vs BCE-PP comparison on synthetic data");
  b->add_option("--seed", be.seed)->capture_default_str();
  b->add_option("--scale", be.scale)->capture_default_str();
  b->add_option("--epochs", be.epochs)->capture_default_str();
  b->add_option("--size", be.size)->capture_default_str();
  b->add_option("--feature-grid", be.feature_grid)->capture_default_str();
  b->add_option("--out", be.out, "Output directory")->required();

  std::string replay_path;
  auto* r = app.add_subcommand("replay", "Re-run a command from its manifest");
  r->add_option("--manifest", replay_path)->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kOk : kUsage;
  }

  if (r->parsed()) {
    if (!allow_replay) {
      std::cerr << "error: a manifest cannot replay another replay\n";
      return kUsage;
    }
    try {
      const RunManifest rm = read_manifest(replay_path);
      std::vector<std::string> argv;
      for (const auto& a : rm.argv) {
        if (a != "--manifest-only") argv.push_back(a);
      }
      return run(argv, false);
    } catch (const IoError& err) {
      std::cerr << "error: " << err.what() << "\n";
      return kIo;
    }
  }

  for (const auto& [name, flag] : std::initializer_list<std::pair<const char*, const char*>>{
           {"loss", "--loss"}, {"alpha", "--alpha"}, {"lr", "--lr"}, {"weight-decay", "--weight-decay"},
           {"batch-size", "--batch-size"}, {"epochs", "--epochs"}, {"seed", "--seed"}, {"model", "--model"},
           {"hidden", "--hidden"}, {"feature-grid", "--feature-grid"}}) {
    tr.given[name] = t->count(flag) > 0;
  }

  Context ctx;
  ctx.dry_run = manifest_only;
  ctx.manifest.argv = args;
  ctx.manifest.dry_run = manifest_only;
  ctx.manifest.started = utc_now();
  const CLI::App* sub = app.get_subcommands().front();
  ctx.manifest.command = sub->get_name();
  std::string out_dir = ".";
  if (sub == g) out_dir = gen.out;
  else if (sub == p) out_dir = prep.out;
  else if (sub == t) out_dir = tr.out;
  else if (sub == e) out_dir = ev.out;
  else if (sub == m) out_dir = me.out;
  else if (sub == c) out_dir = cu.out;
  else if (sub == pr) out_dir = fs::path(pp.out).parent_path().empty() ? "." : fs::path(pp.out).parent_path().string();
  else if (sub == b) out_dir = be.out;
  ctx.manifest_path = manifest_override.empty() ? fs::path(out_dir) / "manifest.json" : fs::path(manifest_override);

  int code = kOk;
  try {
    if (sub == g) code = cmd_gen(gen, ctx);
    else if (sub == p) code = cmd_prepare(prep, ctx);
    else if (sub == t) code = cmd_train(tr, ctx);
    else if (sub == e) code = cmd_eval(ev, ctx);
    else if (sub == m) code = cmd_metrics(me, ctx);
    else if (sub == c) code = cmd_curves(cu, ctx);
    else if (sub == pr) code = cmd_preprocess(pp, ctx);
    else if (sub == b) code = cmd_bench(be, ctx);
  } catch (const UsageError& err) {
    ctx.manifest.error = err.what();
    code = kUsage;
  } catch (const TrainingDivergence& err) {
    ctx.manifest.error = err.what();
    code = kDiverged;
  } catch (const UndefinedScoreError& err) {
    ctx.manifest.error = err.what();
    code = kUndefined;
  } catch (const IoError& err) {
    ctx.manifest.error = err.what();
    code = kIo;
  } catch (const fs::filesystem_error& err) {
    ctx.manifest.error = err.what();
    code = kIo;
  } catch (const std::invalid_argument& err) {
    ctx.manifest.error = err.what();
    code = kUsage;
  } catch (const std::exception& err) {
    ctx.manifest.error = err.what();
    code = 1;
  }
  if (!ctx.manifest.error.empty()) std::cerr << "error: " << ctx.manifest.error << "\n";

  ctx.manifest.exit_code = code;
  ctx.manifest.finished = utc_now();
  try {
    write_manifest(ctx.manifest_path, ctx.manifest);
  } catch (const IoError& err) {
    std::cerr << "error: " << err.what() << "\n";
    if (code == kOk) code = kIo;
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  return run(std::vector<std::string>(argv + 1, argv + argc), true);
}
