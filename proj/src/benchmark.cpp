#include "flarepp/benchmark.hpp"

#include <cstdio>

#include "flarepp/rng.hpp"

namespace flarepp {

PreparedBenchmark prepare_benchmark(const BenchmarkOptions& opt) {
  PreparedBenchmark p;
  p.original_counts = scaled_counts(reference_counts(), opt.scale);
  const SynthSplits splits = synth_splits(p.original_counts, opt.image_size, opt.seed);
  const auto balanced =
      balance_training(splits.train, default_undersample_rates(), derive_seed(opt.seed, 0xBA1ULL));
  p.balanced_train = count_classes(balanced);

  const FeatureExtractor fx{opt.feature_grid};
  p.data.train = extract_split(balanced, fx);
  p.data.validation = extract_split(splits.validation, fx);
  p.test = extract_split(splits.test, fx);
  p.scaler = FeatureScaler::fit(p.data.train.features);
  standardize(p.data.train, p.scaler);
  standardize(p.data.validation, p.scaler);
  standardize(p.test, p.scaler);
  return p;
}

namespace {

BenchmarkRun run_one(const PreparedBenchmark& p, const ModelSpec& spec, LossKind kind,
                     const BenchmarkOptions& opt) {
  BenchmarkRun run;
  run.config = TrainConfig::defaults_for(kind);
  run.config.epochs = opt.epochs;
  run.config.seed = opt.seed;
  const TrainResult r = train(p.data, spec, run.config);
  run.history = r.history;
  run.validation = evaluate(r.model, p.data.validation);
  run.test = evaluate(r.model, p.test);
  return run;
}

void append_run(std::string& out, const char* name, const BenchmarkRun& run) {
  char buf[512];
  const auto& h = run.history;
  std::snprintf(buf, sizeof buf,
                "[%s] %s\n  train_loss epoch1=%.6f final=%.6f ratio=%.4f\n"
                "  val  tp=%llu fp=%llu tn=%llu fn=%llu tss=%.4f hss=%.4f css=%.4f\n"
                "  test tp=%llu fp=%llu tn=%llu fn=%llu tss=%.4f hss=%.4f css=%.4f\n",
                name, run.config.canonical().c_str(), h.front().train_loss, h.back().train_loss,
                h.back().train_loss / h.front().train_loss,
                static_cast<unsigned long long>(run.validation.cm.tp),
                static_cast<unsigned long long>(run.validation.cm.fp),
                static_cast<unsigned long long>(run.validation.cm.tn),
                static_cast<unsigned long long>(run.validation.cm.fn), run.validation.scores.tss,
                run.validation.scores.hss, run.validation.scores.css,
                static_cast<unsigned long long>(run.test.cm.tp),
                static_cast<unsigned long long>(run.test.cm.fp),
                static_cast<unsigned long long>(run.test.cm.tn),
                static_cast<unsigned long long>(run.test.cm.fn), run.test.scores.tss,
                run.test.scores.hss, run.test.scores.css);
  out += buf;
}

}  // namespace

BenchmarkReport run_benchmark(const BenchmarkOptions& opt) {
  const PreparedBenchmark p = prepare_benchmark(opt);
  ModelSpec spec = opt.model;
  spec.input_dim = FeatureExtractor{opt.feature_grid}.dim();

  BenchmarkReport r;
  r.original_counts = p.original_counts;
  r.balanced_train = p.balanced_train;
  r.bce = run_one(p, spec, LossKind::bce, opt);
  r.bce_pp = run_one(p, spec, LossKind::bce_pp, opt);
  return r;
}

std::string format_benchmark(const BenchmarkReport& r) {
  std::string out = "balanced train:";
  for (FlareClass c : kAllClasses) {
    out += " " + std::string(to_token(c)) + "=" +
           std::to_string(r.balanced_train[static_cast<std::size_t>(c)]);
  }
  out += "\n";
  append_run(out, "BCE", r.bce);
  append_run(out, "BCE-PP", r.bce_pp);
  return out;
}

}  // namespace flarepp
