#include "flarepp/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <thread>

#include "flarepp/rng.hpp"

namespace flarepp {

std::string_view to_token(LossKind k) noexcept { return k == LossKind::bce ? "bce" : "bce-pp"; }

LossKind parse_loss_kind(std::string_view text) {
  if (text == "bce") return LossKind::bce;
  if (text == "bce-pp" || text == "bce_pp") return LossKind::bce_pp;
  throw std::invalid_argument("unknown loss '" + std::string(text) + "' (expected bce or bce-pp)");
}

TrainConfig TrainConfig::defaults_for(LossKind kind) {
  TrainConfig c;
  c.loss_kind = kind;
  if (kind == LossKind::bce) {
    c.initial_lr = 0.01;
    c.weight_decay = 0.01;
  } else {
    c.initial_lr = 0.001;
    c.weight_decay = 0.001;
    c.alpha = 0.75;
  }
  c.batch_size = 64;
  c.epochs = 50;
  return c;
}

void TrainConfig::validate() const {
  if (!(initial_lr >= 0.0) || !std::isfinite(initial_lr)) {
    throw std::invalid_argument("initial_lr must be finite and >= 0");
  }
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) {
    throw std::invalid_argument("weight_decay must be finite and >= 0");
  }
  if (batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
  if (loss_kind == LossKind::bce_pp) loss_config().validate();
}

LossConfig TrainConfig::loss_config() const {
  LossConfig lc;
  lc.alpha = alpha;
  lc.weights = proximity_weights(threshold);
  lc.reduction = Reduction::mean;
  return lc;
}

std::string TrainConfig::canonical() const {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "loss=%s;lr=%.17g;weight_decay=%.17g;batch_size=%zu;alpha=%.17g;epochs=%zu;seed=%llu;"
                "threshold=%s",
                std::string(to_token(loss_kind)).c_str(), initial_lr, weight_decay, batch_size, alpha,
                epochs, static_cast<unsigned long long>(seed), threshold.to_string().c_str());
  return buf;
}

std::uint64_t TrainConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

TrainConfig parse_canonical(const std::string& text) {
  TrainConfig c;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw IoError("bad config entry '" + item + "'");
    const std::string key = item.substr(0, eq), val = item.substr(eq + 1);
    if (key == "loss") c.loss_kind = parse_loss_kind(val);
    else if (key == "lr") c.initial_lr = std::stod(val);
    else if (key == "weight_decay") c.weight_decay = std::stod(val);
    else if (key == "batch_size") c.batch_size = std::stoull(val);
    else if (key == "alpha") c.alpha = std::stod(val);
    else if (key == "epochs") c.epochs = std::stoull(val);
    else if (key == "seed") c.seed = std::stoull(val);
    else if (key == "threshold") c.threshold = ThresholdSpec::parse(val);
    else throw IoError("unknown config key '" + key + "'");
  }
  return c;
}

LossBatch make_batch(const Model& model, const FeatureSplit& split, std::span<const std::size_t> idx,
                     const ThresholdSpec& t) {
  std::vector<double> logits;
  std::vector<BinaryLabel> targets;
  std::vector<FlareClass> classes;
  logits.reserve(idx.size());
  targets.reserve(idx.size());
  classes.reserve(idx.size());
  for (std::size_t i : idx) {
    logits.push_back(model.forward(split.features[i]));
    targets.push_back(split.targets[i]);
    classes.push_back(split.subclasses[i]);
  }
  return LossBatch(std::move(logits), std::move(targets), std::move(classes), t);
}

std::vector<double> loss_terms(const LossBatch& batch, const TrainConfig& cfg) {
  return cfg.loss_kind == LossKind::bce ? bce_terms(batch) : bce_pp_terms(batch, cfg.loss_config());
}

std::vector<double> logit_grads(const LossBatch& batch, const TrainConfig& cfg) {
  return cfg.loss_kind == LossKind::bce ? bce_grad(batch, Reduction::mean)
                                        : bce_pp_grad(batch, cfg.loss_config());
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

}  // namespace

FeatureSplit extract_split(std::span<const LabeledSample> samples, const FeatureExtractor& fx) {
  FeatureSplit out;
  out.features.reserve(samples.size());
  for (const auto& s : samples) {
    out.features.push_back(fx(s.image));
    out.targets.push_back(s.label);
    out.subclasses.push_back(s.subclass);
  }
  return out;
}

void standardize(FeatureSplit& split, const FeatureScaler& scaler) {
  for (auto& row : split.features) scaler.apply(row);
}

void sgd_step(std::span<double> params, std::span<const double> grads, double lr,
              double weight_decay) {
  if (params.size() != grads.size()) throw std::domain_error("params and grads differ in size");
  for (std::size_t i = 0; i < params.size(); ++i) {
    params[i] -= lr * (grads[i] + weight_decay * params[i]);
  }
}

SchedulerState SchedulerState::start(double initial_lr) {
  SchedulerState s;
  s.initial_lr = initial_lr;
  s.current_lr = initial_lr;
  return s;
}

SchedulerState scheduler_step(SchedulerState state, double val_loss) {
  if (!std::isfinite(val_loss)) throw std::domain_error("validation loss must be finite");
  if (val_loss < state.best_val_loss) {
    state.best_val_loss = val_loss;
    state.epochs_since_improvement = 0;
    return state;
  }
  if (++state.epochs_since_improvement >= state.patience) {
    ++state.reductions;
    state.current_lr = state.initial_lr * std::pow(state.factor, static_cast<double>(state.reductions));
    state.epochs_since_improvement = 0;
  }
  return state;
}

std::string epoch_log_csv(std::span<const EpochLog> log) {
  std::string out = "epoch,train_loss,val_loss,val_tss,val_hss,val_css,lr\n";
  char buf[256];
  for (const auto& e : log) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", e.epoch, e.train_loss,
                  e.val_loss, e.val_tss, e.val_hss, e.val_css, e.lr);
    out += buf;
  }
  return out;
}

double split_loss(const Model& model, const FeatureSplit& split, const TrainConfig& cfg) {
  const auto idx = all_indices(split.size());
  const LossBatch batch = make_batch(model, split, idx, cfg.threshold);
  return reduce(loss_terms(batch, cfg), Reduction::mean);
}

std::vector<double> loss_gradient(const Model& model, const FeatureSplit& split,
                                  const TrainConfig& cfg) {
  const auto idx = all_indices(split.size());
  const LossBatch batch = make_batch(model, split, idx, cfg.threshold);
  const auto dz = logit_grads(batch, cfg);
  std::vector<double> grad(model.params().size(), 0.0);
  for (std::size_t k = 0; k < idx.size(); ++k) model.accumulate_gradient(split.features[idx[k]], dz[k], grad);
  return grad;
}

std::vector<double> predict_proba(const Model& model, const FeatureSplit& split) {
  std::vector<double> p(split.size());
  for (std::size_t i = 0; i < split.size(); ++i) p[i] = sigmoid(model.forward(split.features[i]));
  return p;
}

Evaluation evaluate(const Model& model, const FeatureSplit& split, double cutoff) {
  if (split.empty()) throw std::invalid_argument("cannot evaluate on an empty split");
  Evaluation ev;
  const auto p = predict_proba(model, split);
  ev.cm = confusion_from_predictions(split.targets, p, cutoff);
  ev.scores = skill_scores(ev.cm);
  return ev;
}

TrainResult train(const TrainData& data, const ModelSpec& spec, const TrainConfig& cfg) {
  cfg.validate();
  if (data.train.empty() || data.validation.empty()) {
    throw std::invalid_argument("train and validation splits must be nonempty");
  }
  TrainResult result;
  result.model = Model::initialize(spec, derive_seed(cfg.seed, 0x494E4954ULL));
  Model& model = result.model;
  SchedulerState sched = SchedulerState::start(cfg.initial_lr);
  std::vector<std::size_t> order = all_indices(data.train.size());
  std::vector<double> grad(model.params().size());
  double best_css = -std::numeric_limits<double>::infinity();

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(cfg.seed, 0x53480000ULL + epoch));
    shuffle_rng.shuffle(order);
    double loss_total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::span<const std::size_t> idx(order.data() + start,
                                             std::min(cfg.batch_size, order.size() - start));
      const LossBatch batch = make_batch(model, data.train, idx, cfg.threshold);
      for (double t : loss_terms(batch, cfg)) loss_total += t;
      const auto dz = logit_grads(batch, cfg);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t k = 0; k < idx.size(); ++k) {
        model.accumulate_gradient(data.train.features[idx[k]], dz[k], grad);
      }
      sgd_step(model.params(), grad, sched.current_lr, cfg.weight_decay);
    }

    EpochLog log;
    log.epoch = epoch;
    log.lr = sched.current_lr;
    log.train_loss = loss_total / static_cast<double>(order.size());
    log.val_loss = split_loss(model, data.validation, cfg);
    if (!std::isfinite(log.train_loss) || !std::isfinite(log.val_loss)) {
      throw TrainingDivergence(epoch, "training diverged at epoch " + std::to_string(epoch) +
                                          " (non-finite loss)");
    }
    try {
      const Evaluation ev = evaluate(model, data.validation);
      log.val_tss = ev.scores.tss;
      log.val_hss = ev.scores.hss;
      log.val_css = ev.scores.css;
    } catch (const UndefinedScoreError&) {
      log.val_tss = log.val_hss = log.val_css = std::numeric_limits<double>::quiet_NaN();
    }
    if (log.val_css > best_css) {
      best_css = log.val_css;
      result.best_css_epoch = epoch;
    }
    result.history.push_back(log);
    sched = scheduler_step(sched, log.val_loss);
  }
  return result;
}

GridSpace GridSpace::reference() {
  GridSpace g;
  g.learning_rates = {0.00001, 0.0001, 0.001, 0.01};
  g.weight_decays = {0.00001, 0.0001, 0.001, 0.01};
  g.batch_sizes = {48, 64, 80};
  g.alphas = {0.25, 0.5, 0.75, 1.0};
  return g;
}

std::vector<TrainConfig> GridSpace::expand(const TrainConfig& base) const {
  const auto or_base = [](const auto& axis, auto fallback) {
    using T = std::decay_t<decltype(fallback)>;
    return axis.empty() ? std::vector<T>{fallback} : std::vector<T>(axis.begin(), axis.end());
  };
  const auto lrs = or_base(learning_rates, base.initial_lr);
  const auto wds = or_base(weight_decays, base.weight_decay);
  const auto bss = or_base(batch_sizes, base.batch_size);
  const auto als = base.loss_kind == LossKind::bce ? std::vector<double>{base.alpha}
                                                   : or_base(alphas, base.alpha);
  std::vector<TrainConfig> out;
  for (double lr : lrs)
    for (double wd : wds)
      for (std::size_t bs : bss)
        for (double a : als) {
          TrainConfig c = base;
          c.initial_lr = lr;
          c.weight_decay = wd;
          c.batch_size = bs;
          c.alpha = a;
          out.push_back(c);
        }
  return out;
}

std::vector<LeaderboardEntry> grid_search(const GridSpace& space, const ModelSpec& spec,
                                          const TrainData& data, const TrainConfig& base,
                                          std::size_t workers) {
  const auto configs = space.expand(base);
  std::vector<LeaderboardEntry> board(configs.size());
  std::vector<std::exception_ptr> errors(configs.size());
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      try {
        board[i].grid_index = i;
        board[i].config = configs[i];
        const TrainResult r = train(data, spec, configs[i]);
        board[i].validation = evaluate(r.model, data.validation);
      } catch (const TrainingDivergence&) {
        board[i].validation.scores = {-1.0, -1.0, -1.0};
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(configs.size(), 1));
  std::vector<std::jthread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  pool.clear();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::sort(board.begin(), board.end(), [](const LeaderboardEntry& a, const LeaderboardEntry& b) {
    if (ranks_before(a.validation.scores, b.validation.scores)) return true;
    if (ranks_before(b.validation.scores, a.validation.scores)) return false;
    return a.grid_index < b.grid_index;
  });
  return board;
}

std::string leaderboard_csv(std::span<const LeaderboardEntry> board) {
  std::string out = "rank,grid_index,loss,lr,weight_decay,batch_size,alpha,tp,fp,tn,fn,tss,hss,css\n";
  char buf[512];
  for (std::size_t r = 0; r < board.size(); ++r) {
    const auto& e = board[r];
    std::snprintf(buf, sizeof buf, "%zu,%zu,%s,%.17g,%.17g,%zu,%.17g,%llu,%llu,%llu,%llu,%.6f,%.6f,%.6f\n",
                  r + 1, e.grid_index, std::string(to_token(e.config.loss_kind)).c_str(),
                  e.config.initial_lr, e.config.weight_decay, e.config.batch_size, e.config.alpha,
                  static_cast<unsigned long long>(e.validation.cm.tp),
                  static_cast<unsigned long long>(e.validation.cm.fp),
                  static_cast<unsigned long long>(e.validation.cm.tn),
                  static_cast<unsigned long long>(e.validation.cm.fn), e.validation.scores.tss,
                  e.validation.scores.hss, e.validation.scores.css);
    out += buf;
  }
  return out;
}

namespace {

std::string join(std::span<const double> v) {
  std::string out;
  char buf[32];
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%s%.17g", i ? " " : "", v[i]);
    out += buf;
  }
  return out;
}

std::vector<double> split_doubles(const std::string& s) {
  std::vector<double> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(std::stod(tok));
  return out;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  const ModelSpec& spec = ck.model.spec();
  out << "FLAREPP_CHECKPOINT v1\n";
  out << "model=" << to_token(spec.kind) << '\n';
  out << "hidden=";
  for (std::size_t i = 0; i < spec.hidden_sizes.size(); ++i) out << (i ? "," : "") << spec.hidden_sizes[i];
  out << '\n';
  out << "input_dim=" << spec.input_dim << '\n';
  out << "feature_grid=" << ck.feature_grid << '\n';
  out << "config=" << ck.config.canonical() << '\n';
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(ck.config.hash()));
  out << "config_hash=" << hash << '\n';
  out << "scaler_mean=" << join(ck.scaler.mean) << '\n';
  out << "scaler_std=" << join(ck.scaler.stddev) << '\n';
  out << "params=" << join(ck.model.params()) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::string line;
  if (!std::getline(in, line) || line != "FLAREPP_CHECKPOINT v1") {
    throw IoError(path.string() + ": not a v1 checkpoint");
  }
  std::map<std::string, std::string> kv;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  for (const char* key : {"model", "hidden", "input_dim", "feature_grid", "config", "config_hash",
                          "scaler_mean", "scaler_std", "params"}) {
    if (!kv.count(key)) throw IoError(path.string() + ": missing '" + key + "'");
  }
  try {
    ModelSpec spec;
    spec.kind = parse_model_kind(kv["model"]);
    std::stringstream hs(kv["hidden"]);
    std::string tok;
    while (std::getline(hs, tok, ',')) {
      if (!tok.empty()) spec.hidden_sizes.push_back(std::stoull(tok));
    }
    spec.input_dim = std::stoull(kv["input_dim"]);
    Checkpoint ck;
    ck.config = parse_canonical(kv["config"]);
    char hash[32];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(ck.config.hash()));
    if (kv["config_hash"] != hash) throw IoError(path.string() + ": config hash mismatch");
    ck.feature_grid = std::stoull(kv["feature_grid"]);
    ck.scaler.mean = split_doubles(kv["scaler_mean"]);
    ck.scaler.stddev = split_doubles(kv["scaler_std"]);
    ck.model = Model(spec, split_doubles(kv["params"]));
    return ck;
  } catch (const IoError&) {
    throw;
  } catch (const std::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace flarepp
