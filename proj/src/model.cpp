#include "flarepp/model.hpp"

#include <cmath>
#include <stdexcept>

#include "flarepp/rng.hpp"

namespace flarepp {

std::string_view to_token(ModelKind k) noexcept { return k == ModelKind::linear ? "linear" : "mlp"; }

ModelKind parse_model_kind(std::string_view text) {
  if (text == "linear") return ModelKind::linear;
  if (text == "mlp") return ModelKind::mlp;
  throw std::invalid_argument("unknown model kind '" + std::string(text) + "'");
}

void ModelSpec::validate() const {
  if (input_dim == 0) throw std::invalid_argument("model input_dim must be >= 1");
  if (kind == ModelKind::linear && !hidden_sizes.empty()) {
    throw std::invalid_argument("linear model takes no hidden layers");
  }
  if (kind == ModelKind::mlp) {
    if (hidden_sizes.empty()) throw std::invalid_argument("mlp needs at least one hidden layer");
    for (std::size_t h : hidden_sizes) {
      if (h == 0) throw std::invalid_argument("mlp hidden sizes must be >= 1");
    }
  }
}

namespace {

std::vector<std::size_t> layer_sizes_of(const ModelSpec& spec) {
  std::vector<std::size_t> sizes{spec.input_dim};
  sizes.insert(sizes.end(), spec.hidden_sizes.begin(), spec.hidden_sizes.end());
  sizes.push_back(1);
  return sizes;
}

}  // namespace

std::size_t ModelSpec::parameter_count() const {
  const auto sizes = layer_sizes_of(*this);
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) n += sizes[l + 1] * sizes[l] + sizes[l + 1];
  return n;
}

Model::Model(ModelSpec spec, std::vector<double> params)
    : spec_(std::move(spec)), params_(std::move(params)) {
  spec_.validate();
  if (params_.size() != spec_.parameter_count()) {
    throw std::invalid_argument("parameter vector has " + std::to_string(params_.size()) +
                                " entries, model needs " + std::to_string(spec_.parameter_count()));
  }
  layer_sizes_ = layer_sizes_of(spec_);
}

Model Model::initialize(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  const auto sizes = layer_sizes_of(spec);
  std::vector<double> params;
  params.reserve(spec.parameter_count());
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(sizes[l]));
    for (std::size_t i = 0; i < sizes[l + 1] * sizes[l]; ++i) params.push_back(rng.uniform(-bound, bound));
    params.insert(params.end(), sizes[l + 1], 0.0);
  }
  return Model(spec, std::move(params));
}

double Model::forward(std::span<const double> x) const {
  if (x.size() != spec_.input_dim) throw std::domain_error("feature vector has wrong dimension");
  std::vector<double> act(x.begin(), x.end());
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes_.size(); ++l) {
    const std::size_t in = layer_sizes_[l], out = layer_sizes_[l + 1];
    const double* w = params_.data() + offset;
    const double* b = w + out * in;
    std::vector<double> next(out);
    for (std::size_t j = 0; j < out; ++j) {
      double s = b[j];
      for (std::size_t i = 0; i < in; ++i) s += w[j * in + i] * act[i];
      next[j] = (l + 2 < layer_sizes_.size()) ? std::tanh(s) : s;
    }
    act = std::move(next);
    offset += out * in + out;
  }
  return act[0];
}

void Model::accumulate_gradient(std::span<const double> x, double dlogit,
                                std::span<double> grad) const {
  if (x.size() != spec_.input_dim) throw std::domain_error("feature vector has wrong dimension");
  if (grad.size() != params_.size()) throw std::domain_error("gradient buffer has wrong size");
  const std::size_t num_layers = layer_sizes_.size() - 1;

  // Forward pass keeping every layer's activations.
  std::vector<std::vector<double>> acts{std::vector<double>(x.begin(), x.end())};
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (std::size_t l = 0; l < num_layers; ++l) {
    const std::size_t in = layer_sizes_[l], out = layer_sizes_[l + 1];
    const double* w = params_.data() + offset;
    const double* b = w + out * in;
    std::vector<double> next(out);
    for (std::size_t j = 0; j < out; ++j) {
      double s = b[j];
      for (std::size_t i = 0; i < in; ++i) s += w[j * in + i] * acts[l][i];
      next[j] = (l + 1 < num_layers) ? std::tanh(s) : s;
    }
    acts.push_back(std::move(next));
    offsets.push_back(offset);
    offset += out * in + out;
  }

  // delta = dL/d(pre-activation) of the current layer.
  std::vector<double> delta{dlogit};
  for (std::size_t l = num_layers; l-- > 0;) {
    const std::size_t in = layer_sizes_[l], out = layer_sizes_[l + 1];
    const double* w = params_.data() + offsets[l];
    double* gw = grad.data() + offsets[l];
    double* gb = gw + out * in;
    for (std::size_t j = 0; j < out; ++j) {
      for (std::size_t i = 0; i < in; ++i) gw[j * in + i] += delta[j] * acts[l][i];
      gb[j] += delta[j];
    }
    if (l == 0) break;
    std::vector<double> prev(in, 0.0);
    for (std::size_t i = 0; i < in; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < out; ++j) s += w[j * in + i] * delta[j];
      const double a = acts[l][i];
      prev[i] = s * (1.0 - a * a);
    }
    delta = std::move(prev);
  }
}

std::vector<double> FeatureExtractor::operator()(const Raster& image) const {
  if (grid == 0) throw std::invalid_argument("feature grid must be >= 1");
  if (image.width() < grid || image.height() < grid) {
    throw std::domain_error("image smaller than feature grid");
  }
  std::vector<double> sums(grid * grid, 0.0);
  std::vector<std::size_t> counts(grid * grid, 0);
  for (std::size_t row = 0; row < image.height(); ++row) {
    const std::size_t gr = row * grid / image.height();
    for (std::size_t col = 0; col < image.width(); ++col) {
      const std::size_t gc = col * grid / image.width();
      sums[gr * grid + gc] += std::abs(image.at(row, col) - 127.5) / 127.5;
      ++counts[gr * grid + gc];
    }
  }
  for (std::size_t i = 0; i < sums.size(); ++i) sums[i] /= static_cast<double>(counts[i]);
  return sums;
}

FeatureScaler FeatureScaler::fit(std::span<const std::vector<double>> rows) {
  if (rows.empty()) throw std::invalid_argument("cannot fit scaler on zero rows");
  const std::size_t d = rows.front().size();
  FeatureScaler s{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  for (const auto& r : rows) {
    if (r.size() != d) throw std::invalid_argument("ragged feature rows");
    for (std::size_t j = 0; j < d; ++j) s.mean[j] += r[j];
  }
  const double n = static_cast<double>(rows.size());
  for (double& m : s.mean) m /= n;
  for (const auto& r : rows) {
    for (std::size_t j = 0; j < d; ++j) s.stddev[j] += (r[j] - s.mean[j]) * (r[j] - s.mean[j]);
  }
  for (double& v : s.stddev) {
    v = std::sqrt(v / n);
    if (!(v > 1e-12)) v = 1.0;
  }
  return s;
}

void FeatureScaler::apply(std::vector<double>& row) const {
  if (row.size() != mean.size()) throw std::domain_error("feature row has wrong dimension");
  for (std::size_t j = 0; j < row.size(); ++j) row[j] = (row[j] - mean[j]) / stddev[j];
}

}  // namespace flarepp
