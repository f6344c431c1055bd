#pragma once
// Small differentiable models over pooled image features.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "flarepp/raster.hpp"

namespace flarepp {

enum class ModelKind { linear, mlp };

std::string_view to_token(ModelKind k) noexcept;
ModelKind parse_model_kind(std::string_view text);

struct ModelSpec {
  ModelKind kind = ModelKind::linear;
  std::vector<std::size_t> hidden_sizes;  // mlp only
  std::size_t input_dim = 0;

  void validate() const;
  std::size_t parameter_count() const;
};

// Parameters are one flat vector. Layer l stores its weight matrix
// (out x in, row-major) followed by its bias vector. Hidden layers use tanh;
// the last layer emits one logit.
class Model {
 public:
  Model() = default;
  Model(ModelSpec spec, std::vector<double> params);

  // Scaled-uniform init: weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases 0.
  static Model initialize(const ModelSpec& spec, std::uint64_t seed);

  const ModelSpec& spec() const noexcept { return spec_; }
  std::span<double> params() noexcept { return params_; }
  std::span<const double> params() const noexcept { return params_; }

  double forward(std::span<const double> x) const;
  // Adds dlogit * d(logit)/d(params) into grad (size parameter_count()).
  void accumulate_gradient(std::span<const double> x, double dlogit, std::span<double> grad) const;

 private:
  ModelSpec spec_;
  std::vector<double> params_;
  std::vector<std::size_t> layer_sizes_;  // input, hidden..., 1
};

// Average-pools |v - 127.5| / 127.5 of a scaled image over a grid x grid
// layout of cells, giving grid*grid features in [0, 1].
struct FeatureExtractor {
  std::size_t grid = 8;

  std::size_t dim() const noexcept { return grid * grid; }
  std::vector<double> operator()(const Raster& image) const;
};

// Per-feature standardization fitted on the training split.
struct FeatureScaler {
  std::vector<double> mean;
  std::vector<double> stddev;

  static FeatureScaler fit(std::span<const std::vector<double>> rows);
  void apply(std::vector<double>& row) const;
};

}  // namespace flarepp
