#include "flarepp/synth.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

#include "flarepp/rng.hpp"

namespace flarepp {

namespace {

struct RegionPlacement {
  std::int64_t region_id;
  UnixTime first_obs;
};

UnixTime draw_first_obs(Rng& rng, const SynthSpec& spec) {
  const int partition = spec.partitions[rng.below(spec.partitions.size())];
  const unsigned month = static_cast<unsigned>(partition) + 4u * static_cast<unsigned>(rng.below(3));
  const int year = spec.first_year + static_cast<int>(rng.below(
                                         static_cast<std::uint64_t>(spec.last_year - spec.first_year + 1)));
  const unsigned day = 1 + static_cast<unsigned>(rng.below(28));
  const unsigned hour = static_cast<unsigned>(rng.below(24));
  return make_utc(year, month, day, hour);
}

void add_blob(Raster& r, double cy, double cx, double sigma, double amplitude) {
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (std::size_t row = 0; row < r.height(); ++row) {
    for (std::size_t col = 0; col < r.width(); ++col) {
      const double dy = static_cast<double>(row) - cy;
      const double dx = static_cast<double>(col) - cx;
      r.at(row, col) += amplitude * std::exp(-(dx * dx + dy * dy) * inv);
    }
  }
}

void mark_disc(Bitmap& b, double cy, double cx, double radius) {
  for (std::size_t row = 0; row < b.height(); ++row) {
    for (std::size_t col = 0; col < b.width(); ++col) {
      const double dy = static_cast<double>(row) - cy;
      const double dx = static_cast<double>(col) - cx;
      if (dx * dx + dy * dy <= radius * radius) b.set(row, col, true);
    }
  }
}

RawObservation make_observation(FlareClass c, std::size_t raw_size, Rng& rng) {
  const double o = ordinal_index(c);
  const double n = static_cast<double>(raw_size);
  RawObservation obs;
  obs.subclass = c;
  obs.flux = Raster(raw_size, raw_size);
  obs.roi = Bitmap(raw_size, raw_size);

  for (double& v : obs.flux.values()) v = rng.normal(0.0, 10.0);

  const double amplitude = 45.0 * std::pow(1.3, o) * std::exp(0.12 * rng.normal());
  const double sigma = n * (0.06 + 0.01 * o) * std::exp(0.08 * rng.normal());
  const double trailing_ratio = std::min(1.0, (0.4 + 0.1 * o) * std::exp(0.1 * rng.normal()));
  const double cy = n / 2.0 + rng.uniform(-n / 4.0, n / 4.0);
  const double cx = n / 2.0 + rng.uniform(-n / 4.0, n / 4.0);
  const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double sep = 2.5 * sigma;
  const double ny = cy + sep * std::sin(angle);
  const double nx = cx + sep * std::cos(angle);

  add_blob(obs.flux, cy, cx, sigma, amplitude);
  add_blob(obs.flux, ny, nx, sigma, -amplitude * trailing_ratio);
  mark_disc(obs.roi, cy, cx, 3.0 * sigma);
  mark_disc(obs.roi, ny, nx, 3.0 * sigma);
  return obs;
}

}  // namespace

std::vector<RawObservation> synth_raw(const SynthSpec& spec, std::uint64_t seed) {
  if (spec.image_size == 0) throw std::invalid_argument("image_size must be >= 1");
  if (spec.partitions.empty()) throw std::invalid_argument("at least one partition required");
  for (int p : spec.partitions) {
    if (p < 1 || p > 4) throw std::invalid_argument("partitions must be 1..4");
  }
  if (spec.samples_per_region == 0) throw std::invalid_argument("samples_per_region must be >= 1");
  const std::size_t raw_size = spec.image_size + spec.image_size / 4;

  std::vector<RawObservation> out;
  std::uint64_t sample_index = 0;
  std::int64_t region_id = spec.first_region_id;
  for (FlareClass c : kAllClasses) {
    const std::size_t n = spec.counts[static_cast<std::size_t>(c)];
    UnixTime region_start = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t slot = i % spec.samples_per_region;
      if (slot == 0) {
        if (i > 0) ++region_id;
        Rng region_rng(derive_seed(seed, 0x5245474E00000000ULL ^ static_cast<std::uint64_t>(region_id)));
        region_start = draw_first_obs(region_rng, spec);
      }
      Rng rng(derive_seed(seed, sample_index));
      RawObservation obs = make_observation(c, raw_size, rng);
      char id[64];
      std::snprintf(id, sizeof id, "%s%06llu", spec.id_prefix.c_str(),
                    static_cast<unsigned long long>(sample_index));
      obs.sample_id = id;
      obs.region_id = region_id;
      obs.timestamp = region_start + static_cast<UnixTime>(slot) * kHour;
      out.push_back(std::move(obs));
      ++sample_index;
    }
    if (n > 0) ++region_id;
  }
  return out;
}

std::vector<LabeledSample> synth_dataset(const SynthSpec& spec, std::uint64_t seed) {
  std::vector<LabeledSample> out;
  for (auto& raw : synth_raw(spec, seed)) {
    LabeledSample s;
    s.sample_id = std::move(raw.sample_id);
    s.region_id = raw.region_id;
    s.timestamp = raw.timestamp;
    s.subclass = raw.subclass;
    s.label = binarize(raw.subclass, spec.threshold);
    s.image = preprocess(raw.flux, raw.roi, spec.image_size);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<LabeledSample> synth_dataset(const ClassCounts& counts, std::size_t image_size,
                                         std::uint64_t seed) {
  SynthSpec spec;
  spec.counts = counts;
  spec.image_size = image_size;
  return synth_dataset(spec, seed);
}

SplitCounts reference_counts() {
  SplitCounts c;
  c.train = {182880, 19, 12130, 18060, 3168, 188};
  c.validation = {92716, 44, 6210, 8191, 1384, 154};
  c.test = {95770, 0, 4472, 10460, 1853, 320};
  return c;
}

SplitCounts scaled_counts(const SplitCounts& c, double scale) {
  if (!(scale > 0.0)) throw std::invalid_argument("scale must be > 0");
  const auto apply = [scale](const ClassCounts& in) {
    ClassCounts out{};
    for (std::size_t i = 0; i < in.size(); ++i) {
      out[i] = static_cast<std::size_t>(std::llround(static_cast<double>(in[i]) / scale));
    }
    return out;
  };
  return {apply(c.train), apply(c.validation), apply(c.test)};
}

SynthSplits synth_splits(const SplitCounts& counts, std::size_t image_size, std::uint64_t seed,
                         const ThresholdSpec& t) {
  const auto make = [&](const ClassCounts& cc, std::vector<int> partitions, std::int64_t region0,
                        const char* prefix, std::uint64_t stream) {
    SynthSpec spec;
    spec.counts = cc;
    spec.image_size = image_size;
    spec.threshold = t;
    spec.partitions = std::move(partitions);
    spec.first_region_id = region0;
    spec.id_prefix = prefix;
    return synth_dataset(spec, derive_seed(seed, stream));
  };
  SynthSplits s;
  s.train = make(counts.train, {1, 2}, 1, "tr", 1);
  s.validation = make(counts.validation, {3}, 1'000'000, "va", 2);
  s.test = make(counts.test, {4}, 2'000'000, "te", 3);
  return s;
}

}  // namespace flarepp
