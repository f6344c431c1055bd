#include "flarepp/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "flarepp/rng.hpp"

namespace flarepp {

namespace {

template <typename F>
Raster map_values(const Raster& r, F&& f) {
  Raster out = r;
  for (double& v : out.values()) v = f(v);
  return out;
}

std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Raster flip(const Raster& r, bool vertical) {
  Raster out(r.width(), r.height());
  for (std::size_t row = 0; row < r.height(); ++row) {
    for (std::size_t col = 0; col < r.width(); ++col) {
      const std::size_t src_row = vertical ? r.height() - 1 - row : row;
      const std::size_t src_col = vertical ? col : r.width() - 1 - col;
      out.at(row, col) = r.at(src_row, src_col);
    }
  }
  return out;
}

Raster gaussian_blur3(const Raster& r) {
  std::array<double, 3> k1{std::exp(-0.5), 1.0, std::exp(-0.5)};
  const double norm = k1[0] + k1[1] + k1[2];
  for (double& k : k1) k /= norm;
  const auto clamp_idx = [](std::ptrdiff_t i, std::size_t n) {
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(n) - 1));
  };
  // The 2-D kernel is separable: rows then columns.
  Raster tmp(r.width(), r.height());
  for (std::size_t row = 0; row < r.height(); ++row) {
    for (std::size_t col = 0; col < r.width(); ++col) {
      double s = 0.0;
      for (int d = -1; d <= 1; ++d) {
        s += k1[d + 1] * r.at(row, clamp_idx(static_cast<std::ptrdiff_t>(col) + d, r.width()));
      }
      tmp.at(row, col) = s;
    }
  }
  Raster out(r.width(), r.height());
  for (std::size_t row = 0; row < r.height(); ++row) {
    for (std::size_t col = 0; col < r.width(); ++col) {
      double s = 0.0;
      for (int d = -1; d <= 1; ++d) {
        s += k1[d + 1] * tmp.at(clamp_idx(static_cast<std::ptrdiff_t>(row) + d, r.height()), col);
      }
      out.at(row, col) = std::clamp(s, 0.0, kScaledMax);
    }
  }
  return out;
}

}  // namespace

Raster clip_flux(const Raster& r) {
  return map_values(r, [](double v) { return std::clamp(v, -kClipGauss, kClipGauss); });
}

Raster zero_noise(const Raster& r) {
  return map_values(r, [](double v) { return std::abs(v) <= kNoiseFloorGauss ? 0.0 : v; });
}

Raster apply_bitmap(const Raster& r, const Bitmap& b) {
  if (r.width() != b.width() || r.height() != b.height()) {
    throw std::domain_error("bitmap shape does not match raster");
  }
  Raster out = r;
  auto vals = out.values();
  const auto mask = b.mask();
  for (std::size_t i = 0; i < vals.size(); ++i) {
    if (!mask[i]) vals[i] = 0.0;
  }
  return out;
}

Raster fit_window(const Raster& r, std::size_t size) {
  if (size == 0) throw std::invalid_argument("window size must be >= 1");
  const std::size_t w = std::max(r.width(), size);
  const std::size_t h = std::max(r.height(), size);
  Raster padded(w, h);
  for (std::size_t row = 0; row < r.height(); ++row) {
    for (std::size_t col = 0; col < r.width(); ++col) padded.at(row, col) = r.at(row, col);
  }
  if (w == size && h == size) return padded;
  return crop(padded, max_flux_window(padded, size, size), size, size);
}

Raster scale_0_255(const Raster& r) {
  return map_values(r, [](double v) {
    if (!(v >= -kClipGauss && v <= kClipGauss)) {
      throw std::domain_error("scale_0_255 expects values clipped to [-256, 256]");
    }
    return (v + kClipGauss) * kScaledMax / (2.0 * kClipGauss);
  });
}

Raster preprocess(const Raster& raw, const Bitmap& roi, std::size_t size) {
  return scale_0_255(fit_window(apply_bitmap(zero_noise(clip_flux(raw)), roi), size));
}

void validate_sample(const LabeledSample& s, const ThresholdSpec& t, std::size_t size) {
  if (s.image.width() != size || s.image.height() != size) {
    throw std::domain_error("sample " + s.sample_id + ": image must be " + std::to_string(size) +
                            "x" + std::to_string(size));
  }
  for (double v : s.image.values()) {
    if (!(v >= 0.0 && v <= kScaledMax)) {
      throw std::domain_error("sample " + s.sample_id + ": pixel outside [0, 255]");
    }
  }
  if (binarize(s.subclass, t) != s.label) {
    throw std::domain_error("sample " + s.sample_id + ": label inconsistent with subclass");
  }
}

std::string_view to_token(AugmentKind k) noexcept {
  switch (k) {
    case AugmentKind::vflip: return "vflip";
    case AugmentKind::hflip: return "hflip";
    case AugmentKind::noise: return "noise";
    case AugmentKind::blur: return "blur";
    case AugmentKind::polarity: return "polarity";
  }
  return "?";
}

LabeledSample augment(const LabeledSample& s, AugmentKind kind, std::uint64_t seed) {
  if (s.label != BinaryLabel::FL) {
    throw std::domain_error("augmentation is applied to FL training samples only");
  }
  LabeledSample out = s;
  switch (kind) {
    case AugmentKind::vflip:
      out.image = flip(s.image, true);
      break;
    case AugmentKind::hflip:
      out.image = flip(s.image, false);
      break;
    case AugmentKind::noise: {
      constexpr double amp = kNoiseFloorGauss * kScaledMax / (2.0 * kClipGauss);
      Rng rng(seed);
      for (double& v : out.image.values()) v = std::clamp(v + rng.uniform(-amp, amp), 0.0, kScaledMax);
      break;
    }
    case AugmentKind::blur:
      out.image = gaussian_blur3(s.image);
      break;
    case AugmentKind::polarity:
      for (double& v : out.image.values()) v = kScaledMax - v;
      break;
  }
  return out;
}

UndersampleRates default_undersample_rates() {
  return {{FlareClass::FQ, kCalibratedFqRate},
          {FlareClass::A, kPartialUndersampleRate},
          {FlareClass::B, kPartialUndersampleRate},
          {FlareClass::C, kPartialUndersampleRate}};
}

namespace {

void check_rates(const UndersampleRates& rates) {
  for (const auto& [cls, rate] : rates) {
    if (!(rate > 0.0 && rate <= 1.0)) {
      throw std::invalid_argument("undersample rate for " + std::string(to_token(cls)) +
                                  " must lie in (0, 1]");
    }
  }
}

std::size_t retained_count(std::size_t n, FlareClass c, const UndersampleRates& rates) {
  const auto it = rates.find(c);
  if (it == rates.end()) return n;
  return static_cast<std::size_t>(std::llround(it->second * static_cast<double>(n)));
}

constexpr std::size_t kAugmentFactor = 1 + kAllAugmentations.size();

}  // namespace

ClassCounts balanced_counts(const ClassCounts& original, const UndersampleRates& rates,
                            const ThresholdSpec& t) {
  check_rates(rates);
  ClassCounts out{};
  for (FlareClass c : kAllClasses) {
    const auto i = static_cast<std::size_t>(c);
    out[i] = binarize(c, t) == BinaryLabel::FL ? original[i] * kAugmentFactor
                                               : retained_count(original[i], c, rates);
  }
  return out;
}

ClassCounts count_classes(std::span<const LabeledSample> samples) {
  ClassCounts counts{};
  for (const auto& s : samples) ++counts[static_cast<std::size_t>(s.subclass)];
  return counts;
}

std::vector<LabeledSample> balance_training(std::span<const LabeledSample> samples,
                                            const UndersampleRates& rates, std::uint64_t seed,
                                            const ThresholdSpec& t) {
  check_rates(rates);
  std::array<std::vector<std::size_t>, kNumClasses> by_class;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    by_class[static_cast<std::size_t>(samples[i].subclass)].push_back(i);
  }
  std::vector<std::uint8_t> keep(samples.size(), 0);
  for (FlareClass c : kAllClasses) {
    auto& idx = by_class[static_cast<std::size_t>(c)];
    if (binarize(c, t) == BinaryLabel::FL) {
      for (std::size_t i : idx) keep[i] = 1;
      continue;
    }
    const std::size_t k = retained_count(idx.size(), c, rates);
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
    rng.shuffle(idx);
    for (std::size_t j = 0; j < k; ++j) keep[idx[j]] = 1;
  }

  std::vector<LabeledSample> out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!keep[i]) continue;
    const auto& s = samples[i];
    if (binarize(s.subclass, t) != s.label) {
      throw std::domain_error("sample " + s.sample_id + ": label inconsistent with subclass");
    }
    out.push_back(s);
    if (s.label != BinaryLabel::FL) continue;
    for (AugmentKind kind : kAllAugmentations) {
      const std::uint64_t sample_seed =
          derive_seed(seed, fnv1a(s.sample_id) ^ (static_cast<std::uint64_t>(kind) << 56));
      LabeledSample a = augment(s, kind, sample_seed);
      a.sample_id = s.sample_id + "-" + std::string(to_token(kind));
      out.push_back(std::move(a));
    }
  }
  return out;
}

WindowLabel label_window(std::span<const FlareEvent> events, UnixTime obs_time,
                         const ThresholdSpec& t, UnixTime window) {
  double max_flux = 0.0;
  for (const auto& e : events) {
    if (e.time <= obs_time) continue;
    if (e.time > obs_time + window) break;
    max_flux = std::max(max_flux, e.peak_flux);
  }
  WindowLabel out;
  out.subclass = class_from_flux(max_flux);
  out.label = binarize(out.subclass, t);
  return out;
}

std::string_view to_token(SplitRole r) noexcept {
  switch (r) {
    case SplitRole::train: return "train";
    case SplitRole::validation: return "val";
    case SplitRole::test: return "test";
  }
  return "?";
}

SplitRole parse_split_role(std::string_view text) {
  if (text == "train") return SplitRole::train;
  if (text == "val" || text == "validation") return SplitRole::validation;
  if (text == "test") return SplitRole::test;
  throw std::invalid_argument("unknown split '" + std::string(text) + "'");
}

int partition_for_month(unsigned month) {
  if (month < 1 || month > 12) throw std::invalid_argument("month must be 1..12");
  return static_cast<int>((month - 1) % 4) + 1;
}

SplitAssignment::SplitAssignment()
    : roles_{SplitRole::train, SplitRole::train, SplitRole::validation, SplitRole::test} {}

void SplitAssignment::assign(std::int64_t region_id, int partition) {
  if (partition < 1 || partition > 4) throw std::invalid_argument("partition must be 1..4");
  const auto [it, inserted] = partitions_.emplace(region_id, partition);
  if (!inserted && it->second != partition) {
    throw std::logic_error("region " + std::to_string(region_id) + " already in partition " +
                           std::to_string(it->second));
  }
}

int SplitAssignment::partition_of(std::int64_t region_id) const {
  const auto it = partitions_.find(region_id);
  if (it == partitions_.end()) {
    throw std::out_of_range("region " + std::to_string(region_id) + " has no partition");
  }
  return it->second;
}

SplitRole SplitAssignment::role_of_partition(int partition) const {
  if (partition < 1 || partition > 4) throw std::invalid_argument("partition must be 1..4");
  return roles_[static_cast<std::size_t>(partition - 1)];
}

void SplitAssignment::set_role(int partition, SplitRole role) {
  if (partition < 1 || partition > 4) throw std::invalid_argument("partition must be 1..4");
  roles_[static_cast<std::size_t>(partition - 1)] = role;
}

SplitAssignment assign_partitions(std::span<const RegionObservation> observations) {
  if (observations.empty()) throw std::invalid_argument("no regions to partition");
  std::map<std::int64_t, UnixTime> first_seen;
  for (const auto& o : observations) {
    const auto [it, inserted] = first_seen.emplace(o.region_id, o.obs_time);
    if (!inserted) it->second = std::min(it->second, o.obs_time);
  }
  SplitAssignment out;
  for (const auto& [region, t] : first_seen) out.assign(region, partition_for_month(utc_month(t)));
  return out;
}

}  // namespace flarepp
