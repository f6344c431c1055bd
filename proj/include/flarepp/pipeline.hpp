#pragma once
// Data preparation: raster preprocessing, labeling, augmentation,
// undersampling and region-level tri-monthly partitioning.
//
// Preprocessing order is fixed:
//   clip_flux -> zero_noise -> apply_bitmap -> fit_window -> scale_0_255

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "flarepp/flare_class.hpp"
#include "flarepp/raster.hpp"
#include "flarepp/time_util.hpp"

namespace flarepp {

inline constexpr double kClipGauss = 256.0;
inline constexpr double kNoiseFloorGauss = 25.0;
inline constexpr std::size_t kImageSize = 512;
inline constexpr double kScaledMax = 255.0;

// min(max(v, -256), 256)
Raster clip_flux(const Raster& r);
// |v| <= 25 -> 0; the boundary itself is zeroed.
Raster zero_noise(const Raster& r);
// Pixels outside the mask become 0. Throws std::domain_error on shape mismatch.
Raster apply_bitmap(const Raster& r, const Bitmap& b);
// Zero-pads (top-left anchored) any dimension smaller than `size`, then, if
// still larger than size x size, crops the window of maximum unsigned flux.
Raster fit_window(const Raster& r, std::size_t size);
inline Raster fit_512(const Raster& r) { return fit_window(r, kImageSize); }
// Affine map [-256, 256] -> [0, 255]. Throws std::domain_error outside the range.
Raster scale_0_255(const Raster& r);
// Full chain in the fixed order.
Raster preprocess(const Raster& raw, const Bitmap& roi, std::size_t size = kImageSize);

struct LabeledSample {
  std::string sample_id;
  std::int64_t region_id = 0;
  UnixTime timestamp = 0;
  FlareClass subclass = FlareClass::FQ;
  BinaryLabel label = BinaryLabel::NF;
  Raster image;
};

// Checks image shape (size x size), pixel range [0,255] and label consistency.
// Throws std::domain_error describing the first violation.
void validate_sample(const LabeledSample& s, const ThresholdSpec& t,
                     std::size_t size = kImageSize);

enum class AugmentKind : std::uint8_t { vflip, hflip, noise, blur, polarity };
inline constexpr std::array<AugmentKind, 5> kAllAugmentations = {
    AugmentKind::vflip, AugmentKind::hflip, AugmentKind::noise, AugmentKind::blur,
    AugmentKind::polarity};

std::string_view to_token(AugmentKind k) noexcept;

// Noise: i.i.d. uniform in +-25 G expressed in scaled units (25 * 255/512),
// then clamped to [0, 255]. Blur: 3x3 Gaussian (sigma 1), edge replicate.
// Polarity: v -> 255 - v (raster negation under the scaling map).
// Only FL samples may be augmented; NF throws std::domain_error.
// `seed` is only consumed by the noise kind.
LabeledSample augment(const LabeledSample& s, AugmentKind kind, std::uint64_t seed = 0);

using ClassCounts = std::array<std::size_t, kNumClasses>;
using UndersampleRates = std::map<FlareClass, double>;

// FQ rate that maps the training-set 182,880 FQ instances to exactly 11,073.
inline constexpr double kCalibratedFqRate = 11073.0 / 182880.0;
inline constexpr double kPartialUndersampleRate = 0.30;

// {FQ: calibrated ~6.05%, A/B/C: 30%}
UndersampleRates default_undersample_rates();

// Count-level simulation of balance_training: FL classes x6, NF classes
// round(rate * n) (classes without a rate are kept whole).
ClassCounts balanced_counts(const ClassCounts& original, const UndersampleRates& rates,
                            const ThresholdSpec& t = ThresholdSpec{});

// FL samples: original plus the five augmented variants. NF samples: seeded
// uniform undersampling without replacement per class. Output keeps input
// order; augmented ids are "<id>-<kind>".
std::vector<LabeledSample> balance_training(std::span<const LabeledSample> samples,
                                            const UndersampleRates& rates, std::uint64_t seed,
                                            const ThresholdSpec& t = ThresholdSpec{});

ClassCounts count_classes(std::span<const LabeledSample> samples);

struct FlareEvent {
  UnixTime time = 0;
  double peak_flux = 0.0;
};

struct WindowLabel {
  FlareClass subclass = FlareClass::FQ;
  BinaryLabel label = BinaryLabel::NF;
};

// Max class over events with obs_time < t <= obs_time + window; FQ if none.
WindowLabel label_window(std::span<const FlareEvent> events, UnixTime obs_time,
                         const ThresholdSpec& t, UnixTime window = kDay);

enum class SplitRole : std::uint8_t { train, validation, test };
std::string_view to_token(SplitRole r) noexcept;
SplitRole parse_split_role(std::string_view text);

// Calendar month -> partition 1..4: ((month - 1) mod 4) + 1.
int partition_for_month(unsigned month);

struct RegionObservation {
  std::int64_t region_id = 0;
  UnixTime obs_time = 0;
};

class SplitAssignment {
 public:
  // Default roles: partitions 1, 2 -> train, 3 -> validation, 4 -> test.
  SplitAssignment();

  void assign(std::int64_t region_id, int partition);
  int partition_of(std::int64_t region_id) const;  // throws std::out_of_range
  SplitRole role_of_partition(int partition) const;
  SplitRole role_of(std::int64_t region_id) const { return role_of_partition(partition_of(region_id)); }
  void set_role(int partition, SplitRole role);

  const std::map<std::int64_t, int>& partitions() const noexcept { return partitions_; }

 private:
  std::map<std::int64_t, int> partitions_;
  std::array<SplitRole, 4> roles_;
};

// Each region is keyed on its earliest observation; later observations of
// the same region never move it. Throws std::invalid_argument on empty input.
SplitAssignment assign_partitions(std::span<const RegionObservation> observations);

}  // namespace flarepp
