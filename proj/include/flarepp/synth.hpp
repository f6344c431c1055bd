#pragma once
// Synthetic active-region magnetograms standing in for real observations.
//
// Each raw observation is a bipolar pair of Gaussian flux blobs over a noisy
// background. Blob amplitude, blob width and the strength of the trailing
// (negative) polarity all grow with the flare subclass, with log-normal
// jitter so that neighbouring classes overlap. Raw rasters are run through
// the regular preprocessing chain.

#include <cstdint>
#include <string>
#include <vector>

#include "flarepp/pipeline.hpp"

namespace flarepp {

struct RawObservation {
  std::string sample_id;
  std::int64_t region_id = 0;
  UnixTime timestamp = 0;
  FlareClass subclass = FlareClass::FQ;
  Raster flux;  // gauss
  Bitmap roi;
};

struct SynthSpec {
  ClassCounts counts{};
  std::size_t image_size = 32;
  ThresholdSpec threshold{};
  // Region first-observation months are drawn from these partitions (1..4).
  std::vector<int> partitions{1, 2, 3, 4};
  int first_year = 2010;
  int last_year = 2018;
  std::size_t samples_per_region = 6;
  std::int64_t first_region_id = 1;
  std::string id_prefix = "s";
};

// Raw rasters are larger than image_size by a quarter on each axis so the
// max-flux crop is exercised.
std::vector<RawObservation> synth_raw(const SynthSpec& spec, std::uint64_t seed);

std::vector<LabeledSample> synth_dataset(const SynthSpec& spec, std::uint64_t seed);
// Convenience overload: all partitions, default threshold.
std::vector<LabeledSample> synth_dataset(const ClassCounts& counts, std::size_t image_size,
                                         std::uint64_t seed);

// Original (pre-balancing) class counts of the reference train/val/test sets.
struct SplitCounts {
  ClassCounts train{};
  ClassCounts validation{};
  ClassCounts test{};
};
SplitCounts reference_counts();
// Each count divided by `scale` and rounded to nearest.
SplitCounts scaled_counts(const SplitCounts& c, double scale);

struct SynthSplits {
  std::vector<LabeledSample> train;
  std::vector<LabeledSample> validation;
  std::vector<LabeledSample> test;
};

// Train regions land in partitions 1-2, validation in 3, test in 4.
SynthSplits synth_splits(const SplitCounts& counts, std::size_t image_size, std::uint64_t seed,
                         const ThresholdSpec& t = ThresholdSpec{});

}  // namespace flarepp
