#pragma once
// On-disk datasets: a manifest CSV plus one raster file per sample.
//
//   sample_id,region_id,timestamp,subclass,label,partition,image_path
//
// image_path is relative to the manifest's directory.

#include <filesystem>
#include <string>
#include <vector>

#include "flarepp/pipeline.hpp"

namespace flarepp {

struct ManifestRow {
  std::string sample_id;
  std::int64_t region_id = 0;
  UnixTime timestamp = 0;
  FlareClass subclass = FlareClass::FQ;
  BinaryLabel label = BinaryLabel::NF;
  int partition = 1;
  std::string image_path;
};

inline constexpr const char* kManifestHeader =
    "sample_id,region_id,timestamp,subclass,label,partition,image_path";

std::string format_manifest(const std::vector<ManifestRow>& rows);
std::vector<ManifestRow> parse_manifest(std::istream& is);

// Writes images under <dir>/images/ and the manifest as <dir>/<manifest_name>.
// Every sample's region must already have a partition in `partitions`.
void write_dataset(const std::filesystem::path& dir, const std::string& manifest_name,
                   const std::vector<LabeledSample>& samples, const SplitAssignment& partitions);

struct LoadedSample {
  ManifestRow row;
  LabeledSample sample;
};

std::vector<LoadedSample> read_dataset(const std::filesystem::path& manifest_path);

}  // namespace flarepp
