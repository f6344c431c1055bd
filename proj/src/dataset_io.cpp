#include "flarepp/dataset_io.hpp"

#include <fstream>
#include <istream>
#include <sstream>

namespace flarepp {

std::string format_manifest(const std::vector<ManifestRow>& rows) {
  std::string out = std::string(kManifestHeader) + "\n";
  for (const auto& r : rows) {
    out += r.sample_id + "," + std::to_string(r.region_id) + "," + format_iso8601(r.timestamp) + "," +
           std::string(to_token(r.subclass)) + "," + std::string(to_token(r.label)) + "," +
           std::to_string(r.partition) + "," + r.image_path + "\n";
  }
  return out;
}

std::vector<ManifestRow> parse_manifest(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kManifestHeader) {
    throw IoError("manifest header must be '" + std::string(kManifestHeader) + "'");
  }
  std::vector<ManifestRow> rows;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 7) throw IoError("manifest line " + std::to_string(line_no) + ": expected 7 fields");
    try {
      ManifestRow r;
      r.sample_id = f[0];
      r.region_id = std::stoll(f[1]);
      r.timestamp = parse_iso8601(f[2]);
      r.subclass = parse_class(f[3]);
      if (f[4] == "FL") r.label = BinaryLabel::FL;
      else if (f[4] == "NF") r.label = BinaryLabel::NF;
      else throw std::invalid_argument("label must be FL or NF");
      r.partition = std::stoi(f[5]);
      if (r.partition < 1 || r.partition > 4) throw std::invalid_argument("partition must be 1..4");
      r.image_path = f[6];
      rows.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw IoError("manifest line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

void write_dataset(const std::filesystem::path& dir, const std::string& manifest_name,
                   const std::vector<LabeledSample>& samples, const SplitAssignment& partitions) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "images", ec);
  if (ec) throw IoError("cannot create " + (dir / "images").string() + ": " + ec.message());
  std::vector<ManifestRow> rows;
  rows.reserve(samples.size());
  for (const auto& s : samples) {
    ManifestRow r;
    r.sample_id = s.sample_id;
    r.region_id = s.region_id;
    r.timestamp = s.timestamp;
    r.subclass = s.subclass;
    r.label = s.label;
    r.partition = partitions.partition_of(s.region_id);
    r.image_path = "images/" + s.sample_id + ".raster";
    save_raster(dir / r.image_path, s.image);
    rows.push_back(std::move(r));
  }
  std::ofstream out(dir / manifest_name, std::ios::binary);
  if (!out) throw IoError("cannot write " + (dir / manifest_name).string());
  out << format_manifest(rows);
  if (!out) throw IoError("write failed: " + (dir / manifest_name).string());
}

std::vector<LoadedSample> read_dataset(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open " + manifest_path.string());
  const auto base = manifest_path.parent_path();
  std::vector<LoadedSample> out;
  for (auto& row : parse_manifest(in)) {
    LoadedSample ls;
    ls.sample.sample_id = row.sample_id;
    ls.sample.region_id = row.region_id;
    ls.sample.timestamp = row.timestamp;
    ls.sample.subclass = row.subclass;
    ls.sample.label = row.label;
    ls.sample.image = load_raster(base / row.image_path);
    ls.row = std::move(row);
    out.push_back(std::move(ls));
  }
  return out;
}

}  // namespace flarepp
