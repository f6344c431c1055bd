#include "flarepp/raster.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace flarepp {

namespace {

void check_shape(std::size_t width, std::size_t height) {
  if (width == 0 || height == 0) throw std::invalid_argument("raster shape must be at least 1x1");
}

void read_header(std::istream& is, std::string_view magic, std::size_t& width, std::size_t& height) {
  std::string tag, version;
  if (!(is >> tag >> version >> width >> height) || tag != magic || version != "v1") {
    throw IoError("bad header, expected '" + std::string(magic) + " v1 <width> <height>'");
  }
  check_shape(width, height);
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

}  // namespace

Raster::Raster(std::size_t width, std::size_t height, double fill)
    : width_(width), height_(height), values_(width * height, fill) {
  check_shape(width, height);
  if (!std::isfinite(fill)) throw std::invalid_argument("raster values must be finite");
}

Raster::Raster(std::size_t width, std::size_t height, std::vector<double> values)
    : width_(width), height_(height), values_(std::move(values)) {
  check_shape(width, height);
  if (values_.size() != width * height) throw std::invalid_argument("raster value count mismatch");
  for (double v : values_) {
    if (!std::isfinite(v)) throw std::invalid_argument("raster values must be finite");
  }
}

Bitmap::Bitmap(std::size_t width, std::size_t height, bool fill)
    : width_(width), height_(height), mask_(width * height, fill ? 1 : 0) {
  check_shape(width, height);
}

Bitmap::Bitmap(std::size_t width, std::size_t height, std::vector<std::uint8_t> mask)
    : width_(width), height_(height), mask_(std::move(mask)) {
  check_shape(width, height);
  if (mask_.size() != width * height) throw std::invalid_argument("bitmap value count mismatch");
  for (auto& m : mask_) m = m ? 1 : 0;
}

std::size_t Bitmap::count() const noexcept {
  return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), std::uint8_t{1}));
}

void write_raster(std::ostream& os, const Raster& r) {
  os << "P_RASTER v1 " << r.width() << ' ' << r.height() << '\n';
  char buf[32];
  for (std::size_t row = 0; row < r.height(); ++row) {
    for (std::size_t col = 0; col < r.width(); ++col) {
      std::snprintf(buf, sizeof buf, "%.17g", r.at(row, col));
      if (col) os << ' ';
      os << buf;
    }
    os << '\n';
  }
}

Raster read_raster(std::istream& is) {
  std::size_t width = 0, height = 0;
  read_header(is, "P_RASTER", width, height);
  std::vector<double> values(width * height);
  for (auto& v : values) {
    std::string tok;
    if (!(is >> tok)) throw IoError("raster truncated");
    try {
      std::size_t used = 0;
      v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw IoError("bad raster value '" + tok + "'");
    }
  }
  try {
    return Raster(width, height, std::move(values));
  } catch (const std::invalid_argument& e) {
    throw IoError(e.what());
  }
}

void write_bitmap(std::ostream& os, const Bitmap& b) {
  os << "P_BITMAP v1 " << b.width() << ' ' << b.height() << '\n';
  for (std::size_t row = 0; row < b.height(); ++row) {
    for (std::size_t col = 0; col < b.width(); ++col) {
      if (col) os << ' ';
      os << (b.at(row, col) ? '1' : '0');
    }
    os << '\n';
  }
}

Bitmap read_bitmap(std::istream& is) {
  std::size_t width = 0, height = 0;
  read_header(is, "P_BITMAP", width, height);
  std::vector<std::uint8_t> mask(width * height);
  for (auto& m : mask) {
    int v = -1;
    if (!(is >> v) || (v != 0 && v != 1)) throw IoError("bitmap values must be 0 or 1");
    m = static_cast<std::uint8_t>(v);
  }
  return Bitmap(width, height, std::move(mask));
}

void save_raster(const std::filesystem::path& path, const Raster& r) {
  auto out = open_out(path);
  write_raster(out, r);
  if (!out) throw IoError("write failed: " + path.string());
}

Raster load_raster(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_raster(in);
}

void save_bitmap(const std::filesystem::path& path, const Bitmap& b) {
  auto out = open_out(path);
  write_bitmap(out, b);
  if (!out) throw IoError("write failed: " + path.string());
}

Bitmap load_bitmap(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_bitmap(in);
}

SummedAreaTable::SummedAreaTable(const Raster& r)
    : width_(r.width()), height_(r.height()), table_((r.width() + 1) * (r.height() + 1), 0.0L) {
  const std::size_t stride = width_ + 1;
  for (std::size_t row = 0; row < height_; ++row) {
    long double row_sum = 0.0L;
    for (std::size_t col = 0; col < width_; ++col) {
      row_sum += std::abs(static_cast<long double>(r.at(row, col)));
      table_[(row + 1) * stride + col + 1] = table_[row * stride + col + 1] + row_sum;
    }
  }
}

double SummedAreaTable::window_sum(std::size_t row, std::size_t col, std::size_t h,
                                   std::size_t w) const {
  if (row + h > height_ || col + w > width_) throw std::out_of_range("window outside raster");
  const long double s =
      entry(row + h, col + w) - entry(row, col + w) - entry(row + h, col) + entry(row, col);
  return static_cast<double>(s);
}

WindowOrigin max_flux_window(const Raster& r, std::size_t h, std::size_t w) {
  if (h == 0 || w == 0 || h > r.height() || w > r.width()) {
    throw std::invalid_argument("window does not fit inside raster");
  }
  const SummedAreaTable sat(r);
  const double tie_tol = 1e-12 * std::max(sat.total(), 1e-300);
  WindowOrigin best;
  double best_sum = sat.window_sum(0, 0, h, w);
  // Row-major scan: a later window wins only if strictly better beyond the tolerance.
  for (std::size_t row = 0; row + h <= r.height(); ++row) {
    for (std::size_t col = 0; col + w <= r.width(); ++col) {
      const double s = sat.window_sum(row, col, h, w);
      if (s > best_sum + tie_tol) {
        best_sum = s;
        best = {row, col};
      }
    }
  }
  return best;
}

Raster crop(const Raster& r, WindowOrigin origin, std::size_t h, std::size_t w) {
  if (origin.row + h > r.height() || origin.col + w > r.width()) {
    throw std::out_of_range("crop window outside raster");
  }
  Raster out(w, h);
  for (std::size_t row = 0; row < h; ++row) {
    for (std::size_t col = 0; col < w; ++col) out.at(row, col) = r.at(origin.row + row, origin.col + col);
  }
  return out;
}

}  // namespace flarepp
