#pragma once
// 2-D magnetic-flux grids (gauss), region-of-interest bitmaps, and their
// ASCII file format:
//
//   P_RASTER v1 <width> <height>
//   <height lines of <width> space-separated reals, row-major>
//
// Bitmaps use the header "P_BITMAP v1" and 0/1 values.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace flarepp {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Raster {
 public:
  Raster() = default;
  Raster(std::size_t width, std::size_t height, double fill = 0.0);
  // Throws std::invalid_argument on empty shape, size mismatch or non-finite values.
  Raster(std::size_t width, std::size_t height, std::vector<double> values);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return values_.size(); }

  double& at(std::size_t row, std::size_t col) { return values_[row * width_ + col]; }
  double at(std::size_t row, std::size_t col) const { return values_[row * width_ + col]; }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<double> values_;
};

class Bitmap {
 public:
  Bitmap() = default;
  Bitmap(std::size_t width, std::size_t height, bool fill = false);
  Bitmap(std::size_t width, std::size_t height, std::vector<std::uint8_t> mask);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }

  bool at(std::size_t row, std::size_t col) const { return mask_[row * width_ + col] != 0; }
  void set(std::size_t row, std::size_t col, bool v) { mask_[row * width_ + col] = v ? 1 : 0; }
  std::size_t count() const noexcept;

  std::span<const std::uint8_t> mask() const noexcept { return mask_; }

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<std::uint8_t> mask_;
};

void write_raster(std::ostream& os, const Raster& r);
Raster read_raster(std::istream& is);
void write_bitmap(std::ostream& os, const Bitmap& b);
Bitmap read_bitmap(std::istream& is);

// File variants throw IoError on open/read failures.
void save_raster(const std::filesystem::path& path, const Raster& r);
Raster load_raster(const std::filesystem::path& path);
void save_bitmap(const std::filesystem::path& path, const Bitmap& b);
Bitmap load_bitmap(const std::filesystem::path& path);

// Integral image over |v|. Entry (r, c) holds the sum over rows [0, r) and
// columns [0, c); accumulated in long double.
class SummedAreaTable {
 public:
  explicit SummedAreaTable(const Raster& r);

  // Sum of |v| over rows [row, row+h), cols [col, col+w).
  double window_sum(std::size_t row, std::size_t col, std::size_t h, std::size_t w) const;
  double total() const { return window_sum(0, 0, height_, width_); }

 private:
  long double entry(std::size_t r, std::size_t c) const { return table_[r * (width_ + 1) + c]; }

  std::size_t width_;
  std::size_t height_;
  std::vector<long double> table_;
};

struct WindowOrigin {
  std::size_t row = 0;
  std::size_t col = 0;
  friend bool operator==(const WindowOrigin&, const WindowOrigin&) = default;
};

// Origin of the h x w window with the largest unsigned flux. Sums within a
// relative 1e-12 of the running best count as ties, resolved toward the
// smallest row, then the smallest column. Requires h <= height, w <= width.
WindowOrigin max_flux_window(const Raster& r, std::size_t h, std::size_t w);

Raster crop(const Raster& r, WindowOrigin origin, std::size_t h, std::size_t w);

}  // namespace flarepp
