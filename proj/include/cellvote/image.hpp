#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace cellvote::seg {

// Row-major intensities in [0, 1].
class GrayImage {
 public:
  GrayImage(int width, int height, double fill = 0.0);
  GrayImage(int width, int height, std::vector<double> pixels);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return pixels_.size(); }
  double at(int x, int y) const { return pixels_[index(x, y)]; }
  double& at(int x, int y) { return pixels_[index(x, y)]; }
  std::span<const double> pixels() const { return pixels_; }

  double min() const;
  double max() const;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_;
  int height_;
  std::vector<double> pixels_;
};

class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height) : width_(width), height_(height), bits_(static_cast<std::size_t>(width) * height, 0) {}

  int width() const { return width_; }
  int height() const { return height_; }
  bool at(int x, int y) const { return bits_[index(x, y)] != 0; }
  void set(int x, int y, bool on) { bits_[index(x, y)] = on ? 1 : 0; }
  std::size_t count() const;
  std::span<const std::uint8_t> bits() const { return bits_; }

  bool operator==(const BinaryMask&) const = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

double dice(const BinaryMask& a, const BinaryMask& b);

// Reads any raster format OpenCV decodes. Colour input is reduced to
// luminance (0.299 R + 0.587 G + 0.114 B); integer depths are scaled to
// [0, 1]. Throws Error(MissingFile) or Error(IoError).
GrayImage load_gray(const std::filesystem::path& path);

void save_gray_png(const std::filesystem::path& path, const GrayImage& image);
void save_mask_png(const std::filesystem::path& path, const BinaryMask& mask);

bool is_raster_file(const std::filesystem::path& path);

}  // namespace cellvote::seg
