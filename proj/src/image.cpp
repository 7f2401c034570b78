#include "cellvote/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "cellvote/error.hpp"

namespace cellvote::seg {

GrayImage::GrayImage(int width, int height, double fill)
    : GrayImage(width, height, std::vector<double>(static_cast<std::size_t>(std::max(width, 0)) *
                                                       static_cast<std::size_t>(std::max(height, 0)),
                                                   fill)) {}

GrayImage::GrayImage(int width, int height, std::vector<double> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width < 1 || height < 1) throw Error(ErrorKind::InvalidArgument, "image dimensions must be positive");
  if (pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
    throw Error(ErrorKind::InvalidArgument, "pixel count does not match image dimensions");
  for (double v : pixels_)
    if (!std::isfinite(v) || v < 0.0 || v > 1.0)
      throw Error(ErrorKind::InvalidArgument, "image intensities must be finite and within [0, 1]");
}

double GrayImage::min() const { return *std::min_element(pixels_.begin(), pixels_.end()); }
double GrayImage::max() const { return *std::max_element(pixels_.begin(), pixels_.end()); }

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

double dice(const BinaryMask& a, const BinaryMask& b) {
  if (a.width() != b.width() || a.height() != b.height())
    throw Error(ErrorKind::InvalidArgument, "dice needs masks of equal shape");
  std::size_t both = 0;
  const auto bits_a = a.bits();
  const auto bits_b = b.bits();
  for (std::size_t i = 0; i < bits_a.size(); ++i) both += bits_a[i] && bits_b[i];
  const std::size_t total = a.count() + b.count();
  return total == 0 ? 1.0 : 2.0 * static_cast<double>(both) / static_cast<double>(total);
}

GrayImage load_gray(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorKind::MissingFile, "image '" + path.string() + "' not found");
  const cv::Mat raw = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (raw.empty()) throw Error(ErrorKind::IoError, "cannot decode image '" + path.string() + "'");

  double scale = 1.0;
  switch (raw.depth()) {
    case CV_8U: scale = 1.0 / 255.0; break;
    case CV_16U: scale = 1.0 / 65535.0; break;
    case CV_32F:
    case CV_64F: scale = 1.0; break;
    default: throw Error(ErrorKind::IoError, "unsupported pixel depth in '" + path.string() + "'");
  }
  cv::Mat values;
  raw.convertTo(values, CV_64F, scale);

  const int channels = values.channels();
  std::vector<double> pixels(static_cast<std::size_t>(values.rows) * static_cast<std::size_t>(values.cols));
  for (int y = 0; y < values.rows; ++y) {
    const double* row = values.ptr<double>(y);
    for (int x = 0; x < values.cols; ++x) {
      const double* px = row + static_cast<std::ptrdiff_t>(x) * channels;
      double v = px[0];
      if (channels >= 3) v = 0.114 * px[0] + 0.587 * px[1] + 0.299 * px[2];  // BGR order
      pixels[static_cast<std::size_t>(y) * values.cols + x] = std::clamp(v, 0.0, 1.0);
    }
  }
  return GrayImage(values.cols, values.rows, std::move(pixels));
}

void save_gray_png(const std::filesystem::path& path, const GrayImage& image) {
  cv::Mat out(image.height(), image.width(), CV_8UC1);
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x)
      out.at<std::uint8_t>(y, x) = static_cast<std::uint8_t>(std::lround(image.at(x, y) * 255.0));
  if (!cv::imwrite(path.string(), out)) throw Error(ErrorKind::IoError, "cannot write '" + path.string() + "'");
}

void save_mask_png(const std::filesystem::path& path, const BinaryMask& mask) {
  cv::Mat out(mask.height(), mask.width(), CV_8UC1);
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x) out.at<std::uint8_t>(y, x) = mask.at(x, y) ? 255 : 0;
  if (!cv::imwrite(path.string(), out)) throw Error(ErrorKind::IoError, "cannot write '" + path.string() + "'");
}

bool is_raster_file(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  static const char* known[] = {".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff", ".pgm", ".ppm", ".webp"};
  return std::any_of(std::begin(known), std::end(known), [&](const char* e) { return ext == e; });
}

}  // namespace cellvote::seg
