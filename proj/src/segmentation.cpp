#include "cellvote/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <span>
#include <tuple>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "cellvote/error.hpp"

namespace cellvote::seg {

namespace {

// Guards the curvature coefficients on flat stretches of phi.
constexpr double kGradientFloor = 1e-16;
constexpr int kMaxStepHalvings = 30;
// phi is kept in [-kPhiBound, kPhiBound]; without the bound it keeps growing
// away from the contour and the energy never settles.
constexpr double kPhiBound = 1.0;

double heaviside(double z, double eps) { return 0.5 * (1.0 + (2.0 / std::numbers::pi) * std::atan(z / eps)); }
double delta(double z, double eps) { return eps / (eps * eps + z * z); }

class Solver {
 public:
  Solver(const GrayImage& image, const ChanVeseParams& params)
      : u_(image.pixels()), p_(params), w_(image.width()), h_(image.height()) {}

  // mu * sum delta(phi) |grad phi| + nu * sum H + fit terms, H smoothed,
  // region means chosen to minimise the fit for that H.
  double energy(const std::vector<double>& phi) const {
    double sum_in = 0, w_in = 0, sum_out = 0, w_out = 0;
    for (std::size_t i = 0; i < phi.size(); ++i) {
      const double H = heaviside(phi[i], p_.epsilon);
      sum_in += u_[i] * H;
      w_in += H;
      sum_out += u_[i] * (1.0 - H);
      w_out += 1.0 - H;
    }
    const double c_in = w_in > 0 ? sum_in / w_in : 0.0;
    const double c_out = w_out > 0 ? sum_out / w_out : 0.0;
    double length = 0, fit = 0;
    for (int y = 0; y < h_; ++y) {
      for (int x = 0; x < w_; ++x) {
        const std::size_t i = idx(x, y);
        const double gx = 0.5 * (at(phi, x + 1, y) - at(phi, x - 1, y));
        const double gy = 0.5 * (at(phi, x, y + 1) - at(phi, x, y - 1));
        length += delta(phi[i], p_.epsilon) * std::sqrt(gx * gx + gy * gy);
        const double H = heaviside(phi[i], p_.epsilon);
        const double din = u_[i] - c_in, dout = u_[i] - c_out;
        fit += p_.lambda_inside * din * din * H + p_.lambda_outside * dout * dout * (1.0 - H);
      }
    }
    return p_.mu * length + p_.nu * w_in + fit;
  }

  // Means of the regions phi > 0 and phi <= 0.
  std::pair<double, double> region_means(const std::vector<double>& phi) const {
    double sum_in = 0, sum_out = 0;
    std::size_t n_in = 0, n_out = 0;
    for (std::size_t i = 0; i < phi.size(); ++i) {
      if (phi[i] > 0) {
        sum_in += u_[i];
        ++n_in;
      } else {
        sum_out += u_[i];
        ++n_out;
      }
    }
    return {n_in ? sum_in / n_in : 0.0, n_out ? sum_out / n_out : 0.0};
  }

  // One semi-implicit curvature step of size dt.
  void step(const std::vector<double>& phi, double dt, std::vector<double>& out) const {
    const auto [c_in, c_out] = region_means(phi);
    for (int y = 0; y < h_; ++y) {
      for (int x = 0; x < w_; ++x) {
        const std::size_t i = idx(x, y);
        const double p = phi[i];
        const double xp = at(phi, x + 1, y), xn = at(phi, x - 1, y);
        const double yp = at(phi, x, y + 1), yn = at(phi, x, y - 1);
        const double x0 = 0.5 * (xp - xn), y0 = 0.5 * (yp - yn);
        const double c1 = 1.0 / std::sqrt(kGradientFloor + (xp - p) * (xp - p) + y0 * y0);
        const double c2 = 1.0 / std::sqrt(kGradientFloor + (p - xn) * (p - xn) + y0 * y0);
        const double c3 = 1.0 / std::sqrt(kGradientFloor + x0 * x0 + (yp - p) * (yp - p));
        const double c4 = 1.0 / std::sqrt(kGradientFloor + x0 * x0 + (p - yn) * (p - yn));
        const double din = u_[i] - c_in, dout = u_[i] - c_out;
        const double force = p_.mu * (xp * c1 + xn * c2 + yp * c3 + yn * c4) - p_.nu -
                             p_.lambda_inside * din * din + p_.lambda_outside * dout * dout;
        const double d = dt * delta(p, p_.epsilon);
        const double next = (p + d * force) / (1.0 + p_.mu * d * (c1 + c2 + c3 + c4));
        out[i] = std::isnan(next) ? next : std::clamp(next, -kPhiBound, kPhiBound);
      }
    }
  }

 private:
  std::size_t idx(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(w_) + static_cast<std::size_t>(x);
  }
  // Replicated border.
  double at(const std::vector<double>& phi, int x, int y) const {
    return phi[idx(std::clamp(x, 0, w_ - 1), std::clamp(y, 0, h_ - 1))];
  }

  std::span<const double> u_;
  const ChanVeseParams& p_;
  int w_, h_;
};

std::vector<double> initial_phi(const GrayImage& image, const ChanVeseParams& p) {
  const int w = image.width(), h = image.height();
  std::vector<double> phi(image.size());
  const double cx = 0.5 * (w - 1), cy = 0.5 * (h - 1);
  const double radius = 0.4 * std::min(w, h);
  const double k = std::numbers::pi / (0.5 * p.checker_period);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double v;
      if (p.init == Initialization::Checkerboard)
        v = std::sin(k * x) * std::sin(k * y);
      else
        v = std::clamp((radius - std::hypot(x - cx, y - cy)) / radius, -kPhiBound, kPhiBound);
      phi[static_cast<std::size_t>(y) * w + x] = v;
    }
  }
  return phi;
}

void check_finite(double energy, int iteration) {
  if (!std::isfinite(energy))
    throw Error(ErrorKind::NonFiniteEnergy,
                "Chan-Vese energy became non-finite at iteration " + std::to_string(iteration));
}

}  // namespace

ChanVeseResult chan_vese(const GrayImage& image, const ChanVeseParams& params) {
  if (!(params.mu > 0.0)) throw Error(ErrorKind::InvalidArgument, "mu must be positive");
  if (params.max_iter < 1) throw Error(ErrorKind::InvalidArgument, "max_iter must be at least 1");
  if (!(params.epsilon > 0.0) || !(params.time_step > 0.0) || !(params.tol >= 0.0))
    throw Error(ErrorKind::InvalidArgument, "epsilon and time_step must be positive, tol nonnegative");

  ChanVeseResult result{BinaryMask(image.width(), image.height()), {}, {}, false};
  result.state.mu = params.mu;

  // No edges: both regions share one mean and the data term vanishes.
  if (image.max() - image.min() < 1e-12) {
    result.state.c_inside = result.state.c_outside = image.min();
    result.converged = true;
    result.energy_history.push_back(0.0);
    return result;
  }

  const Solver solver(image, params);
  std::vector<double> phi = initial_phi(image, params);
  std::vector<double> trial(phi.size());

  double current = solver.energy(phi);
  check_finite(current, 0);
  result.energy_history.push_back(current);

  int iteration = 0;
  while (iteration < params.max_iter) {
    ++iteration;
    double step = params.time_step;
    double candidate = current;
    bool accepted = false;
    for (int halving = 0; halving <= kMaxStepHalvings; ++halving, step *= 0.5) {
      solver.step(phi, step, trial);
      candidate = solver.energy(trial);
      check_finite(candidate, iteration);
      if (candidate <= current) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {  // no step lowers the energy any more
      result.converged = true;
      result.energy_history.push_back(current);
      break;
    }
    phi.swap(trial);
    result.energy_history.push_back(candidate);
    const double change = std::abs(current - candidate) / std::max(std::abs(current), 1e-12);
    current = candidate;
    if (change < params.tol) {
      result.converged = true;
      break;
    }
  }

  const auto [c_in, c_out] = solver.region_means(phi);
  const bool inside_is_foreground =
      params.foreground == Foreground::Darker ? c_in <= c_out : c_in >= c_out;
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x) {
      const bool inside = phi[static_cast<std::size_t>(y) * image.width() + x] > 0.0;
      result.mask.set(x, y, inside == inside_is_foreground);
    }

  result.state.phi = std::move(phi);
  result.state.c_inside = c_in;
  result.state.c_outside = c_out;
  result.state.iteration = iteration;
  result.state.energy = current;
  return result;
}

std::vector<Component> connected_components(const BinaryMask& mask) {
  const int w = mask.width(), h = mask.height();
  std::vector<int> label(static_cast<std::size_t>(w) * h, -1);
  std::vector<Component> components;
  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask.at(x, y) || label[static_cast<std::size_t>(y) * w + x] >= 0) continue;
      const int id = static_cast<int>(components.size());
      Component comp;
      int x0 = x, x1 = x, y0 = y, y1 = y;
      stack.assign(1, {x, y});
      label[static_cast<std::size_t>(y) * w + x] = id;
      while (!stack.empty()) {
        const auto [cx, cy] = stack.back();
        stack.pop_back();
        comp.pixels.emplace_back(cx, cy);
        x0 = std::min(x0, cx);
        x1 = std::max(x1, cx);
        y0 = std::min(y0, cy);
        y1 = std::max(y1, cy);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = cx + dx, ny = cy + dy;
            if ((dx == 0 && dy == 0) || nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            int& l = label[static_cast<std::size_t>(ny) * w + nx];
            if (l >= 0 || !mask.at(nx, ny)) continue;
            l = id;
            stack.emplace_back(nx, ny);
          }
        }
      }
      comp.box = BoundingBox{x0, y0, x1 - x0 + 1, y1 - y0 + 1};
      std::sort(comp.pixels.begin(), comp.pixels.end(),
                [](const auto& a, const auto& b) { return std::tie(a.second, a.first) < std::tie(b.second, b.first); });
      components.push_back(std::move(comp));
    }
  }
  return components;
}

BinaryMask remove_small_objects(const BinaryMask& mask, int min_area) {
  BinaryMask out(mask.width(), mask.height());
  for (const Component& c : connected_components(mask)) {
    if (static_cast<int>(c.pixels.size()) < min_area) continue;
    for (const auto& [x, y] : c.pixels) out.set(x, y, true);
  }
  return out;
}

std::vector<CellCrop> extract_cells(const GrayImage& image, const BinaryMask& mask, int pad,
                                    const std::string& source_image_id) {
  if (image.width() != mask.width() || image.height() != mask.height())
    throw Error(ErrorKind::InvalidArgument, "mask is not aligned with the image");
  if (pad < 0) throw Error(ErrorKind::InvalidArgument, "pad must be nonnegative");
  std::vector<CellCrop> crops;
  int index = 0;
  for (const Component& c : connected_components(mask)) {
    const int x0 = std::max(0, c.box.x - pad);
    const int y0 = std::max(0, c.box.y - pad);
    const int x1 = std::min(image.width(), c.box.x + c.box.width + pad);
    const int y1 = std::min(image.height(), c.box.y + c.box.height + pad);
    CellCrop crop{{}, BoundingBox{x0, y0, x1 - x0, y1 - y0}, BinaryMask(x1 - x0, y1 - y0),
                  static_cast<int>(c.pixels.size()), source_image_id};
    char suffix[16];
    std::snprintf(suffix, sizeof suffix, "-c%04d", index++);
    crop.item_id = source_image_id + suffix;
    for (const auto& [x, y] : c.pixels) crop.mask.set(x - x0, y - y0, true);
    crops.push_back(std::move(crop));
  }
  return crops;
}

void write_crop_png(const std::filesystem::path& source_image, const BoundingBox& box,
                    const std::filesystem::path& out) {
  const cv::Mat raw = cv::imread(source_image.string(), cv::IMREAD_UNCHANGED);
  if (raw.empty()) throw Error(ErrorKind::IoError, "cannot decode image '" + source_image.string() + "'");
  const cv::Mat region = raw(cv::Rect(box.x, box.y, box.width, box.height));
  if (!cv::imwrite(out.string(), region)) throw Error(ErrorKind::IoError, "cannot write '" + out.string() + "'");
}

SegmentedImage segment_file(const std::filesystem::path& image_path, const std::filesystem::path& out_dir,
                            const SegmentOptions& options) {
  const GrayImage image = load_gray(image_path);
  SegmentedImage seg;
  seg.source_image_id = image_path.stem().string();
  seg.segmentation = chan_vese(image, options.chan_vese);
  const BinaryMask cleaned = remove_small_objects(seg.segmentation.mask, options.min_area);
  seg.crops = extract_cells(image, cleaned, options.pad, seg.source_image_id);

  const cv::Mat raw = cv::imread(image_path.string(), cv::IMREAD_UNCHANGED);
  std::filesystem::create_directories(out_dir);
  for (const CellCrop& crop : seg.crops) {
    const auto out = out_dir / (crop.item_id + ".png");
    const cv::Mat region = raw(cv::Rect(crop.box.x, crop.box.y, crop.box.width, crop.box.height));
    if (!cv::imwrite(out.string(), region)) throw Error(ErrorKind::IoError, "cannot write '" + out.string() + "'");
  }
  return seg;
}

}  // namespace cellvote::seg
