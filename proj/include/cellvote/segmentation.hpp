#pragma once

// Cell extraction: two-phase Chan-Vese level-set segmentation, small-object
// removal and per-component crop extraction.

#include <filesystem>
#include <string>
#include <vector>

#include "cellvote/image.hpp"

namespace cellvote::seg {

enum class Foreground { Darker, Brighter };
enum class Initialization { Checkerboard, Circle };

struct ChanVeseParams {
  double mu = 0.2;            // contour length weight
  double nu = 0.0;            // area weight
  double lambda_inside = 1.0;
  double lambda_outside = 1.0;
  double epsilon = 1.0;       // Heaviside / delta regularisation width, pixels
  double time_step = 0.5;     // initial step; halved while the energy would rise
  int max_iter = 1000;
  double tol = 1e-4;          // relative energy change that counts as converged
  Initialization init = Initialization::Checkerboard;
  double checker_period = 10.0;  // pixels per checkerboard cell pair
  Foreground foreground = Foreground::Darker;
};

struct LevelSetState {
  std::vector<double> phi;  // same shape as the image, > 0 inside
  double c_inside = 0.0;
  double c_outside = 0.0;
  double mu = 0.2;
  int iteration = 0;
  double energy = 0.0;
};

struct ChanVeseResult {
  BinaryMask mask;
  LevelSetState state;
  std::vector<double> energy_history;  // energy before the first step, then after each
  bool converged = false;
};

// Throws Error(InvalidArgument) for mu <= 0, max_iter < 1 or intensities
// outside [0, 1]; Error(NonFiniteEnergy) if the iteration blows up. A flat
// image has no contour and returns an empty mask after zero iterations.
ChanVeseResult chan_vese(const GrayImage& image, const ChanVeseParams& params = {});

struct BoundingBox {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;

  bool operator==(const BoundingBox&) const = default;
};

struct Component {
  std::vector<std::pair<int, int>> pixels;  // (x, y)
  BoundingBox box;
};

// 8-connected components ordered by their first pixel in raster order.
std::vector<Component> connected_components(const BinaryMask& mask);

BinaryMask remove_small_objects(const BinaryMask& mask, int min_area);

struct CellCrop {
  std::string item_id;
  BoundingBox box;   // padded, clamped to the source image
  BinaryMask mask;   // component pixels inside box
  int area = 0;
  std::string source_image_id;
};

// One crop per connected component; item ids are "<source>-c<NNNN>" with the
// component index in raster order.
std::vector<CellCrop> extract_cells(const GrayImage& image, const BinaryMask& mask, int pad,
                                    const std::string& source_image_id);

struct SegmentOptions {
  ChanVeseParams chan_vese;
  int min_area = 100;
  int pad = 4;
};

struct SegmentedImage {
  std::string source_image_id;
  ChanVeseResult segmentation;
  std::vector<CellCrop> crops;
};

// load -> chan_vese -> remove_small_objects -> extract_cells, writing one PNG
// per crop (original colours) into out_dir.
SegmentedImage segment_file(const std::filesystem::path& image_path, const std::filesystem::path& out_dir,
                            const SegmentOptions& options);

void write_crop_png(const std::filesystem::path& source_image, const BoundingBox& box,
                    const std::filesystem::path& out);

}  // namespace cellvote::seg
