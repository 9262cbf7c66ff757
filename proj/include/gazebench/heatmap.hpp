#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gazebench/scanpath.hpp"
#include "gazebench/stats.hpp"

namespace gazebench {

// Row-major non-negative intensity grid, max-normalized so the peak is 1.0.
struct FixationHeatmap {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  double at(int row, int col) const {
    return values[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
                  static_cast<std::size_t>(col)];
  }
};

// Sums one isotropic Gaussian kernel per fixation (sigma = spread pixels,
// amplitude = duration), then divides by the grid maximum. Kernels are
// truncated at 4 sigma; the nearest pixel is always covered.
FixationHeatmap render_heatmap(const Scanpath& s, double spread_px);

// Pixels at or above threshold (fraction of the map maximum).
std::vector<std::uint8_t> binary_mask(const FixationHeatmap& h, double threshold);

// |A and B| / |A or B| after binarizing both maps; 1.0 when both masks are
// empty.
double heatmap_iou(const FixationHeatmap& a, const FixationHeatmap& b, double threshold);

// Pearson correlation over flattened pixel values.
double heatmap_cc(const FixationHeatmap& a, const FixationHeatmap& b);

struct SweepCurve {
  std::vector<double> spreads;
  std::vector<double> iou_means;
  std::vector<double> ci_low;
  std::vector<double> ci_high;
};

// Mean IoU with bootstrap bounds per spread, over (prediction, ground truth)
// scanpath pairs. Spreads must be strictly increasing.
SweepCurve spread_sweep(const std::vector<std::pair<Scanpath, Scanpath>>& pairs,
                        const std::vector<double>& spreads, double threshold,
                        const BootstrapConfig& bootstrap);

// Columns: spread,mean_iou,ci_low,ci_high
std::string sweep_curve_to_csv(const SweepCurve& curve);

}  // namespace gazebench
