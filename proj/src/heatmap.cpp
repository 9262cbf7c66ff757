#include "gazebench/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gazebench/csv.hpp"
#include "gazebench/errors.hpp"
#include "gazebench/parallel.hpp"

namespace gazebench {

FixationHeatmap render_heatmap(const Scanpath& s, double spread_px) {
  if (s.fixations.empty()) {
    throw ValidationError("cannot render heatmap of empty scanpath");
  }
  if (!(spread_px > 0.0)) {
    throw ValidationError("render_heatmap: spread must be positive");
  }
  validate_scanpath(s);

  const int w = s.image_width;
  const int h = s.image_height;
  FixationHeatmap map;
  map.width = w;
  map.height = h;
  map.values.assign(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0.0);

  const double sigma = spread_px;
  const double inv_two_sigma_sq = 1.0 / (2.0 * sigma * sigma);
  const double radius = std::max(4.0 * sigma, 1.0);

  std::vector<double> wx, wy;
  for (const Fixation& f : s.fixations) {
    // pixel (r, c) has center (c + 0.5, r + 0.5)
    const double cx = f.x * static_cast<double>(w);
    const double cy = f.y * static_cast<double>(h);
    const int c0 = std::max(0, static_cast<int>(std::ceil(cx - radius - 0.5)));
    const int c1 = std::min(w - 1, static_cast<int>(std::floor(cx + radius - 0.5)));
    const int r0 = std::max(0, static_cast<int>(std::ceil(cy - radius - 0.5)));
    const int r1 = std::min(h - 1, static_cast<int>(std::floor(cy + radius - 0.5)));
    if (c0 > c1 || r0 > r1) continue;

    wx.resize(static_cast<std::size_t>(c1 - c0 + 1));
    wy.resize(static_cast<std::size_t>(r1 - r0 + 1));
    for (int c = c0; c <= c1; ++c) {
      const double d = (static_cast<double>(c) + 0.5) - cx;
      wx[static_cast<std::size_t>(c - c0)] = std::exp(-d * d * inv_two_sigma_sq);
    }
    for (int r = r0; r <= r1; ++r) {
      const double d = (static_cast<double>(r) + 0.5) - cy;
      wy[static_cast<std::size_t>(r - r0)] = std::exp(-d * d * inv_two_sigma_sq);
    }
    for (int r = r0; r <= r1; ++r) {
      const double row_w = f.duration_ms * wy[static_cast<std::size_t>(r - r0)];
      double* row = map.values.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(w);
      for (int c = c0; c <= c1; ++c) {
        row[c] += row_w * wx[static_cast<std::size_t>(c - c0)];
      }
    }
  }

  const double peak = *std::max_element(map.values.begin(), map.values.end());
  if (!(peak > 0.0)) {
    throw ValidationError("render_heatmap: all kernel mass fell outside the grid");
  }
  for (double& v : map.values) v /= peak;
  return map;
}

std::vector<std::uint8_t> binary_mask(const FixationHeatmap& h, double threshold) {
  std::vector<std::uint8_t> mask(h.values.size());
  for (std::size_t i = 0; i < h.values.size(); ++i) {
    mask[i] = h.values[i] >= threshold ? 1 : 0;
  }
  return mask;
}

double heatmap_iou(const FixationHeatmap& a, const FixationHeatmap& b, double threshold) {
  if (a.width != b.width || a.height != b.height) {
    throw ValidationError("heatmap_iou: dimension mismatch");
  }
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ValidationError("heatmap_iou: threshold must be in (0, 1)");
  }
  std::size_t intersection = 0, union_count = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const bool in_a = a.values[i] >= threshold;
    const bool in_b = b.values[i] >= threshold;
    intersection += (in_a && in_b) ? 1 : 0;
    union_count += (in_a || in_b) ? 1 : 0;
  }
  if (union_count == 0) return 1.0;
  return static_cast<double>(intersection) / static_cast<double>(union_count);
}

double heatmap_cc(const FixationHeatmap& a, const FixationHeatmap& b) {
  if (a.width != b.width || a.height != b.height) {
    throw ValidationError("heatmap_cc: dimension mismatch");
  }
  const std::size_t n = a.values.size();
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a.values[i];
    mb += b.values[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a.values[i] - ma;
    const double db = b.values[i] - mb;
    cov += da * db;
    va += da * da;
    vb += db * db;
  }
  if (va == 0.0 || vb == 0.0) {
    throw ValidationError("constant heatmap has undefined CC");
  }
  return cov / std::sqrt(va * vb);
}

SweepCurve spread_sweep(const std::vector<std::pair<Scanpath, Scanpath>>& pairs,
                        const std::vector<double>& spreads, double threshold,
                        const BootstrapConfig& bootstrap) {
  if (pairs.empty()) {
    throw ValidationError("spread_sweep: no scanpath pairs");
  }
  if (spreads.empty()) {
    throw ValidationError("spread_sweep: no spread values");
  }
  for (std::size_t i = 0; i < spreads.size(); ++i) {
    if (!(spreads[i] > 0.0)) {
      throw ValidationError("spread_sweep: spreads must be positive");
    }
    if (i > 0 && !(spreads[i] > spreads[i - 1])) {
      throw ValidationError("spread_sweep: spreads must be strictly increasing");
    }
  }

  SweepCurve curve;
  curve.spreads = spreads;
  curve.iou_means.resize(spreads.size());
  curve.ci_low.resize(spreads.size());
  curve.ci_high.resize(spreads.size());

  for (std::size_t si = 0; si < spreads.size(); ++si) {
    std::vector<double> ious(pairs.size());
    parallel_for(pairs.size(), [&](std::size_t pi) {
      const auto& [pred, gt] = pairs[pi];
      try {
        const FixationHeatmap hp = render_heatmap(pred, spreads[si]);
        const FixationHeatmap hg = render_heatmap(gt, spreads[si]);
        ious[pi] = heatmap_iou(hp, hg, threshold);
      } catch (const ValidationError& e) {
        throw ValidationError("case '" + gt.case_id + "': " + e.what());
      }
    });
    const ConfidenceInterval ci = bootstrap_ci(ious, bootstrap);
    curve.iou_means[si] = ci.point;
    curve.ci_low[si] = ci.low;
    curve.ci_high[si] = ci.high;
  }
  return curve;
}

std::string sweep_curve_to_csv(const SweepCurve& curve) {
  std::ostringstream out;
  out << "spread,mean_iou,ci_low,ci_high\n";
  for (std::size_t i = 0; i < curve.spreads.size(); ++i) {
    out << format_double(curve.spreads[i]) << ',' << format_double(curve.iou_means[i]) << ','
        << format_double(curve.ci_low[i]) << ',' << format_double(curve.ci_high[i]) << '\n';
  }
  return out.str();
}

}  // namespace gazebench
