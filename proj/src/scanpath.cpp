#include "gazebench/scanpath.hpp"

#include <cmath>
#include <string>

#include "gazebench/errors.hpp"

namespace gazebench {

void validate_scanpath(const Scanpath& s) {
  if (s.image_width <= 0 || s.image_height <= 0) {
    throw ValidationError("scanpath '" + s.case_id + "': image dimensions must be positive");
  }
  for (std::size_t i = 0; i < s.fixations.size(); ++i) {
    const Fixation& f = s.fixations[i];
    if (!(f.x >= 0.0 && f.x <= 1.0) || !(f.y >= 0.0 && f.y <= 1.0)) {
      throw ValidationError("scanpath '" + s.case_id + "': fixation " + std::to_string(i) +
                            " has coordinates outside [0,1]");
    }
    if (!(f.duration_ms > 0.0) || !std::isfinite(f.duration_ms)) {
      throw ValidationError("scanpath '" + s.case_id + "': fixation " + std::to_string(i) +
                            " has non-positive duration");
    }
  }
}

Scanpath normalize_scanpath(const std::vector<PixelFixation>& pixel_fixations,
                            int image_width, int image_height,
                            std::string case_id, std::string report_text) {
  if (image_width <= 0 || image_height <= 0) {
    throw ValidationError("normalize_scanpath: image dimensions must be positive");
  }
  Scanpath s;
  s.case_id = std::move(case_id);
  s.image_width = image_width;
  s.image_height = image_height;
  s.report_text = std::move(report_text);
  s.fixations.reserve(pixel_fixations.size());
  const double w = static_cast<double>(image_width);
  const double h = static_cast<double>(image_height);
  for (std::size_t i = 0; i < pixel_fixations.size(); ++i) {
    const PixelFixation& p = pixel_fixations[i];
    if (!std::isfinite(p.x_px) || p.x_px < 0.0 || p.x_px > w) {
      throw ValidationError("fixation " + std::to_string(i) + ": x_px " +
                            std::to_string(p.x_px) + " outside [0, " + std::to_string(image_width) + "]");
    }
    if (!std::isfinite(p.y_px) || p.y_px < 0.0 || p.y_px > h) {
      throw ValidationError("fixation " + std::to_string(i) + ": y_px " +
                            std::to_string(p.y_px) + " outside [0, " + std::to_string(image_height) + "]");
    }
    if (!std::isfinite(p.duration_ms) || !(p.duration_ms > 0.0)) {
      throw ValidationError("fixation " + std::to_string(i) + ": duration must be positive");
    }
    s.fixations.push_back({p.x_px / w, p.y_px / h, p.duration_ms});
  }
  return s;
}

FixationQuadSequence pad_truncate(const Scanpath& s, int max_fixations) {
  if (max_fixations < 1) {
    throw ValidationError("pad_truncate: max_fixations must be >= 1");
  }
  FixationQuadSequence seq;
  seq.rows.resize(static_cast<std::size_t>(max_fixations));
  const std::size_t keep =
      std::min(s.fixations.size(), static_cast<std::size_t>(max_fixations));
  for (std::size_t i = 0; i < keep; ++i) {
    const Fixation& f = s.fixations[i];
    seq.rows[i] = {f.x, f.y, f.duration_ms, 0};
  }
  for (std::size_t i = keep; i < seq.rows.size(); ++i) {
    seq.rows[i] = {0.0, 0.0, 0.0, 1};
  }
  return seq;
}

int valid_length(const FixationQuadSequence& seq) {
  int n = 0;
  for (const QuadRow& row : seq.rows) {
    if (row.v != 0) break;
    ++n;
  }
  return n;
}

std::vector<Fixation> strip_padding(const FixationQuadSequence& seq) {
  std::vector<Fixation> out;
  const int n = valid_length(seq);
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const QuadRow& row = seq.rows[static_cast<std::size_t>(i)];
    out.push_back({row.x, row.y, row.t});
  }
  return out;
}

double total_duration(const Scanpath& s) {
  double sum = 0.0;
  for (const Fixation& f : s.fixations) sum += f.duration_ms;
  return sum;
}

}  // namespace gazebench
