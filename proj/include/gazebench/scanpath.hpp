#pragma once

#include <string>
#include <vector>

namespace gazebench {

// One gaze pause. Coordinates are normalized to [0,1] of the image extent,
// duration is milliseconds and strictly positive.
struct Fixation {
  double x = 0.0;
  double y = 0.0;
  double duration_ms = 0.0;
};

// Ordered fixation sequence for one case. Pixel dimensions are retained so
// heatmap rendering can go back to pixel space; no operation reorders
// fixations.
struct Scanpath {
  std::string case_id;
  int image_width = 0;
  int image_height = 0;
  std::vector<Fixation> fixations;
  std::string report_text;
};

struct PixelFixation {
  double x_px = 0.0;
  double y_px = 0.0;
  double duration_ms = 0.0;
};

// One row of the model's fixed-length representation. v = 1 marks padding;
// padding rows carry the (0,0,0) sentinel.
struct QuadRow {
  double x = 0.0;
  double y = 0.0;
  double t = 0.0;  // milliseconds
  int v = 0;
};

// Exactly max_fixations rows; valid rows form a contiguous prefix.
struct FixationQuadSequence {
  std::vector<QuadRow> rows;
};

// Throws ValidationError when any invariant is violated.
void validate_scanpath(const Scanpath& s);

// Maps pixel fixations onto [0,1]^2. Rejects out-of-bounds coordinates and
// non-positive durations, naming the offending fixation index.
Scanpath normalize_scanpath(const std::vector<PixelFixation>& pixel_fixations,
                            int image_width, int image_height,
                            std::string case_id = {},
                            std::string report_text = {});

// Pads with (0,0,0,1) rows up to max_fixations, or truncates beyond it.
FixationQuadSequence pad_truncate(const Scanpath& s, int max_fixations);

// Number of leading valid rows.
int valid_length(const FixationQuadSequence& seq);

// The valid prefix as fixations.
std::vector<Fixation> strip_padding(const FixationQuadSequence& seq);

// Sum of fixation durations in milliseconds; 0 for an empty scanpath.
double total_duration(const Scanpath& s);

}  // namespace gazebench
