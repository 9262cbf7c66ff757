#pragma once

#include <utility>
#include <vector>

#include "gazebench/scanpath.hpp"

namespace gazebench {

// Displacement between consecutive fixations, in normalized coordinates.
struct SaccadeVector {
  double dx = 0.0;
  double dy = 0.0;
  double amplitude = 0.0;
  int start_fixation_index = 0;
};

// Each component in [0,1]; mean_mm is the arithmetic mean of the five.
struct MultiMatchScores {
  double shape = 0.0;
  double direction = 0.0;
  double length = 0.0;
  double position = 0.0;
  double duration = 0.0;
  double mean_mm = 0.0;
};

struct MultiMatchConfig {
  double direction_threshold_deg = 45.0;
  double amplitude_threshold = 0.10;  // fraction of the unit-square diagonal
  double duration_threshold_ms = 300.0;
  bool simplify = true;
};

// Angle between saccades in [0, pi]. Zero-zero pairs score 0; one zero
// vector against a nonzero one scores pi/2.
double angle_between(const SaccadeVector& a, const SaccadeVector& b);

// n-1 vectors for n fixations; requires at least 2 fixations.
std::vector<SaccadeVector> to_saccade_vectors(const Scanpath& s);

// Iteratively merges consecutive saccade pairs that are near-parallel or
// both short, whenever the intervening fixation is brief. The removed
// fixation's duration pools into its successor.
Scanpath simplify(const Scanpath& s, const MultiMatchConfig& cfg);

// Minimum-cost monotone alignment of the two vector sequences; cost of a
// cell is the Euclidean norm of the vector difference.
std::vector<std::pair<int, int>> align(const std::vector<SaccadeVector>& a,
                                       const std::vector<SaccadeVector>& b);

// Five-dimension similarity of two scanpaths with at least 2 fixations each.
MultiMatchScores multimatch_scores(const Scanpath& p, const Scanpath& g,
                                   const MultiMatchConfig& cfg = {});

}  // namespace gazebench
