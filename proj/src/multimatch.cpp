#include "gazebench/multimatch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "gazebench/errors.hpp"

namespace gazebench {

namespace {

constexpr double kDiagonal = std::numbers::sqrt2;  // unit-square diagonal

void require_two_fixations(const Scanpath& s) {
  if (s.fixations.size() < 2) {
    throw ValidationError("MultiMatch undefined for scanpaths shorter than 2");
  }
}

double vector_distance(const SaccadeVector& a, const SaccadeVector& b) {
  const double dx = a.dx - b.dx;
  const double dy = a.dy - b.dy;
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

double angle_between(const SaccadeVector& a, const SaccadeVector& b) {
  const bool a_zero = a.amplitude == 0.0;
  const bool b_zero = b.amplitude == 0.0;
  if (a_zero && b_zero) return 0.0;
  if (a_zero || b_zero) return std::numbers::pi / 2.0;
  const double dot = a.dx * b.dx + a.dy * b.dy;
  const double cross = a.dx * b.dy - a.dy * b.dx;
  return std::atan2(std::abs(cross), dot);
}

std::vector<SaccadeVector> to_saccade_vectors(const Scanpath& s) {
  require_two_fixations(s);
  std::vector<SaccadeVector> vectors;
  vectors.reserve(s.fixations.size() - 1);
  for (std::size_t i = 0; i + 1 < s.fixations.size(); ++i) {
    SaccadeVector v;
    v.dx = s.fixations[i + 1].x - s.fixations[i].x;
    v.dy = s.fixations[i + 1].y - s.fixations[i].y;
    v.amplitude = std::sqrt(v.dx * v.dx + v.dy * v.dy);
    v.start_fixation_index = static_cast<int>(i);
    vectors.push_back(v);
  }
  return vectors;
}

Scanpath simplify(const Scanpath& s, const MultiMatchConfig& cfg) {
  require_two_fixations(s);
  const double direction_threshold_rad =
      cfg.direction_threshold_deg * std::numbers::pi / 180.0;
  const double amplitude_limit = cfg.amplitude_threshold * kDiagonal;

  Scanpath out = s;
  bool merged = true;
  while (merged && out.fixations.size() >= 3) {
    merged = false;
    for (std::size_t i = 0; i + 2 < out.fixations.size(); ++i) {
      const Fixation& f0 = out.fixations[i];
      const Fixation& f1 = out.fixations[i + 1];
      const Fixation& f2 = out.fixations[i + 2];
      SaccadeVector u{f1.x - f0.x, f1.y - f0.y, 0.0, 0};
      SaccadeVector v{f2.x - f1.x, f2.y - f1.y, 0.0, 0};
      u.amplitude = std::sqrt(u.dx * u.dx + u.dy * u.dy);
      v.amplitude = std::sqrt(v.dx * v.dx + v.dy * v.dy);

      const bool near_parallel = angle_between(u, v) < direction_threshold_rad;
      const bool both_short = u.amplitude < amplitude_limit && v.amplitude < amplitude_limit;
      const bool brief = f1.duration_ms < cfg.duration_threshold_ms;
      if ((near_parallel || both_short) && brief) {
        out.fixations[i + 2].duration_ms += f1.duration_ms;
        out.fixations.erase(out.fixations.begin() + static_cast<std::ptrdiff_t>(i + 1));
        merged = true;
        break;
      }
    }
  }
  return out;
}

std::vector<std::pair<int, int>> align(const std::vector<SaccadeVector>& a,
                                       const std::vector<SaccadeVector>& b) {
  if (a.empty() || b.empty()) {
    throw ValidationError("align: saccade vector lists must be non-empty");
  }
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  std::vector<double> cost(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      cost[i * m + j] = vector_distance(a[i], b[j]);
    }
  }

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> best(n * m, kInf);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double prev = 0.0;
      if (i > 0 || j > 0) {
        prev = kInf;
        if (i > 0 && j > 0) prev = std::min(prev, best[(i - 1) * m + (j - 1)]);
        if (i > 0) prev = std::min(prev, best[(i - 1) * m + j]);
        if (j > 0) prev = std::min(prev, best[i * m + (j - 1)]);
      }
      best[i * m + j] = prev + cost[i * m + j];
    }
  }

  // backtrack, preferring the diagonal on ties
  std::vector<std::pair<int, int>> path;
  std::size_t i = n - 1, j = m - 1;
  path.emplace_back(static_cast<int>(i), static_cast<int>(j));
  while (i > 0 || j > 0) {
    double diag = kInf, up = kInf, left = kInf;
    if (i > 0 && j > 0) diag = best[(i - 1) * m + (j - 1)];
    if (i > 0) up = best[(i - 1) * m + j];
    if (j > 0) left = best[i * m + (j - 1)];
    if (diag <= up && diag <= left) {
      --i;
      --j;
    } else if (up <= left) {
      --i;
    } else {
      --j;
    }
    path.emplace_back(static_cast<int>(i), static_cast<int>(j));
  }
  std::reverse(path.begin(), path.end());
  return path;
}

MultiMatchScores multimatch_scores(const Scanpath& p, const Scanpath& g,
                                   const MultiMatchConfig& cfg) {
  require_two_fixations(p);
  require_two_fixations(g);

  const Scanpath sp = cfg.simplify ? simplify(p, cfg) : p;
  const Scanpath sg = cfg.simplify ? simplify(g, cfg) : g;

  const std::vector<SaccadeVector> u = to_saccade_vectors(sp);
  const std::vector<SaccadeVector> v = to_saccade_vectors(sg);
  const std::vector<std::pair<int, int>> pairs = align(u, v);

  double shape = 0.0, direction = 0.0, length = 0.0, position = 0.0, duration = 0.0;
  for (const auto& [pi, gi] : pairs) {
    const SaccadeVector& a = u[static_cast<std::size_t>(pi)];
    const SaccadeVector& b = v[static_cast<std::size_t>(gi)];
    const Fixation& fa = sp.fixations[static_cast<std::size_t>(a.start_fixation_index)];
    const Fixation& fb = sg.fixations[static_cast<std::size_t>(b.start_fixation_index)];

    shape += 1.0 - vector_distance(a, b) / (2.0 * kDiagonal);
    length += 1.0 - std::abs(a.amplitude - b.amplitude) / kDiagonal;
    direction += 1.0 - angle_between(a, b) / std::numbers::pi;
    const double fdx = fa.x - fb.x;
    const double fdy = fa.y - fb.y;
    position += 1.0 - std::sqrt(fdx * fdx + fdy * fdy) / kDiagonal;
    duration += 1.0 - std::abs(fa.duration_ms - fb.duration_ms) /
                          std::max(fa.duration_ms, fb.duration_ms);
  }

  const double count = static_cast<double>(pairs.size());
  MultiMatchScores scores;
  scores.shape = shape / count;
  scores.direction = direction / count;
  scores.length = length / count;
  scores.position = position / count;
  scores.duration = duration / count;
  scores.mean_mm = (scores.shape + scores.direction + scores.length + scores.position +
                    scores.duration) /
                   5.0;
  return scores;
}

}  // namespace gazebench
