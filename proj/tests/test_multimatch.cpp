#include <doctest.h>

#include <cmath>

#include "gazebench/errors.hpp"
#include "gazebench/multimatch.hpp"
#include "gazebench/rng.hpp"
#include "oracles.hpp"

using namespace gazebench;

namespace {

Scanpath path_from_points(std::vector<std::pair<double, double>> pts, double duration = 200.0) {
  Scanpath s;
  s.image_width = s.image_height = 100;
  for (const auto& [x, y] : pts) s.fixations.push_back({x, y, duration});
  return s;
}

// large non-collinear saccades and long fixations: no simplification fires
Scanpath zigzag(double duration_scale) {
  Scanpath s;
  s.image_width = s.image_height = 100;
  s.fixations = {{0.1, 0.1, 400 * duration_scale},
                 {0.5, 0.1, 500 * duration_scale},
                 {0.5, 0.6, 600 * duration_scale},
                 {0.9, 0.6, 700 * duration_scale}};
  return s;
}

}  // namespace

TEST_CASE("saccade vectors from fixations") {
  const Scanpath s = path_from_points({{0.0, 0.0}, {0.3, 0.4}});
  const auto v = to_saccade_vectors(s);
  REQUIRE(v.size() == 1);
  CHECK(v[0].dx == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(v[0].dy == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(v[0].amplitude == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(v[0].start_fixation_index == 0);

  const Scanpath collinear = path_from_points({{0.1, 0.1}, {0.2, 0.2}, {0.3, 0.3}});
  const auto cv = to_saccade_vectors(collinear);
  REQUIRE(cv.size() == 2);
  CHECK(angle_between(cv[0], cv[1]) == doctest::Approx(0.0).epsilon(1e-12));

  CHECK_THROWS_WITH_AS(to_saccade_vectors(path_from_points({{0.5, 0.5}})),
                       doctest::Contains("shorter than 2"), ValidationError);
}

TEST_CASE("amplitude matches the displacement norm") {
  Rng rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    const auto v = to_saccade_vectors(oracles::random_scanpath(rng, 6));
    for (const SaccadeVector& sv : v) {
      CHECK(std::abs(sv.amplitude - std::hypot(sv.dx, sv.dy)) < 1e-12);
    }
  }
}

TEST_CASE("simplify with zero thresholds is the identity") {
  Rng rng(43);
  const Scanpath s = oracles::random_scanpath(rng, 8);
  MultiMatchConfig cfg;
  cfg.direction_threshold_deg = 0.0;
  cfg.amplitude_threshold = 0.0;
  cfg.duration_threshold_ms = 0.0;
  const Scanpath out = simplify(s, cfg);
  REQUIRE(out.fixations.size() == s.fixations.size());
  for (std::size_t i = 0; i < s.fixations.size(); ++i) {
    CHECK(out.fixations[i].x == s.fixations[i].x);
    CHECK(out.fixations[i].duration_ms == s.fixations[i].duration_ms);
  }
}

TEST_CASE("collinear short saccades with a brief fixation merge") {
  Scanpath s;
  s.image_width = s.image_height = 100;
  s.fixations = {{0.20, 0.20, 500}, {0.25, 0.20, 100}, {0.30, 0.20, 400}};
  MultiMatchConfig cfg;  // 45 deg, 0.10 diag, 300 ms
  const Scanpath out = simplify(s, cfg);
  REQUIRE(out.fixations.size() == 2);
  const auto v = to_saccade_vectors(out);
  CHECK(v[0].amplitude == doctest::Approx(0.1).epsilon(1e-9));
  // the removed fixation's duration pools into its successor
  CHECK(out.fixations[1].duration_ms == doctest::Approx(500.0).epsilon(1e-12));
  CHECK(out.fixations[0].duration_ms == doctest::Approx(500.0).epsilon(1e-12));
}

TEST_CASE("perpendicular large saccades with long fixations stay unchanged") {
  Scanpath s;
  s.image_width = s.image_height = 100;
  s.fixations = {{0.1, 0.1, 500}, {0.6, 0.1, 500}, {0.6, 0.6, 500}};
  const Scanpath out = simplify(s, MultiMatchConfig{});
  CHECK(out.fixations.size() == 3);
}

TEST_CASE("alignment of identical sequences is the diagonal") {
  Rng rng(47);
  const auto v = oracles::random_vectors(rng, 3);
  const auto path = align(v, v);
  REQUIRE(path.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(path[static_cast<std::size_t>(i)].first == i);
    CHECK(path[static_cast<std::size_t>(i)].second == i);
  }
}

TEST_CASE("single-vector alignment") {
  Rng rng(53);
  const auto a = oracles::random_vectors(rng, 1);
  const auto b = oracles::random_vectors(rng, 1);
  const auto path = align(a, b);
  REQUIRE(path.size() == 1);
  CHECK(path[0] == std::pair<int, int>{0, 0});
  CHECK_THROWS_AS(align({}, b), ValidationError);
}

TEST_CASE("alignment cost equals the brute-force minimum") {
  Rng rng(59);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 1 + static_cast<int>(rng.index(5));
    const int m = 1 + static_cast<int>(rng.index(5));
    const auto a = oracles::random_vectors(rng, n);
    const auto b = oracles::random_vectors(rng, m);
    const auto path = align(a, b);
    CHECK(oracles::path_cost(a, b, path) ==
          doctest::Approx(oracles::brute_force_alignment_cost(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("identical scanpaths score exactly one everywhere") {
  Rng rng(61);
  for (int trial = 0; trial < 20; ++trial) {
    const Scanpath s = oracles::random_scanpath(rng, 2 + static_cast<int>(rng.index(10)));
    const MultiMatchScores scores = multimatch_scores(s, s);
    CHECK(scores.shape == 1.0);
    CHECK(scores.direction == 1.0);
    CHECK(scores.length == 1.0);
    CHECK(scores.position == 1.0);
    CHECK(scores.duration == 1.0);
    CHECK(scores.mean_mm == 1.0);
  }
}

TEST_CASE("doubling every duration gives duration 0.5 and mean 0.9") {
  const Scanpath p = zigzag(1.0);
  const Scanpath g = zigzag(2.0);
  const MultiMatchScores scores = multimatch_scores(p, g);
  CHECK(scores.shape == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(scores.direction == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(scores.length == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(scores.position == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(scores.duration == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(scores.mean_mm == doctest::Approx(0.9).epsilon(1e-9));
}

TEST_CASE("scores are symmetric") {
  Rng rng(67);
  for (int trial = 0; trial < 40; ++trial) {
    const Scanpath p = oracles::random_scanpath(rng, 2 + static_cast<int>(rng.index(8)));
    const Scanpath g = oracles::random_scanpath(rng, 2 + static_cast<int>(rng.index(8)));
    const MultiMatchScores pg = multimatch_scores(p, g);
    const MultiMatchScores gp = multimatch_scores(g, p);
    CHECK(std::abs(pg.shape - gp.shape) < 1e-9);
    CHECK(std::abs(pg.direction - gp.direction) < 1e-9);
    CHECK(std::abs(pg.length - gp.length) < 1e-9);
    CHECK(std::abs(pg.position - gp.position) < 1e-9);
    CHECK(std::abs(pg.duration - gp.duration) < 1e-9);
    CHECK(std::abs(pg.mean_mm - gp.mean_mm) < 1e-9);
  }
}

TEST_CASE("all scores live in the unit interval without clamping") {
  Rng rng(71);
  for (int trial = 0; trial < 200; ++trial) {
    const Scanpath p = oracles::random_scanpath(rng, 2 + static_cast<int>(rng.index(12)));
    const Scanpath g = oracles::random_scanpath(rng, 2 + static_cast<int>(rng.index(12)));
    const MultiMatchScores m = multimatch_scores(p, g);
    for (const double v : {m.shape, m.direction, m.length, m.position, m.duration, m.mean_mm}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    CHECK(std::abs(m.mean_mm -
                   (m.shape + m.direction + m.length + m.position + m.duration) / 5.0) < 1e-12);
  }
}

TEST_CASE("joint translation changes only position") {
  Rng rng(73);
  MultiMatchConfig cfg;
  cfg.simplify = false;
  for (int trial = 0; trial < 20; ++trial) {
    Scanpath p = oracles::random_scanpath(rng, 5);
    Scanpath g = oracles::random_scanpath(rng, 5);
    for (Scanpath* s : {&p, &g}) {
      for (Fixation& f : s->fixations) {
        f.x = 0.1 + 0.4 * f.x;
        f.y = 0.1 + 0.4 * f.y;
      }
    }
    const MultiMatchScores before = multimatch_scores(p, g, cfg);
    Scanpath p2 = p, g2 = g;
    for (Scanpath* s : {&p2, &g2}) {
      for (Fixation& f : s->fixations) {
        f.x += 0.3;
        f.y += 0.3;
      }
    }
    const MultiMatchScores after = multimatch_scores(p2, g2, cfg);
    CHECK(after.shape == doctest::Approx(before.shape).epsilon(1e-9));
    CHECK(after.direction == doctest::Approx(before.direction).epsilon(1e-9));
    CHECK(after.length == doctest::Approx(before.length).epsilon(1e-9));
    CHECK(after.duration == doctest::Approx(before.duration).epsilon(1e-9));
    CHECK(after.position == doctest::Approx(before.position).epsilon(1e-9));
  }
}

TEST_CASE("zero-amplitude saccade conventions") {
  SaccadeVector zero{0.0, 0.0, 0.0, 0};
  SaccadeVector unit{0.3, 0.0, 0.3, 0};
  CHECK(angle_between(zero, zero) == 0.0);
  CHECK(angle_between(zero, unit) == doctest::Approx(std::numbers::pi / 2).epsilon(1e-12));

  // repeated identical fixations on both sides: direction scores 1
  const Scanpath p = path_from_points({{0.4, 0.4}, {0.4, 0.4}});
  const Scanpath g = path_from_points({{0.6, 0.6}, {0.6, 0.6}});
  MultiMatchConfig cfg;
  cfg.simplify = false;
  CHECK(multimatch_scores(p, g, cfg).direction == 1.0);

  // zero against nonzero: angle pi/2 gives direction 0.5
  const Scanpath g2 = path_from_points({{0.2, 0.2}, {0.6, 0.6}});
  CHECK(multimatch_scores(p, g2, cfg).direction == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("multimatch requires two fixations on both sides") {
  const Scanpath ok = path_from_points({{0.1, 0.1}, {0.5, 0.5}});
  const Scanpath bad = path_from_points({{0.1, 0.1}});
  CHECK_THROWS_AS(multimatch_scores(ok, bad, {}), ValidationError);
  CHECK_THROWS_AS(multimatch_scores(bad, ok, {}), ValidationError);
}
