#include "gazebench/stats.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "gazebench/csv.hpp"
#include "gazebench/errors.hpp"
#include "gazebench/rng.hpp"

namespace gazebench {

namespace {

double mean_of(const std::vector<double>& xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double pearson_r(const std::vector<double>& xs, const std::vector<double>& ys) {
  const double mx = mean_of(xs);
  const double my = mean_of(ys);
  double cov = 0.0, vx = 0.0, vy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    cov += dx * dy;
    vx += dx * dx;
    vy += dy * dy;
  }
  if (vx == 0.0 || vy == 0.0) {
    throw ValidationError("correlation undefined: zero variance input");
  }
  return cov / std::sqrt(vx * vy);
}

double two_sided_t_pvalue(double r, std::size_t n) {
  const double denom = 1.0 - r * r;
  if (denom <= 0.0) return 0.0;
  const double df = static_cast<double>(n - 2);
  const double t = r * std::sqrt(df / denom);
  boost::math::students_t_distribution<double> dist(df);
  return 2.0 * boost::math::cdf(dist, -std::abs(t));
}

double exact_permutation_pvalue(const std::vector<double>& xs, std::vector<double> ys,
                                double observed_r) {
  std::sort(ys.begin(), ys.end());
  const double target = std::abs(observed_r) - 1e-12;
  std::size_t hits = 0, total = 0;
  do {
    ++total;
    if (std::abs(pearson_r(xs, ys)) >= target) ++hits;
  } while (std::next_permutation(ys.begin(), ys.end()));
  return static_cast<double>(hits) / static_cast<double>(total);
}

CorrelationResult correlate(const std::vector<double>& xs, const std::vector<double>& ys,
                            PValueMethod method) {
  if (xs.size() != ys.size()) {
    throw ValidationError("correlation: input length mismatch (" + std::to_string(xs.size()) +
                          " vs " + std::to_string(ys.size()) + ")");
  }
  if (xs.size() < 3) {
    throw ValidationError("correlation requires at least 3 observations");
  }
  CorrelationResult res;
  res.r = pearson_r(xs, ys);
  if (method == PValueMethod::exact_permutation) {
    if (xs.size() > 10) {
      throw ValidationError("exact permutation p-value limited to n <= 10");
    }
    res.p_value = exact_permutation_pvalue(xs, ys, res.r);
  } else {
    res.p_value = two_sided_t_pvalue(res.r, xs.size());
  }
  return res;
}

}  // namespace

CorrelationResult pearson(const std::vector<double>& xs, const std::vector<double>& ys,
                          PValueMethod method) {
  return correlate(xs, ys, method);
}

std::vector<double> average_ranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    // positions i..j share the value; assign the mean rank of the span
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

CorrelationResult spearman(const std::vector<double>& xs, const std::vector<double>& ys,
                           PValueMethod method) {
  if (xs.size() != ys.size()) {
    throw ValidationError("correlation: input length mismatch (" + std::to_string(xs.size()) +
                          " vs " + std::to_string(ys.size()) + ")");
  }
  if (xs.size() < 3) {
    throw ValidationError("correlation requires at least 3 observations");
  }
  return correlate(average_ranks(xs), average_ranks(ys), method);
}

DifficultyRanking rank_difficulty(
    const std::vector<std::pair<std::string, double>>& case_durations) {
  if (case_durations.empty()) {
    throw ValidationError("rank_difficulty: no cases");
  }
  DifficultyRanking ranking;
  ranking.entries.reserve(case_durations.size());
  for (const auto& [case_id, duration] : case_durations) {
    ranking.entries.push_back({case_id, duration, 0});
  }
  std::sort(ranking.entries.begin(), ranking.entries.end(),
            [](const DifficultyEntry& a, const DifficultyEntry& b) {
              if (a.total_duration_ms != b.total_duration_ms) {
                return a.total_duration_ms > b.total_duration_ms;
              }
              return a.case_id < b.case_id;
            });
  for (std::size_t i = 0; i < ranking.entries.size(); ++i) {
    ranking.entries[i].rank = static_cast<int>(i + 1);
  }
  return ranking;
}

std::pair<std::vector<DifficultyEntry>, std::vector<DifficultyEntry>> difficulty_extremes(
    const DifficultyRanking& ranking, int k) {
  const int n = static_cast<int>(ranking.entries.size());
  if (k < 0 || k > n) {
    throw ValidationError("difficulty_extremes: k = " + std::to_string(k) +
                          " exceeds case count " + std::to_string(n));
  }
  std::vector<DifficultyEntry> top(ranking.entries.begin(), ranking.entries.begin() + k);
  std::vector<DifficultyEntry> bottom(ranking.entries.end() - k, ranking.entries.end());
  std::reverse(bottom.begin(), bottom.end());
  return {top, bottom};
}

ConfidenceInterval bootstrap_ci(const std::vector<double>& values, int n_resamples,
                                double level, std::uint64_t seed) {
  if (values.empty()) {
    throw ValidationError("bootstrap_ci: empty values");
  }
  if (!(level > 0.0 && level < 1.0)) {
    throw ValidationError("bootstrap_ci: level must be in (0, 1)");
  }
  if (n_resamples < 1) {
    throw ValidationError("bootstrap_ci: n_resamples must be >= 1");
  }
  const std::size_t n = values.size();
  std::vector<double> resample_means(static_cast<std::size_t>(n_resamples));
  for (int r = 0; r < n_resamples; ++r) {
    Rng rng(derive_stream(seed, static_cast<std::uint64_t>(r)));
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += values[rng.index(n)];
    resample_means[static_cast<std::size_t>(r)] = sum / static_cast<double>(n);
  }
  std::sort(resample_means.begin(), resample_means.end());

  auto quantile = [&](double p) {
    const double h = p * static_cast<double>(resample_means.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= resample_means.size()) return resample_means.back();
    const double frac = h - static_cast<double>(lo);
    return resample_means[lo] + frac * (resample_means[lo + 1] - resample_means[lo]);
  };

  ConfidenceInterval ci;
  ci.point = mean_of(values);
  ci.low = quantile((1.0 - level) / 2.0);
  ci.high = quantile(1.0 - (1.0 - level) / 2.0);
  ci.n_resamples = n_resamples;
  ci.seed = seed;
  return ci;
}

const std::vector<CriterionScale>& human_eval_criteria() {
  static const std::vector<CriterionScale> scales = {
      {"human_like", 0, 1},
      {"comprehensiveness", 1, 5},
      {"redundancy", 1, 5},
  };
  return scales;
}

int HumanEvalTable::count(const std::string& criterion, int rating, RatingSource source) const {
  const auto it = counts.find(criterion);
  if (it == counts.end()) return 0;
  const auto jt = it->second.find(rating);
  if (jt == it->second.end()) return 0;
  return jt->second[source == RatingSource::prediction ? 0 : 1];
}

int HumanEvalTable::criterion_total(const std::string& criterion, RatingSource source) const {
  const auto it = counts.find(criterion);
  if (it == counts.end()) return 0;
  int total = 0;
  for (const auto& [rating, cell] : it->second) {
    total += cell[source == RatingSource::prediction ? 0 : 1];
  }
  return total;
}

HumanEvalTable tabulate_human_eval(const std::vector<RatingRecord>& ratings) {
  HumanEvalTable table;
  for (const CriterionScale& scale : human_eval_criteria()) {
    auto& per_rating = table.counts[scale.name];
    for (int r = scale.min_rating; r <= scale.max_rating; ++r) {
      per_rating[r] = {0, 0};
    }
  }
  for (const RatingRecord& rec : ratings) {
    const auto& scales = human_eval_criteria();
    const auto scale_it =
        std::find_if(scales.begin(), scales.end(),
                     [&](const CriterionScale& s) { return s.name == rec.criterion; });
    if (scale_it == scales.end()) {
      throw ValidationError("unknown criterion '" + rec.criterion + "'");
    }
    if (rec.rating < scale_it->min_rating || rec.rating > scale_it->max_rating) {
      throw ValidationError("rating " + std::to_string(rec.rating) + " outside scale [" +
                            std::to_string(scale_it->min_rating) + ", " +
                            std::to_string(scale_it->max_rating) + "] for criterion '" +
                            rec.criterion + "'");
    }
    table.counts[rec.criterion][rec.rating][rec.source == RatingSource::prediction ? 0 : 1]++;
  }
  return table;
}

std::vector<RatingRecord> parse_ratings_csv(std::istream& in) {
  std::vector<RatingRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (line_no == 1) {
      if (fields.size() != 4 || fields[0] != "video_id" || fields[1] != "source" ||
          fields[2] != "criterion" || fields[3] != "rating") {
        throw ValidationError("ratings CSV line 1: expected header video_id,source,criterion,rating");
      }
      continue;
    }
    const std::string ctx = "ratings CSV line " + std::to_string(line_no);
    if (fields.size() != 4) {
      throw ValidationError(ctx + ": expected 4 fields, got " + std::to_string(fields.size()));
    }
    RatingRecord rec;
    rec.video_id = fields[0];
    if (fields[1] == "prediction") {
      rec.source = RatingSource::prediction;
    } else if (fields[1] == "ground_truth") {
      rec.source = RatingSource::ground_truth;
    } else {
      throw ValidationError(ctx + ": source must be prediction or ground_truth");
    }
    rec.criterion = fields[2];
    rec.rating = static_cast<int>(parse_int_field(fields[3], ctx));
    out.push_back(std::move(rec));
  }
  return out;
}

std::string human_eval_table_to_csv(const HumanEvalTable& table) {
  std::ostringstream out;
  out << "criterion,rating,prediction,ground_truth\n";
  for (const CriterionScale& scale : human_eval_criteria()) {
    const auto it = table.counts.find(scale.name);
    if (it == table.counts.end()) continue;
    for (const auto& [rating, cell] : it->second) {
      out << scale.name << ',' << rating << ',' << cell[0] << ',' << cell[1] << '\n';
    }
  }
  return out.str();
}

std::string ranking_to_csv(const DifficultyRanking& ranking) {
  std::ostringstream out;
  out << "case_id,total_duration_ms,rank\n";
  for (const DifficultyEntry& e : ranking.entries) {
    out << e.case_id << ',' << format_double(e.total_duration_ms) << ',' << e.rank << '\n';
  }
  return out.str();
}

}  // namespace gazebench
