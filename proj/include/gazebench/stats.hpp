#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace gazebench {

struct CorrelationResult {
  double r = 0.0;
  double p_value = 1.0;
};

enum class PValueMethod {
  t_approx,           // two-sided via Student t with n-2 degrees of freedom
  exact_permutation,  // full enumeration, n <= 10 only
};

CorrelationResult pearson(const std::vector<double>& xs, const std::vector<double>& ys,
                          PValueMethod method = PValueMethod::t_approx);

// Pearson on average-ranked data; ties receive the mean of their rank span.
CorrelationResult spearman(const std::vector<double>& xs, const std::vector<double>& ys,
                           PValueMethod method = PValueMethod::t_approx);

// Ranks starting at 1; ties averaged (e.g. [1,2,2,3] -> [1, 2.5, 2.5, 4]).
std::vector<double> average_ranks(const std::vector<double>& values);

struct DifficultyEntry {
  std::string case_id;
  double total_duration_ms = 0.0;
  int rank = 0;  // 1 = longest total duration
};

struct DifficultyRanking {
  std::vector<DifficultyEntry> entries;  // sorted by rank
};

// Descending total duration; ties broken by case_id.
DifficultyRanking rank_difficulty(const std::vector<std::pair<std::string, double>>& case_durations);

// (top k, bottom k). The bottom list runs from rank N upward.
std::pair<std::vector<DifficultyEntry>, std::vector<DifficultyEntry>> difficulty_extremes(
    const DifficultyRanking& ranking, int k);

struct ConfidenceInterval {
  double point = 0.0;
  double low = 0.0;
  double high = 0.0;
  int n_resamples = 0;
  std::uint64_t seed = 0;
};

struct BootstrapConfig {
  int n_resamples = 1000;
  double level = 0.95;
  std::uint64_t seed = 0;
};

// Percentile bootstrap of the mean. Each resample draws its RNG stream from
// (seed, resample index), so results are independent of evaluation order.
ConfidenceInterval bootstrap_ci(const std::vector<double>& values, int n_resamples,
                                double level, std::uint64_t seed);

inline ConfidenceInterval bootstrap_ci(const std::vector<double>& values,
                                       const BootstrapConfig& cfg) {
  return bootstrap_ci(values, cfg.n_resamples, cfg.level, cfg.seed);
}

enum class RatingSource { prediction, ground_truth };

struct RatingRecord {
  std::string video_id;
  RatingSource source = RatingSource::prediction;
  std::string criterion;
  int rating = 0;
};

struct CriterionScale {
  std::string name;
  int min_rating = 0;
  int max_rating = 0;
};

// human_like is 0/1, comprehensiveness and redundancy are 1..5
const std::vector<CriterionScale>& human_eval_criteria();

struct HumanEvalTable {
  // criterion -> rating -> {prediction count, ground-truth count}
  std::map<std::string, std::map<int, std::array<int, 2>>> counts;

  int count(const std::string& criterion, int rating, RatingSource source) const;
  int criterion_total(const std::string& criterion, RatingSource source) const;
};

HumanEvalTable tabulate_human_eval(const std::vector<RatingRecord>& ratings);

// CSV with header video_id,source,criterion,rating
std::vector<RatingRecord> parse_ratings_csv(std::istream& in);

std::string human_eval_table_to_csv(const HumanEvalTable& table);
std::string ranking_to_csv(const DifficultyRanking& ranking);

}  // namespace gazebench
