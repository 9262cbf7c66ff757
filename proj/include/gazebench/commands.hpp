#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "gazebench/corpus.hpp"
#include "gazebench/heatmap.hpp"
#include "gazebench/model.hpp"
#include "gazebench/multimatch.hpp"
#include "gazebench/stats.hpp"
#include "gazebench/synthetic.hpp"

namespace gazebench {

struct CaseMetrics {
  std::string case_id;
  double iou = 0.0;
  double cc = 0.0;
  MultiMatchScores mm;
};

struct EvalReport {
  std::vector<CaseMetrics> per_case;
  ConfidenceInterval mean_iou, mean_cc, mean_mm, mean_d_mm;
  double spread = 50.0;
  double iou_threshold = 0.1;
  int bootstrap_n = 1000;
  std::uint64_t seed = 0;
};

nlohmann::json eval_report_to_json(const EvalReport& report);
std::string eval_report_to_csv(const EvalReport& report);

struct EvaluateOptions {
  std::string pred_path;
  std::string gt_path;
  std::string out_prefix;  // writes <prefix>.json and <prefix>.csv when set
  double spread = 50.0;
  double iou_threshold = 0.1;
  int bootstrap_n = 1000;
  std::uint64_t seed = 0;
  int max_fixations = 50;
  MultiMatchConfig mm;
};

EvalReport cmd_evaluate(const EvaluateOptions& options);

struct RankReport {
  DifficultyRanking predicted;
  DifficultyRanking ground_truth;
  CorrelationResult pearson_durations;
  CorrelationResult spearman_ranks;
  std::vector<DifficultyEntry> hardest;   // from the predicted ranking
  std::vector<DifficultyEntry> simplest;  // from the predicted ranking
};

nlohmann::json rank_report_to_json(const RankReport& report);

struct RankOptions {
  std::string pred_path;
  std::string gt_path;
  std::string out_prefix;  // writes <prefix>.json, <prefix>_pred.csv, <prefix>_gt.csv
  int extremes_k = 5;
  int max_fixations = 50;
};

RankReport cmd_rank(const RankOptions& options);

struct TrainCmdOptions {
  std::string corpus_path;
  std::string embeddings_path;
  std::string model_out;
  std::string trace_out;  // loss trace CSV; optional
  std::string config_path;  // JSON overrides for model/training settings
  std::string split = "train";
  int max_fixations = 50;
  std::uint64_t seed = 0;
};

TrainResult cmd_train(const TrainCmdOptions& options);

struct PredictOptions {
  std::string corpus_path;
  std::string embeddings_path;
  std::string model_path;
  std::string out_path;
  std::string split = "test";
  bool deterministic = true;
  std::uint64_t seed = 0;
};

Corpus cmd_predict(const PredictOptions& options);

struct SweepOptions {
  std::string pred_path;
  std::string gt_path;
  std::string out_path;  // CSV
  std::vector<double> spreads = {10, 25, 50, 75, 100};
  double iou_threshold = 0.1;
  int bootstrap_n = 1000;
  std::uint64_t seed = 0;
  int max_fixations = 50;
};

SweepCurve cmd_sweep(const SweepOptions& options);

struct TabulateOptions {
  std::string ratings_path;
  std::string out_path;  // CSV
};

HumanEvalTable cmd_tabulate(const TabulateOptions& options);

struct GenSynthOptions {
  int n_train = 64;
  int n_test = 16;
  std::uint64_t seed = 0;
  double noise_scale = 0.02;
  int max_fixations = 50;
  int embed_dim = 64;
  std::string corpus_out;
  std::string embeddings_out;
};

SyntheticCorpus cmd_gen_synth(const GenSynthOptions& options);

// Model/training settings from a JSON config file; missing keys keep
// defaults.
struct RunSettings {
  GazeModelConfig model;
  TrainConfig training;
};
RunSettings load_run_settings(const std::string& path);

}  // namespace gazebench
