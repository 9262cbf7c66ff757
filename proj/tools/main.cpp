#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gazebench/commands.hpp"
#include "gazebench/csv.hpp"
#include "gazebench/errors.hpp"

namespace {

using namespace gazebench;

int run(int argc, char** argv) {
  CLI::App app{"gazebench: scanpath prediction and evaluation toolkit"};
  app.require_subcommand(1);

  // evaluate
  EvaluateOptions eval_opts;
  CLI::App* evaluate = app.add_subcommand("evaluate", "heatmap and MultiMatch metrics with bootstrap CIs");
  evaluate->add_option("--input", eval_opts.pred_path, "predictions corpus (JSONL)")->required();
  evaluate->add_option("--gt", eval_opts.gt_path, "ground-truth corpus (JSONL)")->required();
  evaluate->add_option("--out", eval_opts.out_prefix, "output prefix for .json/.csv")->required();
  evaluate->add_option("--spread", eval_opts.spread, "heatmap kernel sigma in pixels");
  evaluate->add_option("--iou-threshold", eval_opts.iou_threshold, "mask threshold as fraction of max");
  evaluate->add_option("--bootstrap-n", eval_opts.bootstrap_n, "bootstrap resamples");
  evaluate->add_option("--seed", eval_opts.seed, "bootstrap seed");
  evaluate->add_option("--max-fixations", eval_opts.max_fixations, "truncate scanpaths to this length");

  // rank
  RankOptions rank_opts;
  CLI::App* rank = app.add_subcommand("rank", "case difficulty ranking and correlations");
  rank->add_option("--input", rank_opts.pred_path, "predictions corpus")->required();
  rank->add_option("--gt", rank_opts.gt_path, "ground-truth corpus")->required();
  rank->add_option("--out", rank_opts.out_prefix, "output prefix")->required();
  rank->add_option("--extremes-k", rank_opts.extremes_k, "number of hardest/simplest cases to list");
  rank->add_option("--max-fixations", rank_opts.max_fixations, "truncate scanpaths to this length");

  // train
  TrainCmdOptions train_opts;
  CLI::App* train_cmd = app.add_subcommand("train", "train the gaze model on a corpus + embeddings");
  train_cmd->add_option("--input", train_opts.corpus_path, "training corpus")->required();
  train_cmd->add_option("--embeddings", train_opts.embeddings_path, "embeddings container")->required();
  train_cmd->add_option("--out", train_opts.model_out, "model container output")->required();
  train_cmd->add_option("--trace", train_opts.trace_out, "per-epoch loss CSV");
  train_cmd->add_option("--config", train_opts.config_path, "JSON settings file");
  train_cmd->add_option("--split", train_opts.split, "train on this split (train|test|all)");
  train_cmd->add_option("--seed", train_opts.seed, "training seed");
  train_cmd->add_option("--max-fixations", train_opts.max_fixations, "model sequence length F");

  // predict
  PredictOptions predict_opts;
  bool stochastic = false;
  CLI::App* predict = app.add_subcommand("predict", "decode scanpaths for a corpus");
  predict->add_option("--input", predict_opts.corpus_path, "corpus providing case ids and dims")->required();
  predict->add_option("--embeddings", predict_opts.embeddings_path, "embeddings container")->required();
  predict->add_option("--model", predict_opts.model_path, "trained model container")->required();
  predict->add_option("--out", predict_opts.out_path, "predictions corpus output")->required();
  predict->add_option("--split", predict_opts.split, "predict this split (train|test|all)");
  predict->add_flag("--stochastic", stochastic, "sample instead of using the means");
  predict->add_option("--seed", predict_opts.seed, "sampling seed");

  // sweep
  SweepOptions sweep_opts;
  std::string spreads_arg;
  CLI::App* sweep = app.add_subcommand("sweep", "IoU across kernel spread levels");
  sweep->add_option("--input", sweep_opts.pred_path, "predictions corpus")->required();
  sweep->add_option("--gt", sweep_opts.gt_path, "ground-truth corpus")->required();
  sweep->add_option("--out", sweep_opts.out_path, "sweep curve CSV")->required();
  sweep->add_option("--spreads", spreads_arg, "comma-separated spreads (default 10,25,50,75,100)");
  sweep->add_option("--iou-threshold", sweep_opts.iou_threshold, "mask threshold");
  sweep->add_option("--bootstrap-n", sweep_opts.bootstrap_n, "bootstrap resamples");
  sweep->add_option("--seed", sweep_opts.seed, "bootstrap seed");
  sweep->add_option("--max-fixations", sweep_opts.max_fixations, "truncate scanpaths");

  // tabulate
  TabulateOptions tab_opts;
  CLI::App* tabulate = app.add_subcommand("tabulate", "tally human-evaluation ratings");
  tabulate->add_option("--input", tab_opts.ratings_path, "ratings CSV")->required();
  tabulate->add_option("--out", tab_opts.out_path, "counts CSV output")->required();

  // gen-synth
  GenSynthOptions gen_opts;
  CLI::App* gen = app.add_subcommand("gen-synth", "generate a synthetic hotspot corpus");
  gen->add_option("--train", gen_opts.n_train, "number of training cases");
  gen->add_option("--test", gen_opts.n_test, "number of test cases");
  gen->add_option("--seed", gen_opts.seed, "generation seed");
  gen->add_option("--noise", gen_opts.noise_scale, "jitter scale");
  gen->add_option("--max-fixations", gen_opts.max_fixations, "scanpath length cap F");
  gen->add_option("--embed-dim", gen_opts.embed_dim, "embedding width d");
  gen->add_option("--out", gen_opts.corpus_out, "corpus JSONL output")->required();
  gen->add_option("--embeddings", gen_opts.embeddings_out, "embeddings container output")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*evaluate) {
      const EvalReport report = cmd_evaluate(eval_opts);
      std::printf("evaluated %zu cases: mIoU %.4f, mCC %.4f, mMM %.4f, mD-MM %.4f\n",
                  report.per_case.size(), report.mean_iou.point, report.mean_cc.point,
                  report.mean_mm.point, report.mean_d_mm.point);
    } else if (*rank) {
      const RankReport report = cmd_rank(rank_opts);
      std::printf("pearson r %.4f (p %.4g), spearman rho %.4f (p %.4g)\n",
                  report.pearson_durations.r, report.pearson_durations.p_value,
                  report.spearman_ranks.r, report.spearman_ranks.p_value);
    } else if (*train_cmd) {
      const TrainResult result = cmd_train(train_opts);
      std::printf("trained %zu epochs: first %.6f, last %.6f\n", result.epoch_loss.size(),
                  result.epoch_loss.front(), result.epoch_loss.back());
    } else if (*predict) {
      predict_opts.deterministic = !stochastic;
      const Corpus out = cmd_predict(predict_opts);
      std::printf("wrote %zu predicted scanpaths to %s\n", out.cases.size(),
                  predict_opts.out_path.c_str());
    } else if (*sweep) {
      if (!spreads_arg.empty()) {
        sweep_opts.spreads.clear();
        for (const std::string& field : split_csv_line(spreads_arg)) {
          sweep_opts.spreads.push_back(parse_double_field(field, "--spreads"));
        }
      }
      const SweepCurve curve = cmd_sweep(sweep_opts);
      std::printf("swept %zu spread levels to %s\n", curve.spreads.size(),
                  sweep_opts.out_path.c_str());
    } else if (*tabulate) {
      const HumanEvalTable table = cmd_tabulate(tab_opts);
      std::printf("tabulated %d criteria to %s\n", static_cast<int>(table.counts.size()),
                  tab_opts.out_path.c_str());
    } else if (*gen) {
      const SyntheticCorpus synth = cmd_gen_synth(gen_opts);
      std::printf("generated %zu cases (%d train, %d test)\n", synth.corpus.cases.size(),
                  synth.corpus.manifest.train, synth.corpus.manifest.test);
    }
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "runtime error: %s\n", e.what());
    return 3;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
