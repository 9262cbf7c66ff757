#include "gazebench/commands.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "gazebench/container.hpp"
#include "gazebench/csv.hpp"
#include "gazebench/errors.hpp"
#include "gazebench/parallel.hpp"
#include "gazebench/rng.hpp"

namespace gazebench {

namespace {

using nlohmann::json;

Corpus load_truncated(const std::string& path, int max_fixations) {
  Corpus corpus = load_corpus(path);
  truncate_corpus(corpus, max_fixations);
  return corpus;
}

// pairs cases by case_id; reports orphans on either side
std::vector<std::pair<const Scanpath*, const Scanpath*>> match_cases(const Corpus& pred,
                                                                     const Corpus& gt) {
  std::map<std::string, const Scanpath*> gt_by_id;
  for (const Scanpath& s : gt.cases) gt_by_id[s.case_id] = &s;

  std::vector<std::pair<const Scanpath*, const Scanpath*>> pairs;
  std::vector<std::string> orphans;
  std::set<std::string> used;
  for (const Scanpath& s : pred.cases) {
    const auto it = gt_by_id.find(s.case_id);
    if (it == gt_by_id.end()) {
      orphans.push_back(s.case_id);
    } else {
      pairs.emplace_back(&s, it->second);
      used.insert(s.case_id);
    }
  }
  for (const Scanpath& s : gt.cases) {
    if (!used.count(s.case_id)) orphans.push_back(s.case_id);
  }
  if (!orphans.empty()) {
    std::string msg = "unmatched case ids:";
    for (const std::string& id : orphans) msg += " " + id;
    throw ValidationError(msg);
  }
  return pairs;
}

json ci_to_json(const ConfidenceInterval& ci) {
  return {{"point", ci.point}, {"low", ci.low}, {"high", ci.high}};
}

}  // namespace

nlohmann::json eval_report_to_json(const EvalReport& report) {
  json per_case = json::array();
  for (const CaseMetrics& c : report.per_case) {
    per_case.push_back({{"case_id", c.case_id},
                        {"iou", c.iou},
                        {"cc", c.cc},
                        {"mm_shape", c.mm.shape},
                        {"mm_direction", c.mm.direction},
                        {"mm_length", c.mm.length},
                        {"mm_position", c.mm.position},
                        {"mm_duration", c.mm.duration},
                        {"mm_mean", c.mm.mean_mm}});
  }
  return {{"spread", report.spread},
          {"iou_threshold", report.iou_threshold},
          {"bootstrap_n", report.bootstrap_n},
          {"seed", report.seed},
          {"aggregates",
           {{"mean_iou", ci_to_json(report.mean_iou)},
            {"mean_cc", ci_to_json(report.mean_cc)},
            {"mean_mm", ci_to_json(report.mean_mm)},
            {"mean_d_mm", ci_to_json(report.mean_d_mm)}}},
          {"per_case", per_case}};
}

std::string eval_report_to_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "case_id,iou,cc,mm_shape,mm_direction,mm_length,mm_position,mm_duration,mm_mean\n";
  for (const CaseMetrics& c : report.per_case) {
    out << c.case_id << ',' << format_double(c.iou) << ',' << format_double(c.cc) << ','
        << format_double(c.mm.shape) << ',' << format_double(c.mm.direction) << ','
        << format_double(c.mm.length) << ',' << format_double(c.mm.position) << ','
        << format_double(c.mm.duration) << ',' << format_double(c.mm.mean_mm) << '\n';
  }
  return out.str();
}

EvalReport cmd_evaluate(const EvaluateOptions& options) {
  const Corpus pred = load_truncated(options.pred_path, options.max_fixations);
  const Corpus gt = load_truncated(options.gt_path, options.max_fixations);
  const auto pairs = match_cases(pred, gt);

  EvalReport report;
  report.spread = options.spread;
  report.iou_threshold = options.iou_threshold;
  report.bootstrap_n = options.bootstrap_n;
  report.seed = options.seed;
  report.per_case.resize(pairs.size());

  parallel_for(pairs.size(), [&](std::size_t i) {
    const Scanpath& p = *pairs[i].first;
    const Scanpath& g = *pairs[i].second;
    try {
      CaseMetrics m;
      m.case_id = g.case_id;
      const FixationHeatmap hp = render_heatmap(p, options.spread);
      const FixationHeatmap hg = render_heatmap(g, options.spread);
      m.iou = heatmap_iou(hp, hg, options.iou_threshold);
      m.cc = heatmap_cc(hp, hg);
      m.mm = multimatch_scores(p, g, options.mm);
      report.per_case[i] = std::move(m);
    } catch (const ValidationError& e) {
      throw ValidationError("case '" + g.case_id + "': " + e.what());
    }
  });

  std::vector<double> ious, ccs, mms, dmms;
  for (const CaseMetrics& m : report.per_case) {
    ious.push_back(m.iou);
    ccs.push_back(m.cc);
    mms.push_back(m.mm.mean_mm);
    dmms.push_back(m.mm.duration);
  }
  const BootstrapConfig bootstrap{options.bootstrap_n, 0.95, options.seed};
  report.mean_iou = bootstrap_ci(ious, bootstrap);
  report.mean_cc = bootstrap_ci(ccs, bootstrap);
  report.mean_mm = bootstrap_ci(mms, bootstrap);
  report.mean_d_mm = bootstrap_ci(dmms, bootstrap);

  if (!options.out_prefix.empty()) {
    atomic_write_file(options.out_prefix + ".json", eval_report_to_json(report).dump(2) + "\n");
    atomic_write_file(options.out_prefix + ".csv", eval_report_to_csv(report));
  }
  return report;
}

nlohmann::json rank_report_to_json(const RankReport& report) {
  auto entries_to_json = [](const std::vector<DifficultyEntry>& entries) {
    json arr = json::array();
    for (const DifficultyEntry& e : entries) {
      arr.push_back({{"case_id", e.case_id},
                     {"total_duration_ms", e.total_duration_ms},
                     {"rank", e.rank}});
    }
    return arr;
  };
  return {{"pearson", {{"r", report.pearson_durations.r}, {"p_value", report.pearson_durations.p_value}}},
          {"spearman", {{"rho", report.spearman_ranks.r}, {"p_value", report.spearman_ranks.p_value}}},
          {"hardest", entries_to_json(report.hardest)},
          {"simplest", entries_to_json(report.simplest)}};
}

RankReport cmd_rank(const RankOptions& options) {
  const Corpus pred = load_truncated(options.pred_path, options.max_fixations);
  const Corpus gt = load_truncated(options.gt_path, options.max_fixations);
  const auto pairs = match_cases(pred, gt);

  std::vector<std::pair<std::string, double>> pred_durations, gt_durations;
  std::vector<double> pred_totals, gt_totals;
  for (const auto& [p, g] : pairs) {
    pred_durations.emplace_back(p->case_id, total_duration(*p));
    gt_durations.emplace_back(g->case_id, total_duration(*g));
    pred_totals.push_back(total_duration(*p));
    gt_totals.push_back(total_duration(*g));
  }

  RankReport report;
  report.predicted = rank_difficulty(pred_durations);
  report.ground_truth = rank_difficulty(gt_durations);
  report.pearson_durations = pearson(gt_totals, pred_totals);
  report.spearman_ranks = spearman(gt_totals, pred_totals);
  const int k = std::min<int>(options.extremes_k, static_cast<int>(pairs.size()));
  auto [top, bottom] = difficulty_extremes(report.predicted, k);
  report.hardest = std::move(top);
  report.simplest = std::move(bottom);

  if (!options.out_prefix.empty()) {
    atomic_write_file(options.out_prefix + ".json", rank_report_to_json(report).dump(2) + "\n");
    atomic_write_file(options.out_prefix + "_pred.csv", ranking_to_csv(report.predicted));
    atomic_write_file(options.out_prefix + "_gt.csv", ranking_to_csv(report.ground_truth));
  }
  return report;
}

RunSettings load_run_settings(const std::string& path) {
  RunSettings settings;
  if (path.empty()) return settings;
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("config '" + path + "': invalid JSON: " + e.what());
  }
  settings.model.max_fixations = j.value("max_fixations", settings.model.max_fixations);
  settings.model.model_dim = j.value("model_dim", settings.model.model_dim);
  settings.model.n_decoder_layers = j.value("n_decoder_layers", settings.model.n_decoder_layers);
  settings.model.n_heads = j.value("n_heads", settings.model.n_heads);
  settings.model.mlp_hidden = j.value("mlp_hidden", settings.model.mlp_hidden);
  settings.model.add_positional_encoding =
      j.value("add_positional_encoding", settings.model.add_positional_encoding);
  settings.training.epochs = j.value("epochs", settings.training.epochs);
  settings.training.batch_size = j.value("batch_size", settings.training.batch_size);
  settings.training.lr_decoder = j.value("lr_decoder", settings.training.lr_decoder);
  settings.training.lr_heads = j.value("lr_heads", settings.training.lr_heads);
  return settings;
}

TrainResult cmd_train(const TrainCmdOptions& options) {
  Corpus corpus = load_corpus(options.corpus_path);
  truncate_corpus(corpus, options.max_fixations);
  const FileEmbeddingProvider embeddings(options.embeddings_path);

  RunSettings settings = load_run_settings(options.config_path);
  settings.model.max_fixations = options.max_fixations;
  settings.model.seed = options.seed;
  settings.training.seed = options.seed;

  std::vector<TrainingCase> cases;
  for (const std::size_t i : split_indices(corpus, options.split)) {
    TrainingCase c;
    c.case_id = corpus.cases[i].case_id;
    c.embedding = embeddings.embedding_for(c.case_id);
    c.target = pad_truncate(corpus.cases[i], options.max_fixations);
    cases.push_back(std::move(c));
  }
  if (cases.empty()) {
    throw ValidationError("no cases in split '" + options.split + "'");
  }

  GazeModel model(settings.model);
  const TrainResult result = train(model, cases, settings.training);

  if (!options.model_out.empty()) save_model(options.model_out, model);
  if (!options.trace_out.empty()) {
    std::ostringstream trace;
    trace << "epoch,mean_loss\n";
    for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) {
      trace << (e + 1) << ',' << format_double(result.epoch_loss[e]) << '\n';
    }
    atomic_write_file(options.trace_out, trace.str());
  }
  return result;
}

Corpus cmd_predict(const PredictOptions& options) {
  const Corpus corpus = load_corpus(options.corpus_path);
  const FileEmbeddingProvider embeddings(options.embeddings_path);
  const GazeModel model = load_model(options.model_path);

  Corpus out;
  out.manifest.dataset_name = corpus.manifest.dataset_name + "-predictions";
  out.manifest.format_version = 1;

  const auto indices = split_indices(corpus, options.split);
  if (indices.empty()) {
    throw ValidationError("no cases in split '" + options.split + "'");
  }
  out.cases.resize(indices.size());
  std::vector<ManifestEntry> entries(indices.size());

  parallel_for(indices.size(), [&](std::size_t k) {
    const Scanpath& source = corpus.cases[indices[k]];
    const GaussianHeadOutput head = model.predict(embeddings.embedding_for(source.case_id));
    const DecodedScanpath decoded = decode_scanpath(
        head, source.image_width, source.image_height, options.deterministic,
        derive_stream(options.seed, static_cast<std::uint64_t>(k)), source.case_id);
    out.cases[k] = decoded.scanpath;
    entries[k] = {source.case_id, corpus.manifest.cases[indices[k]].split};
  });

  out.manifest.cases = std::move(entries);
  out.manifest.total = static_cast<int>(out.cases.size());
  for (const ManifestEntry& e : out.manifest.cases) {
    if (e.split == "train") {
      ++out.manifest.train;
    } else {
      ++out.manifest.test;
    }
  }

  if (!options.out_path.empty()) save_corpus(options.out_path, out);
  return out;
}

SweepCurve cmd_sweep(const SweepOptions& options) {
  const Corpus pred = load_truncated(options.pred_path, options.max_fixations);
  const Corpus gt = load_truncated(options.gt_path, options.max_fixations);
  const auto matched = match_cases(pred, gt);

  std::vector<std::pair<Scanpath, Scanpath>> pairs;
  pairs.reserve(matched.size());
  for (const auto& [p, g] : matched) pairs.emplace_back(*p, *g);

  const BootstrapConfig bootstrap{options.bootstrap_n, 0.95, options.seed};
  const SweepCurve curve =
      spread_sweep(pairs, options.spreads, options.iou_threshold, bootstrap);
  if (!options.out_path.empty()) {
    atomic_write_file(options.out_path, sweep_curve_to_csv(curve));
  }
  return curve;
}

HumanEvalTable cmd_tabulate(const TabulateOptions& options) {
  std::ifstream in(options.ratings_path);
  if (!in) throw ValidationError("cannot open ratings '" + options.ratings_path + "'");
  const HumanEvalTable table = tabulate_human_eval(parse_ratings_csv(in));
  if (!options.out_path.empty()) {
    atomic_write_file(options.out_path, human_eval_table_to_csv(table));
  }
  return table;
}

SyntheticCorpus cmd_gen_synth(const GenSynthOptions& options) {
  const auto specs =
      random_case_specs(options.n_train, options.n_test, options.seed, options.noise_scale);
  SyntheticCorpus synth =
      generate_synthetic(specs, options.max_fixations, options.embed_dim);
  if (!options.corpus_out.empty()) save_corpus(options.corpus_out, synth.corpus);
  if (!options.embeddings_out.empty()) save_embeddings(options.embeddings_out, synth.embeddings);
  return synth;
}

}  // namespace gazebench
