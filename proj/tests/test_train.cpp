#include <doctest.h>

#include <cmath>

#include "gazebench/errors.hpp"
#include "gazebench/model.hpp"
#include "gazebench/scanpath.hpp"
#include "gazebench/synthetic.hpp"

using namespace gazebench;

namespace {

GazeModelConfig tiny_config() {
  GazeModelConfig cfg;
  cfg.max_fixations = 8;
  cfg.model_dim = 16;
  cfg.n_decoder_layers = 1;
  cfg.n_heads = 2;
  cfg.mlp_hidden = 16;
  cfg.seed = 3;
  return cfg;
}

std::vector<TrainingCase> tiny_corpus(const GazeModelConfig& cfg, int n_cases) {
  SyntheticParams params;
  params.grid_h = params.grid_w = 4;
  std::vector<SyntheticCaseSpec> specs;
  for (int i = 0; i < n_cases; ++i) {
    SyntheticCaseSpec spec;
    spec.case_id = "tiny_" + std::to_string(i);
    spec.seed = 9000 + static_cast<std::uint64_t>(i);
    spec.noise_scale = 0.01;
    spec.hotspots = {{0.2 + 0.06 * (i % 8), 0.3 + 0.05 * (i % 5), 1.0}};
    specs.push_back(std::move(spec));
  }
  const SyntheticCorpus synth =
      generate_synthetic(specs, cfg.max_fixations, cfg.model_dim, params);
  std::vector<TrainingCase> cases;
  for (std::size_t i = 0; i < synth.corpus.cases.size(); ++i) {
    TrainingCase c;
    c.case_id = synth.corpus.cases[i].case_id;
    c.embedding = synth.embeddings[i].second;
    c.target = pad_truncate(synth.corpus.cases[i], cfg.max_fixations);
    cases.push_back(std::move(c));
  }
  return cases;
}

}  // namespace

TEST_CASE("zero learning rates leave the loss trace constant") {
  const GazeModelConfig cfg = tiny_config();
  GazeModel model(cfg);
  const auto corpus = tiny_corpus(cfg, 6);
  TrainConfig tc;
  tc.epochs = 4;
  tc.batch_size = 3;
  tc.lr_decoder = 0.0;
  tc.lr_heads = 0.0;
  tc.seed = 11;
  const TrainResult result = train(model, corpus, tc);
  REQUIRE(result.epoch_loss.size() == 4);
  // parameters never move, but per-epoch eps draws and shuffles differ;
  // re-running with the same seed must reproduce the exact trace
  GazeModel model2(cfg);
  const TrainResult result2 = train(model2, corpus, tc);
  for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) {
    CHECK(result.epoch_loss[e] == result2.epoch_loss[e]);
  }
  // and with zero lr the parameters are bitwise unchanged
  const GazeModel fresh(cfg);
  for (std::size_t i = 0; i < fresh.parameters().size(); ++i) {
    CHECK((model.parameters()[i].value - fresh.parameters()[i].value).cwiseAbs().maxCoeff() ==
          0.0);
  }
}

TEST_CASE("same seed twice gives bitwise-identical traces") {
  const GazeModelConfig cfg = tiny_config();
  const auto corpus = tiny_corpus(cfg, 8);
  TrainConfig tc;
  tc.epochs = 5;
  tc.batch_size = 4;
  tc.lr_decoder = 1e-3;
  tc.lr_heads = 3e-3;
  tc.seed = 17;

  GazeModel a(cfg);
  GazeModel b(cfg);
  const TrainResult ra = train(a, corpus, tc);
  const TrainResult rb = train(b, corpus, tc);
  REQUIRE(ra.epoch_loss.size() == rb.epoch_loss.size());
  for (std::size_t e = 0; e < ra.epoch_loss.size(); ++e) {
    CHECK(ra.epoch_loss[e] == rb.epoch_loss[e]);
  }
  for (std::size_t i = 0; i < a.parameters().size(); ++i) {
    CHECK((a.parameters()[i].value - b.parameters()[i].value).cwiseAbs().maxCoeff() == 0.0);
  }

  TrainConfig other = tc;
  other.seed = 18;
  GazeModel c(cfg);
  const TrainResult rc = train(c, corpus, other);
  CHECK(rc.epoch_loss.back() != ra.epoch_loss.back());
}

TEST_CASE("a short run reduces the loss on a small corpus") {
  const GazeModelConfig cfg = tiny_config();
  GazeModel model(cfg);
  const auto corpus = tiny_corpus(cfg, 12);
  TrainConfig tc;
  tc.epochs = 60;
  tc.batch_size = 6;
  tc.lr_decoder = 1e-3;
  tc.lr_heads = 5e-3;
  tc.seed = 23;
  const TrainResult result = train(model, corpus, tc);
  CHECK(result.epoch_loss.back() < result.epoch_loss.front());
}

TEST_CASE("divergent settings abort with the trace so far") {
  const GazeModelConfig cfg = tiny_config();
  GazeModel model(cfg);
  const auto corpus = tiny_corpus(cfg, 4);
  TrainConfig tc;
  tc.epochs = 50;
  tc.batch_size = 4;
  tc.lr_decoder = 1e150;
  tc.lr_heads = 1e150;
  tc.seed = 29;
  CHECK_THROWS_AS(train(model, corpus, tc), TrainingDiverged);
}

TEST_CASE("training validates its inputs") {
  const GazeModelConfig cfg = tiny_config();
  GazeModel model(cfg);
  CHECK_THROWS_AS(train(model, {}, TrainConfig{}), ValidationError);

  auto corpus = tiny_corpus(cfg, 2);
  corpus[0].target.rows.assign(static_cast<std::size_t>(cfg.max_fixations), {0, 0, 0, 1});
  CHECK_THROWS_WITH_AS(train(model, corpus, TrainConfig{}),
                       doctest::Contains("empty ground truth"), ValidationError);

  auto bad_f = tiny_corpus(cfg, 2);
  bad_f[1].target.rows.resize(3);
  CHECK_THROWS_AS(train(model, bad_f, TrainConfig{}), ValidationError);
}
