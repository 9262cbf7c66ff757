#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gazebench/corpus.hpp"
#include "gazebench/embedding.hpp"

namespace gazebench {

struct Hotspot {
  double cx = 0.5;
  double cy = 0.5;
  double weight = 1.0;  // > 0
};

struct SyntheticCaseSpec {
  std::string case_id;
  std::vector<Hotspot> hotspots;  // at least one
  double noise_scale = 0.0;
  std::uint64_t seed = 0;
  std::string split = "train";
};

struct SyntheticParams {
  int image_width = 512;
  int image_height = 512;
  int grid_h = 8;
  int grid_w = 8;
  double fixations_per_weight = 6.0;
  double duration_per_weight_ms = 150.0;
  double field_sigma_narrow = 0.10;
  double field_sigma_wide = 0.22;
  double embed_noise = 0.01;
};

struct SyntheticCorpus {
  Corpus corpus;
  std::vector<std::pair<std::string, MultimodalEmbedding>> embeddings;
};

// Per case: a patch-grid embedding whose channels carry two Gaussian
// proximity fields over the hotspots (plus seeded noise), and a ground-truth
// scanpath visiting hotspots in weight-descending order with fixation count
// and duration proportional to weight, jittered by noise_scale and truncated
// to max_fixations. Deterministic for fixed seeds.
SyntheticCorpus generate_synthetic(const std::vector<SyntheticCaseSpec>& specs,
                                   int max_fixations, int embed_dim,
                                   const SyntheticParams& params = {});

// Seeded random specs: 1-3 hotspots per case with centers in [0.15, 0.85]^2
// and weights in [0.5, 2].
std::vector<SyntheticCaseSpec> random_case_specs(int n_train, int n_test, std::uint64_t seed,
                                                 double noise_scale = 0.02);

class SyntheticEmbeddingProvider final : public EmbeddingProvider {
 public:
  SyntheticEmbeddingProvider(std::vector<SyntheticCaseSpec> specs, int embed_dim,
                             SyntheticParams params = {});
  MultimodalEmbedding embedding_for(const std::string& case_id) const override;
  std::vector<std::string> case_ids() const override;

 private:
  std::vector<SyntheticCaseSpec> specs_;
  int embed_dim_;
  SyntheticParams params_;
};

}  // namespace gazebench
