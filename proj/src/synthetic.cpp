#include "gazebench/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "gazebench/errors.hpp"
#include "gazebench/rng.hpp"

namespace gazebench {

namespace {

void validate_spec(const SyntheticCaseSpec& spec) {
  if (spec.hotspots.empty()) {
    throw ValidationError("case '" + spec.case_id + "': at least one hotspot required");
  }
  for (const Hotspot& h : spec.hotspots) {
    if (!(h.weight > 0.0)) {
      throw ValidationError("case '" + spec.case_id + "': hotspot weights must be positive");
    }
    if (h.cx < 0.0 || h.cx > 1.0 || h.cy < 0.0 || h.cy > 1.0) {
      throw ValidationError("case '" + spec.case_id + "': hotspot centers must be in [0,1]^2");
    }
  }
  if (spec.noise_scale < 0.0) {
    throw ValidationError("case '" + spec.case_id + "': noise_scale must be non-negative");
  }
}

// deterministic per-channel gain in [0.3, 1.0]
double channel_gain(int channel) {
  const double u = static_cast<double>(splitmix64(static_cast<std::uint64_t>(channel)) >> 11) *
                   0x1.0p-53;
  return 0.3 + 0.7 * u;
}

MultimodalEmbedding make_embedding(const SyntheticCaseSpec& spec, int embed_dim,
                                   const SyntheticParams& params) {
  MultimodalEmbedding m;
  m.grid_h = params.grid_h;
  m.grid_w = params.grid_w;
  const int patches = params.grid_h * params.grid_w;
  m.patches.resize(patches, embed_dim);

  Rng noise_rng(derive_stream(spec.seed, 2));
  const double two_narrow_sq = 2.0 * params.field_sigma_narrow * params.field_sigma_narrow;
  const double two_wide_sq = 2.0 * params.field_sigma_wide * params.field_sigma_wide;
  const int half = embed_dim / 2;

  for (int row = 0; row < params.grid_h; ++row) {
    for (int col = 0; col < params.grid_w; ++col) {
      const double u = (static_cast<double>(col) + 0.5) / params.grid_w;
      const double v = (static_cast<double>(row) + 0.5) / params.grid_h;
      double narrow = 0.0, wide = 0.0;
      for (const Hotspot& h : spec.hotspots) {
        const double d2 = (u - h.cx) * (u - h.cx) + (v - h.cy) * (v - h.cy);
        narrow += h.weight * std::exp(-d2 / two_narrow_sq);
        wide += h.weight * std::exp(-d2 / two_wide_sq);
      }
      const Eigen::Index p = static_cast<Eigen::Index>(row) * params.grid_w + col;
      for (int c = 0; c < embed_dim; ++c) {
        const double field = c < half ? narrow : wide;
        m.patches(p, c) = field * channel_gain(c) + params.embed_noise * noise_rng.normal();
      }
    }
  }
  return m;
}

Scanpath make_scanpath(const SyntheticCaseSpec& spec, int max_fixations,
                       const SyntheticParams& params) {
  std::vector<Hotspot> ordered = spec.hotspots;
  std::stable_sort(ordered.begin(), ordered.end(), [](const Hotspot& a, const Hotspot& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    if (a.cx != b.cx) return a.cx < b.cx;
    return a.cy < b.cy;
  });

  Rng rng(derive_stream(spec.seed, 1));
  Scanpath s;
  s.case_id = spec.case_id;
  s.image_width = params.image_width;
  s.image_height = params.image_height;
  s.report_text = "synthetic case with " + std::to_string(spec.hotspots.size()) + " hotspots";

  for (const Hotspot& h : ordered) {
    const int count = std::max(
        1, static_cast<int>(std::llround(params.fixations_per_weight * h.weight)));
    const double base_duration = params.duration_per_weight_ms * h.weight;
    for (int i = 0; i < count; ++i) {
      Fixation f;
      f.x = std::clamp(h.cx + spec.noise_scale * rng.normal(), 0.0, 1.0);
      f.y = std::clamp(h.cy + spec.noise_scale * rng.normal(), 0.0, 1.0);
      f.duration_ms = std::max(1.0, base_duration * (1.0 + spec.noise_scale * rng.normal()));
      s.fixations.push_back(f);
    }
  }
  if (static_cast<int>(s.fixations.size()) > max_fixations) {
    s.fixations.resize(static_cast<std::size_t>(max_fixations));
  }
  return s;
}

}  // namespace

SyntheticCorpus generate_synthetic(const std::vector<SyntheticCaseSpec>& specs,
                                   int max_fixations, int embed_dim,
                                   const SyntheticParams& params) {
  if (specs.empty()) throw ValidationError("generate_synthetic: no case specs");
  if (max_fixations < 1) throw ValidationError("generate_synthetic: max_fixations must be >= 1");
  if (embed_dim < 2) throw ValidationError("generate_synthetic: embed_dim must be >= 2");

  SyntheticCorpus out;
  out.corpus.manifest.dataset_name = "synthetic";
  out.corpus.manifest.format_version = 1;
  for (const SyntheticCaseSpec& spec : specs) {
    validate_spec(spec);
    if (spec.split != "train" && spec.split != "test") {
      throw ValidationError("case '" + spec.case_id + "': split must be 'train' or 'test'");
    }
    out.corpus.cases.push_back(make_scanpath(spec, max_fixations, params));
    out.corpus.manifest.cases.push_back({spec.case_id, spec.split});
    out.embeddings.emplace_back(spec.case_id, make_embedding(spec, embed_dim, params));
    if (spec.split == "train") {
      ++out.corpus.manifest.train;
    } else {
      ++out.corpus.manifest.test;
    }
  }
  out.corpus.manifest.total = static_cast<int>(specs.size());
  return out;
}

std::vector<SyntheticCaseSpec> random_case_specs(int n_train, int n_test, std::uint64_t seed,
                                                 double noise_scale) {
  if (n_train < 0 || n_test < 0 || n_train + n_test == 0) {
    throw ValidationError("random_case_specs: need a positive number of cases");
  }
  Rng rng(derive_stream(seed, 3));
  std::vector<SyntheticCaseSpec> specs;
  const int total = n_train + n_test;
  specs.reserve(static_cast<std::size_t>(total));
  for (int i = 0; i < total; ++i) {
    SyntheticCaseSpec spec;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "case_%04d", i);
    spec.case_id = buf;
    spec.split = i < n_train ? "train" : "test";
    spec.noise_scale = noise_scale;
    spec.seed = derive_stream(seed, 1000 + static_cast<std::uint64_t>(i));
    const int n_hotspots = 1 + static_cast<int>(rng.index(3));
    for (int hs = 0; hs < n_hotspots; ++hs) {
      Hotspot h;
      h.cx = rng.uniform(0.15, 0.85);
      h.cy = rng.uniform(0.15, 0.85);
      h.weight = rng.uniform(0.5, 2.0);
      spec.hotspots.push_back(h);
    }
    specs.push_back(std::move(spec));
  }
  return specs;
}

SyntheticEmbeddingProvider::SyntheticEmbeddingProvider(std::vector<SyntheticCaseSpec> specs,
                                                       int embed_dim, SyntheticParams params)
    : specs_(std::move(specs)), embed_dim_(embed_dim), params_(params) {
  for (const SyntheticCaseSpec& spec : specs_) validate_spec(spec);
}

MultimodalEmbedding SyntheticEmbeddingProvider::embedding_for(const std::string& case_id) const {
  for (const SyntheticCaseSpec& spec : specs_) {
    if (spec.case_id == case_id) return make_embedding(spec, embed_dim_, params_);
  }
  throw ValidationError("no synthetic spec for case '" + case_id + "'");
}

std::vector<std::string> SyntheticEmbeddingProvider::case_ids() const {
  std::vector<std::string> ids;
  ids.reserve(specs_.size());
  for (const SyntheticCaseSpec& spec : specs_) ids.push_back(spec.case_id);
  return ids;
}

}  // namespace gazebench
