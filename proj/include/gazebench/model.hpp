#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gazebench/embedding.hpp"
#include "gazebench/scanpath.hpp"

namespace gazebench {

struct GazeModelConfig {
  int max_fixations = 50;    // F
  int model_dim = 64;        // d; divisible by n_heads and by 4
  int n_decoder_layers = 2;  // desk default; deeper stacks are configuration
  int n_heads = 4;
  int mlp_hidden = 64;  // hidden width of the prediction heads
  std::uint64_t seed = 0;
  bool add_positional_encoding = true;
};

struct FixationDecoderOutput {
  Eigen::MatrixXd z;  // F x d
};

// Per-row Gaussian parameters for (x, y, t) plus the padding probability
// from the two-class validity classifier.
struct GaussianHeadOutput {
  Eigen::VectorXd mean_x, mean_y, mean_t;
  Eigen::VectorXd logvar_x, logvar_y, logvar_t;
  Eigen::VectorXd pad_prob;
};

struct EpsDraws {
  Eigen::VectorXd x, y, t;  // standard-normal draws, length F
};

// Loss-space samples: normalized coordinates, duration in seconds.
struct SampledFixations {
  Eigen::VectorXd x, y, t;
};

double reparam_sample(double mean, double logvar, double eps);
SampledFixations reparam_sample(const GaussianHeadOutput& out, const EpsDraws& eps);
EpsDraws draw_eps(int rows, std::uint64_t seed);
EpsDraws zero_eps(int rows);

struct Parameter {
  std::string name;
  int group = 0;  // 0 = decoder stack, 1 = heads and queries
  Eigen::MatrixXd value;
  Eigen::MatrixXd grad;
  Eigen::MatrixXd adam_m;
  Eigen::MatrixXd adam_v;
};

struct TrainingCase {
  std::string case_id;
  MultimodalEmbedding embedding;
  FixationQuadSequence target;
};

struct TrainConfig {
  int epochs = 200;
  int batch_size = 32;
  double lr_decoder = 1e-4;
  double lr_heads = 3e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
};

struct TrainResult {
  std::vector<double> epoch_loss;
};

class GazeModel;

TrainResult train(GazeModel& model, const std::vector<TrainingCase>& corpus,
                  const TrainConfig& cfg);
double grad_check(GazeModel& model, const std::vector<TrainingCase>& batch, double step,
                  int n_directions = 20, std::uint64_t seed = 0);
double loss_gradient_norm(GazeModel& model, const std::vector<TrainingCase>& batch,
                          const std::vector<EpsDraws>* eps = nullptr);

class GazeModel {
 public:
  explicit GazeModel(GazeModelConfig cfg);

  const GazeModelConfig& config() const { return cfg_; }

  // Decoder stack: F learned queries refined by self-attention,
  // cross-attention to the (optionally position-encoded) memory, and a
  // feed-forward block, with residual + layer normalization throughout.
  FixationDecoderOutput decoder_forward(const MultimodalEmbedding& m) const;

  // Six row-wise Gaussian-parameter MLPs plus the validity classifier.
  GaussianHeadOutput heads_forward(const FixationDecoderOutput& z) const;

  GaussianHeadOutput predict(const MultimodalEmbedding& m) const;

  std::vector<Parameter>& parameters() { return params_; }
  const std::vector<Parameter>& parameters() const { return params_; }
  void set_all_parameters_zero();

  // activation record and loss-side gradients; defined with the
  // implementation
  struct Trace;
  struct HeadGradients;

 private:
  struct LinearIdx {
    int w = -1;
    int b = -1;
  };
  struct AttnIdx {
    LinearIdx q, k, v, o;
  };
  struct NormIdx {
    int gamma = -1;
    int beta = -1;
  };
  struct LayerIdx {
    AttnIdx self_attn, cross_attn;
    LinearIdx ffn1, ffn2;
    NormIdx ln1, ln2, ln3;
  };
  struct HeadIdx {
    LinearIdx l1, l2;
  };

  void run_forward(const MultimodalEmbedding& m, Trace& trace) const;
  void run_backward(const Trace& trace, const HeadGradients& grads);
  void zero_grad();

  GazeModelConfig cfg_;
  std::vector<Parameter> params_;
  int queries_ = -1;
  std::vector<LayerIdx> layers_;
  // order: mean_x, logvar_x, mean_y, logvar_y, mean_t, logvar_t, validity
  std::array<HeadIdx, 7> heads_{};

  friend TrainResult train(GazeModel&, const std::vector<TrainingCase>&, const TrainConfig&);
  friend double grad_check(GazeModel&, const std::vector<TrainingCase>&, double, int,
                           std::uint64_t);
  friend double loss_gradient_norm(GazeModel&, const std::vector<TrainingCase>&,
                                   const std::vector<EpsDraws>*);
};

struct LossBreakdown {
  double total = 0.0;
  double l_spa = 0.0;
  double l_val = 0.0;
};

struct PredictionWithSamples {
  GaussianHeadOutput head;
  SampledFixations samples;
  EpsDraws eps;
};

// Training loss: per case, mean L1 over the valid prefix of (x, y,
// t-in-seconds) plus mean binary cross-entropy of the padding probability
// over all F rows, averaged over the batch. Probabilities are clamped to
// [1e-7, 1 - 1e-7].
LossBreakdown loss_total(const std::vector<PredictionWithSamples>& preds,
                         const std::vector<FixationQuadSequence>& gts);

struct DecodedScanpath {
  Scanpath scanpath;
  bool degenerate = false;  // first row was already padding
};

// Emits rows up to (excluding) the first pad_prob > 0.5. Coordinates are
// clamped to [0,1], durations to >= 1 ms.
DecodedScanpath decode_scanpath_with_eps(const GaussianHeadOutput& out, int image_width,
                                         int image_height, const EpsDraws& eps,
                                         std::string case_id = {});
DecodedScanpath decode_scanpath(const GaussianHeadOutput& out, int image_width,
                                int image_height, bool deterministic, std::uint64_t seed = 0,
                                std::string case_id = {});

void save_model(const std::string& path, const GazeModel& model);
GazeModel load_model(const std::string& path);

}  // namespace gazebench
