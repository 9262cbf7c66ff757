#include "gazebench/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gazebench/container.hpp"
#include "gazebench/errors.hpp"
#include "gazebench/rng.hpp"

namespace gazebench {

namespace {

constexpr double kNormEps = 1e-5;
constexpr double kProbClamp = 1e-7;

double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

double sign_or_zero(double v) {
  if (v > 0.0) return 1.0;
  if (v < 0.0) return -1.0;
  return 0.0;  // L1 subgradient at the kink
}

}  // namespace

struct GazeModel::Trace {
  struct NormCache {
    Eigen::MatrixXd xhat;
    Eigen::VectorXd inv_std;
  };
  struct AttnCache {
    Eigen::MatrixXd q_in, kv_in;
    Eigen::MatrixXd Q, K, V;
    std::vector<Eigen::MatrixXd> A;  // per-head attention weights
    Eigen::MatrixXd concat;          // heads side by side, before the output projection
  };
  struct FfnCache {
    Eigen::MatrixXd in, pre, hidden;
  };
  struct HeadCache {
    Eigen::MatrixXd pre, hidden, out;
  };
  struct LayerCache {
    AttnCache self_attn, cross_attn;
    FfnCache ffn;
    NormCache ln1, ln2, ln3;
  };

  Eigen::MatrixXd memory;  // includes positional encodings when enabled
  std::vector<LayerCache> layers;
  Eigen::MatrixXd decoder_out;
  std::array<HeadCache, 7> heads;
  Eigen::MatrixXd probs;  // F x 2 validity softmax
  GaussianHeadOutput head_out;
};

struct GazeModel::HeadGradients {
  Eigen::VectorXd mean_x, mean_y, mean_t;
  Eigen::VectorXd logvar_x, logvar_y, logvar_t;
  Eigen::MatrixXd logits;  // F x 2
};

namespace {

using NormCache = GazeModel::Trace::NormCache;

Eigen::MatrixXd linear_forward(const Eigen::MatrixXd& x, const Parameter& w,
                               const Parameter& b) {
  Eigen::MatrixXd y = x * w.value;
  y.rowwise() += b.value.row(0);
  return y;
}

Eigen::MatrixXd linear_backward(const Eigen::MatrixXd& dy, const Eigen::MatrixXd& x,
                                Parameter& w, Parameter& b) {
  w.grad.noalias() += x.transpose() * dy;
  b.grad.row(0) += dy.colwise().sum();
  return dy * w.value.transpose();
}

Eigen::MatrixXd norm_forward(const Eigen::MatrixXd& x, const Parameter& gamma,
                             const Parameter& beta, NormCache& c) {
  const Eigen::Index rows = x.rows();
  const Eigen::Index cols = x.cols();
  c.xhat.resize(rows, cols);
  c.inv_std.resize(rows);
  Eigen::MatrixXd y(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double mu = x.row(r).mean();
    const double var = (x.row(r).array() - mu).square().sum() / static_cast<double>(cols);
    const double inv = 1.0 / std::sqrt(var + kNormEps);
    c.inv_std(r) = inv;
    c.xhat.row(r) = ((x.row(r).array() - mu) * inv).matrix();
    y.row(r) = (c.xhat.row(r).array() * gamma.value.row(0).array()).matrix() + beta.value.row(0);
  }
  return y;
}

Eigen::MatrixXd norm_backward(const Eigen::MatrixXd& dy, const NormCache& c, Parameter& gamma,
                              Parameter& beta) {
  gamma.grad.row(0) += (dy.array() * c.xhat.array()).colwise().sum().matrix();
  beta.grad.row(0) += dy.colwise().sum();
  Eigen::MatrixXd dx(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const Eigen::Array<double, 1, Eigen::Dynamic> g =
        dy.row(r).array() * gamma.value.row(0).array();
    const double mean_g = g.mean();
    const double mean_gx = (g * c.xhat.row(r).array()).mean();
    dx.row(r) = (c.inv_std(r) * (g - mean_g - c.xhat.row(r).array() * mean_gx)).matrix();
  }
  return dx;
}

}  // namespace

GazeModel::GazeModel(GazeModelConfig cfg) : cfg_(cfg) {
  if (cfg_.max_fixations < 1) throw ValidationError("config: max_fixations must be >= 1");
  if (cfg_.model_dim < 4 || cfg_.model_dim % 4 != 0) {
    throw ValidationError("config: model_dim must be a positive multiple of 4");
  }
  if (cfg_.n_heads < 1 || cfg_.model_dim % cfg_.n_heads != 0) {
    throw ValidationError("config: model_dim must be divisible by n_heads");
  }
  if (cfg_.n_decoder_layers < 1) throw ValidationError("config: n_decoder_layers must be >= 1");
  if (cfg_.mlp_hidden < 1) throw ValidationError("config: mlp_hidden must be >= 1");

  Rng rng(derive_stream(cfg_.seed, 0x1217));
  const int d = cfg_.model_dim;
  const int ffn_hidden = 4 * d;

  auto add_param = [&](const std::string& name, int group, int rows, int cols) {
    Parameter p;
    p.name = name;
    p.group = group;
    p.value = Eigen::MatrixXd::Zero(rows, cols);
    p.grad = Eigen::MatrixXd::Zero(rows, cols);
    p.adam_m = Eigen::MatrixXd::Zero(rows, cols);
    p.adam_v = Eigen::MatrixXd::Zero(rows, cols);
    params_.push_back(std::move(p));
    return static_cast<int>(params_.size() - 1);
  };
  auto xavier_fill = [&](int idx) {
    Eigen::MatrixXd& m = params_[static_cast<std::size_t>(idx)].value;
    const double limit = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rng.uniform(-limit, limit);
    }
  };
  auto add_linear = [&](const std::string& name, int group, int in_dim, int out_dim) {
    LinearIdx idx;
    idx.w = add_param(name + ".w", group, in_dim, out_dim);
    xavier_fill(idx.w);
    idx.b = add_param(name + ".b", group, 1, out_dim);
    return idx;
  };
  auto add_norm = [&](const std::string& name, int group) {
    NormIdx idx;
    idx.gamma = add_param(name + ".gamma", group, 1, d);
    params_[static_cast<std::size_t>(idx.gamma)].value.setOnes();
    idx.beta = add_param(name + ".beta", group, 1, d);
    return idx;
  };

  queries_ = add_param("queries", 1, cfg_.max_fixations, d);
  {
    Eigen::MatrixXd& q = params_[static_cast<std::size_t>(queries_)].value;
    for (Eigen::Index r = 0; r < q.rows(); ++r) {
      for (Eigen::Index c = 0; c < q.cols(); ++c) q(r, c) = rng.normal();
    }
  }

  layers_.resize(static_cast<std::size_t>(cfg_.n_decoder_layers));
  for (int l = 0; l < cfg_.n_decoder_layers; ++l) {
    const std::string base = "layer" + std::to_string(l);
    LayerIdx& layer = layers_[static_cast<std::size_t>(l)];
    for (const auto& [attn, tag] :
         {std::pair<AttnIdx*, const char*>{&layer.self_attn, ".self"},
          std::pair<AttnIdx*, const char*>{&layer.cross_attn, ".cross"}}) {
      attn->q = add_linear(base + tag + ".q", 0, d, d);
      attn->k = add_linear(base + tag + ".k", 0, d, d);
      attn->v = add_linear(base + tag + ".v", 0, d, d);
      attn->o = add_linear(base + tag + ".o", 0, d, d);
    }
    layer.ffn1 = add_linear(base + ".ffn1", 0, d, ffn_hidden);
    layer.ffn2 = add_linear(base + ".ffn2", 0, ffn_hidden, d);
    layer.ln1 = add_norm(base + ".ln1", 0);
    layer.ln2 = add_norm(base + ".ln2", 0);
    layer.ln3 = add_norm(base + ".ln3", 0);
  }

  static const char* kHeadNames[7] = {"mean_x", "logvar_x", "mean_y", "logvar_y",
                                      "mean_t", "logvar_t", "validity"};
  for (int h = 0; h < 7; ++h) {
    const std::string base = std::string("head.") + kHeadNames[h];
    const int out_dim = (h == 6) ? 2 : 1;
    heads_[static_cast<std::size_t>(h)].l1 = add_linear(base + ".l1", 1, d, cfg_.mlp_hidden);
    heads_[static_cast<std::size_t>(h)].l2 =
        add_linear(base + ".l2", 1, cfg_.mlp_hidden, out_dim);
  }
  // start with tight output variances so early samples stay near the means
  for (int h : {1, 3, 5}) {
    params_[static_cast<std::size_t>(heads_[static_cast<std::size_t>(h)].l2.b)]
        .value.setConstant(-3.0);
  }
}

void GazeModel::set_all_parameters_zero() {
  for (Parameter& p : params_) p.value.setZero();
}

void GazeModel::zero_grad() {
  for (Parameter& p : params_) p.grad.setZero();
}

namespace {

void softmax_rows_inplace(Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double mx = m.row(r).maxCoeff();
    m.row(r) = (m.row(r).array() - mx).exp().matrix();
    m.row(r) /= m.row(r).sum();
  }
}

}  // namespace

void GazeModel::run_forward(const MultimodalEmbedding& m, Trace& trace) const {
  validate_embedding(m);
  const int d = cfg_.model_dim;
  if (m.patches.cols() != d) {
    throw ValidationError("embedding width " + std::to_string(m.patches.cols()) +
                          " does not match model width " + std::to_string(d));
  }

  trace.memory = m.patches;
  if (cfg_.add_positional_encoding) {
    trace.memory += positional_encoding_2d(m.grid_h, m.grid_w, d);
  }

  const int n_heads = cfg_.n_heads;
  const int dh = d / n_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  auto attention = [&](const Eigen::MatrixXd& q_in, const Eigen::MatrixXd& kv_in,
                       const AttnIdx& idx, Trace::AttnCache& c) {
    c.q_in = q_in;
    c.kv_in = kv_in;
    c.Q = linear_forward(q_in, params_[idx.q.w], params_[idx.q.b]);
    c.K = linear_forward(kv_in, params_[idx.k.w], params_[idx.k.b]);
    c.V = linear_forward(kv_in, params_[idx.v.w], params_[idx.v.b]);
    c.A.resize(static_cast<std::size_t>(n_heads));
    c.concat.resize(q_in.rows(), d);
    for (int h = 0; h < n_heads; ++h) {
      Eigen::MatrixXd scores =
          c.Q.middleCols(h * dh, dh) * c.K.middleCols(h * dh, dh).transpose() * scale;
      softmax_rows_inplace(scores);
      c.A[static_cast<std::size_t>(h)] = std::move(scores);
      c.concat.middleCols(h * dh, dh).noalias() =
          c.A[static_cast<std::size_t>(h)] * c.V.middleCols(h * dh, dh);
    }
    return linear_forward(c.concat, params_[idx.o.w], params_[idx.o.b]);
  };

  Eigen::MatrixXd x = params_[static_cast<std::size_t>(queries_)].value;
  trace.layers.resize(layers_.size());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const LayerIdx& layer = layers_[l];
    Trace::LayerCache& lc = trace.layers[l];
    const Eigen::MatrixXd sa = attention(x, x, layer.self_attn, lc.self_attn);
    const Eigen::MatrixXd x1 =
        norm_forward(x + sa, params_[layer.ln1.gamma], params_[layer.ln1.beta], lc.ln1);
    const Eigen::MatrixXd ca = attention(x1, trace.memory, layer.cross_attn, lc.cross_attn);
    const Eigen::MatrixXd x2 =
        norm_forward(x1 + ca, params_[layer.ln2.gamma], params_[layer.ln2.beta], lc.ln2);
    lc.ffn.in = x2;
    lc.ffn.pre = linear_forward(x2, params_[layer.ffn1.w], params_[layer.ffn1.b]);
    lc.ffn.hidden = lc.ffn.pre.cwiseMax(0.0);
    const Eigen::MatrixXd f =
        linear_forward(lc.ffn.hidden, params_[layer.ffn2.w], params_[layer.ffn2.b]);
    x = norm_forward(x2 + f, params_[layer.ln3.gamma], params_[layer.ln3.beta], lc.ln3);
  }
  trace.decoder_out = x;

  for (int h = 0; h < 7; ++h) {
    const HeadIdx& head = heads_[static_cast<std::size_t>(h)];
    Trace::HeadCache& hc = trace.heads[static_cast<std::size_t>(h)];
    hc.pre = linear_forward(x, params_[head.l1.w], params_[head.l1.b]);
    hc.hidden = hc.pre.cwiseMax(0.0);
    hc.out = linear_forward(hc.hidden, params_[head.l2.w], params_[head.l2.b]);
  }
  trace.probs = trace.heads[6].out;
  softmax_rows_inplace(trace.probs);

  GaussianHeadOutput& out = trace.head_out;
  out.mean_x = trace.heads[0].out.col(0);
  out.logvar_x = trace.heads[1].out.col(0);
  out.mean_y = trace.heads[2].out.col(0);
  out.logvar_y = trace.heads[3].out.col(0);
  out.mean_t = trace.heads[4].out.col(0);
  out.logvar_t = trace.heads[5].out.col(0);
  out.pad_prob = trace.probs.col(1);
}

void GazeModel::run_backward(const Trace& trace, const HeadGradients& grads) {
  const int d = cfg_.model_dim;
  const int n_heads = cfg_.n_heads;
  const int dh = d / n_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const Eigen::Index F = trace.decoder_out.rows();

  // loss_gradients supplies logit-space gradients for the validity head, so
  // no softmax backward is needed here
  Eigen::MatrixXd dz = Eigen::MatrixXd::Zero(F, d);
  for (int h = 0; h < 7; ++h) {
    const HeadIdx& head = heads_[static_cast<std::size_t>(h)];
    const Trace::HeadCache& hc = trace.heads[static_cast<std::size_t>(h)];
    Eigen::MatrixXd dout;
    switch (h) {
      case 0: dout = grads.mean_x; break;
      case 1: dout = grads.logvar_x; break;
      case 2: dout = grads.mean_y; break;
      case 3: dout = grads.logvar_y; break;
      case 4: dout = grads.mean_t; break;
      case 5: dout = grads.logvar_t; break;
      default: dout = grads.logits; break;
    }
    if (dout.size() == 0 || dout.isZero(0.0)) continue;
    Eigen::MatrixXd d_hidden =
        linear_backward(dout, hc.hidden, params_[head.l2.w], params_[head.l2.b]);
    Eigen::MatrixXd d_pre =
        (d_hidden.array() * (hc.pre.array() > 0.0).cast<double>()).matrix();
    dz += linear_backward(d_pre, trace.decoder_out, params_[head.l1.w], params_[head.l1.b]);
  }

  auto attention_backward = [&](const Eigen::MatrixXd& dout, const Trace::AttnCache& c,
                                const AttnIdx& idx, Eigen::MatrixXd* d_kv_out) {
    Eigen::MatrixXd d_concat = linear_backward(dout, c.concat, params_[idx.o.w], params_[idx.o.b]);
    Eigen::MatrixXd dQ = Eigen::MatrixXd::Zero(c.Q.rows(), d);
    Eigen::MatrixXd dK = Eigen::MatrixXd::Zero(c.K.rows(), d);
    Eigen::MatrixXd dV = Eigen::MatrixXd::Zero(c.V.rows(), d);
    for (int h = 0; h < n_heads; ++h) {
      const Eigen::MatrixXd& A = c.A[static_cast<std::size_t>(h)];
      const auto dOh = d_concat.middleCols(h * dh, dh);
      Eigen::MatrixXd dA = dOh * c.V.middleCols(h * dh, dh).transpose();
      dV.middleCols(h * dh, dh).noalias() = A.transpose() * dOh;
      // softmax backward per row
      Eigen::MatrixXd dS = A.cwiseProduct(dA);
      const Eigen::VectorXd row_sums = dS.rowwise().sum();
      dS -= A.cwiseProduct(row_sums.replicate(1, A.cols()));
      dQ.middleCols(h * dh, dh).noalias() = dS * c.K.middleCols(h * dh, dh) * scale;
      dK.middleCols(h * dh, dh).noalias() =
          dS.transpose() * c.Q.middleCols(h * dh, dh) * scale;
    }
    Eigen::MatrixXd d_q_in = linear_backward(dQ, c.q_in, params_[idx.q.w], params_[idx.q.b]);
    Eigen::MatrixXd d_k_in = linear_backward(dK, c.kv_in, params_[idx.k.w], params_[idx.k.b]);
    Eigen::MatrixXd d_v_in = linear_backward(dV, c.kv_in, params_[idx.v.w], params_[idx.v.b]);
    if (d_kv_out) *d_kv_out = d_k_in + d_v_in;
    return d_q_in;
  };

  Eigen::MatrixXd dx = dz;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const LayerIdx& layer = layers_[l];
    const Trace::LayerCache& lc = trace.layers[l];

    Eigen::MatrixXd dsum3 =
        norm_backward(dx, lc.ln3, params_[layer.ln3.gamma], params_[layer.ln3.beta]);
    Eigen::MatrixXd dx2 = dsum3;
    {
      Eigen::MatrixXd d_hidden =
          linear_backward(dsum3, lc.ffn.hidden, params_[layer.ffn2.w], params_[layer.ffn2.b]);
      Eigen::MatrixXd d_pre =
          (d_hidden.array() * (lc.ffn.pre.array() > 0.0).cast<double>()).matrix();
      dx2 += linear_backward(d_pre, lc.ffn.in, params_[layer.ffn1.w], params_[layer.ffn1.b]);
    }

    Eigen::MatrixXd dsum2 =
        norm_backward(dx2, lc.ln2, params_[layer.ln2.gamma], params_[layer.ln2.beta]);
    Eigen::MatrixXd dx1 = dsum2;
    dx1 += attention_backward(dsum2, lc.cross_attn, layer.cross_attn, nullptr);

    Eigen::MatrixXd dsum1 =
        norm_backward(dx1, lc.ln1, params_[layer.ln1.gamma], params_[layer.ln1.beta]);
    Eigen::MatrixXd d_kv;
    Eigen::MatrixXd d_q = attention_backward(dsum1, lc.self_attn, layer.self_attn, &d_kv);
    dx = dsum1 + d_q + d_kv;
  }
  params_[static_cast<std::size_t>(queries_)].grad += dx;
}

FixationDecoderOutput GazeModel::decoder_forward(const MultimodalEmbedding& m) const {
  Trace trace;
  run_forward(m, trace);
  return {trace.decoder_out};
}

GaussianHeadOutput GazeModel::heads_forward(const FixationDecoderOutput& z) const {
  if (z.z.rows() != cfg_.max_fixations || z.z.cols() != cfg_.model_dim) {
    throw ValidationError("heads_forward: decoder output must be F x d");
  }
  GaussianHeadOutput out;
  Eigen::MatrixXd head_vals[7];
  for (int h = 0; h < 7; ++h) {
    const HeadIdx& head = heads_[static_cast<std::size_t>(h)];
    const Eigen::MatrixXd pre = linear_forward(z.z, params_[head.l1.w], params_[head.l1.b]);
    const Eigen::MatrixXd hidden = pre.cwiseMax(0.0);
    head_vals[h] = linear_forward(hidden, params_[head.l2.w], params_[head.l2.b]);
  }
  out.mean_x = head_vals[0].col(0);
  out.logvar_x = head_vals[1].col(0);
  out.mean_y = head_vals[2].col(0);
  out.logvar_y = head_vals[3].col(0);
  out.mean_t = head_vals[4].col(0);
  out.logvar_t = head_vals[5].col(0);
  softmax_rows_inplace(head_vals[6]);
  out.pad_prob = head_vals[6].col(1);
  return out;
}

GaussianHeadOutput GazeModel::predict(const MultimodalEmbedding& m) const {
  Trace trace;
  run_forward(m, trace);
  return trace.head_out;
}

double reparam_sample(double mean, double logvar, double eps) {
  return mean + std::exp(0.5 * logvar) * eps;
}

SampledFixations reparam_sample(const GaussianHeadOutput& out, const EpsDraws& eps) {
  SampledFixations s;
  s.x = out.mean_x.array() + (0.5 * out.logvar_x.array()).exp() * eps.x.array();
  s.y = out.mean_y.array() + (0.5 * out.logvar_y.array()).exp() * eps.y.array();
  s.t = out.mean_t.array() + (0.5 * out.logvar_t.array()).exp() * eps.t.array();
  return s;
}

EpsDraws draw_eps(int rows, std::uint64_t seed) {
  Rng rng(seed);
  EpsDraws e;
  e.x.resize(rows);
  e.y.resize(rows);
  e.t.resize(rows);
  for (int i = 0; i < rows; ++i) e.x(i) = rng.normal();
  for (int i = 0; i < rows; ++i) e.y(i) = rng.normal();
  for (int i = 0; i < rows; ++i) e.t(i) = rng.normal();
  return e;
}

EpsDraws zero_eps(int rows) {
  EpsDraws e;
  e.x = Eigen::VectorXd::Zero(rows);
  e.y = Eigen::VectorXd::Zero(rows);
  e.t = Eigen::VectorXd::Zero(rows);
  return e;
}

namespace {

double bce(double p, int target) {
  return -(target * std::log(p) + (1 - target) * std::log(1.0 - p));
}

struct CaseLoss {
  double l_spa = 0.0;
  double l_val = 0.0;
};

CaseLoss case_loss(const PredictionWithSamples& pred, const FixationQuadSequence& gt) {
  const int F = static_cast<int>(gt.rows.size());
  if (pred.samples.x.size() != F || pred.head.pad_prob.size() != F) {
    throw ValidationError("loss: prediction row count does not match ground truth");
  }
  const int l = valid_length(gt);
  if (l == 0) {
    throw ValidationError("loss undefined for empty ground truth");
  }
  CaseLoss out;
  for (int i = 0; i < l; ++i) {
    const QuadRow& row = gt.rows[static_cast<std::size_t>(i)];
    out.l_spa += std::abs(pred.samples.x(i) - row.x) + std::abs(pred.samples.y(i) - row.y) +
                 std::abs(pred.samples.t(i) - row.t / 1000.0);
  }
  out.l_spa /= static_cast<double>(l);
  for (int i = 0; i < F; ++i) {
    out.l_val += bce(clamp_prob(pred.head.pad_prob(i)), gt.rows[static_cast<std::size_t>(i)].v);
  }
  out.l_val /= static_cast<double>(F);
  return out;
}

}  // namespace

LossBreakdown loss_total(const std::vector<PredictionWithSamples>& preds,
                         const std::vector<FixationQuadSequence>& gts) {
  if (preds.empty()) throw ValidationError("loss_total: empty batch");
  if (preds.size() != gts.size()) {
    throw ValidationError("loss_total: prediction/ground-truth count mismatch");
  }
  LossBreakdown sum;
  for (std::size_t k = 0; k < preds.size(); ++k) {
    const CaseLoss cl = case_loss(preds[k], gts[k]);
    sum.l_spa += cl.l_spa;
    sum.l_val += cl.l_val;
  }
  const double n = static_cast<double>(preds.size());
  sum.l_spa /= n;
  sum.l_val /= n;
  sum.total = sum.l_spa + sum.l_val;
  return sum;
}

namespace {

GazeModel::HeadGradients loss_gradients(const PredictionWithSamples& pred,
                                        const FixationQuadSequence& gt, int batch_size) {
  const int F = static_cast<int>(gt.rows.size());
  const int l = valid_length(gt);
  if (l == 0) throw ValidationError("loss undefined for empty ground truth");
  const double inv_n = 1.0 / static_cast<double>(batch_size);

  GazeModel::HeadGradients g;
  g.mean_x = Eigen::VectorXd::Zero(F);
  g.mean_y = Eigen::VectorXd::Zero(F);
  g.mean_t = Eigen::VectorXd::Zero(F);
  g.logvar_x = Eigen::VectorXd::Zero(F);
  g.logvar_y = Eigen::VectorXd::Zero(F);
  g.logvar_t = Eigen::VectorXd::Zero(F);
  g.logits = Eigen::MatrixXd::Zero(F, 2);

  const double spa_scale = inv_n / static_cast<double>(l);
  for (int i = 0; i < l; ++i) {
    const QuadRow& row = gt.rows[static_cast<std::size_t>(i)];
    const double sx = sign_or_zero(pred.samples.x(i) - row.x) * spa_scale;
    const double sy = sign_or_zero(pred.samples.y(i) - row.y) * spa_scale;
    const double st = sign_or_zero(pred.samples.t(i) - row.t / 1000.0) * spa_scale;
    g.mean_x(i) = sx;
    g.mean_y(i) = sy;
    g.mean_t(i) = st;
    // d sample / d logvar = 0.5 * exp(0.5 logvar) * eps
    g.logvar_x(i) = sx * 0.5 * std::exp(0.5 * pred.head.logvar_x(i)) * pred.eps.x(i);
    g.logvar_y(i) = sy * 0.5 * std::exp(0.5 * pred.head.logvar_y(i)) * pred.eps.y(i);
    g.logvar_t(i) = st * 0.5 * std::exp(0.5 * pred.head.logvar_t(i)) * pred.eps.t(i);
  }

  const double val_scale = inv_n / static_cast<double>(F);
  for (int i = 0; i < F; ++i) {
    const double p = pred.head.pad_prob(i);
    if (p <= kProbClamp || p >= 1.0 - kProbClamp) continue;  // clamped: zero gradient
    const double v = static_cast<double>(gt.rows[static_cast<std::size_t>(i)].v);
    const double dz = (p - v) * val_scale;  // softmax + BCE collapse
    g.logits(i, 1) = dz;
    g.logits(i, 0) = -dz;
  }
  return g;
}

}  // namespace

DecodedScanpath decode_scanpath_with_eps(const GaussianHeadOutput& out, int image_width,
                                         int image_height, const EpsDraws& eps,
                                         std::string case_id) {
  if (image_width <= 0 || image_height <= 0) {
    throw ValidationError("decode_scanpath: image dimensions must be positive");
  }
  const Eigen::Index F = out.pad_prob.size();
  if (eps.x.size() != F || eps.y.size() != F || eps.t.size() != F) {
    throw ValidationError("decode_scanpath: eps draw count does not match F");
  }
  DecodedScanpath result;
  result.scanpath.case_id = std::move(case_id);
  result.scanpath.image_width = image_width;
  result.scanpath.image_height = image_height;
  for (Eigen::Index i = 0; i < F; ++i) {
    if (out.pad_prob(i) > 0.5) break;  // first padding decision terminates
    Fixation f;
    f.x = std::clamp(reparam_sample(out.mean_x(i), out.logvar_x(i), eps.x(i)), 0.0, 1.0);
    f.y = std::clamp(reparam_sample(out.mean_y(i), out.logvar_y(i), eps.y(i)), 0.0, 1.0);
    const double t_seconds = reparam_sample(out.mean_t(i), out.logvar_t(i), eps.t(i));
    f.duration_ms = std::max(1.0, t_seconds * 1000.0);
    result.scanpath.fixations.push_back(f);
  }
  result.degenerate = result.scanpath.fixations.empty();
  return result;
}

DecodedScanpath decode_scanpath(const GaussianHeadOutput& out, int image_width,
                                int image_height, bool deterministic, std::uint64_t seed,
                                std::string case_id) {
  const int F = static_cast<int>(out.pad_prob.size());
  const EpsDraws eps =
      deterministic ? zero_eps(F) : draw_eps(F, derive_stream(seed, 0xDEC0DE));
  return decode_scanpath_with_eps(out, image_width, image_height, eps, std::move(case_id));
}

namespace {

void validate_training_cases(const GazeModel& model, const std::vector<TrainingCase>& cases) {
  if (cases.empty()) throw ValidationError("training corpus is empty");
  const int F = model.config().max_fixations;
  for (const TrainingCase& c : cases) {
    if (static_cast<int>(c.target.rows.size()) != F) {
      throw ValidationError("case '" + c.case_id + "': target row count " +
                            std::to_string(c.target.rows.size()) + " does not match F = " +
                            std::to_string(F));
    }
    if (valid_length(c.target) == 0) {
      throw ValidationError("case '" + c.case_id + "': loss undefined for empty ground truth");
    }
  }
}

}  // namespace

double loss_gradient_norm(GazeModel& model, const std::vector<TrainingCase>& batch,
                          const std::vector<EpsDraws>* eps) {
  validate_training_cases(model, batch);
  const int F = model.config().max_fixations;
  model.zero_grad();
  const int n = static_cast<int>(batch.size());
  for (int k = 0; k < n; ++k) {
    GazeModel::Trace trace;
    model.run_forward(batch[static_cast<std::size_t>(k)].embedding, trace);
    PredictionWithSamples pred;
    pred.head = trace.head_out;
    pred.eps = eps ? (*eps)[static_cast<std::size_t>(k)] : zero_eps(F);
    pred.samples = reparam_sample(pred.head, pred.eps);
    model.run_backward(trace,
                       loss_gradients(pred, batch[static_cast<std::size_t>(k)].target, n));
  }
  double sq = 0.0;
  for (const Parameter& p : model.parameters()) sq += p.grad.squaredNorm();
  return std::sqrt(sq);
}

double grad_check(GazeModel& model, const std::vector<TrainingCase>& batch, double step,
                  int n_directions, std::uint64_t seed) {
  if (!(step >= 1e-6 && step <= 1e-3)) {
    throw ValidationError("grad_check: step must be in [1e-6, 1e-3]");
  }
  validate_training_cases(model, batch);
  const int F = model.config().max_fixations;
  const int n = static_cast<int>(batch.size());

  auto batch_predictions = [&](const std::vector<EpsDraws>& eps,
                               std::vector<GazeModel::Trace>* traces) {
    std::vector<PredictionWithSamples> preds(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
      GazeModel::Trace trace;
      model.run_forward(batch[static_cast<std::size_t>(k)].embedding, trace);
      preds[static_cast<std::size_t>(k)].head = trace.head_out;
      preds[static_cast<std::size_t>(k)].eps = eps[static_cast<std::size_t>(k)];
      preds[static_cast<std::size_t>(k)].samples =
          reparam_sample(trace.head_out, eps[static_cast<std::size_t>(k)]);
      if (traces) (*traces)[static_cast<std::size_t>(k)] = std::move(trace);
    }
    return preds;
  };

  std::vector<FixationQuadSequence> targets;
  targets.reserve(static_cast<std::size_t>(n));
  for (const TrainingCase& c : batch) targets.push_back(c.target);

  // find an evaluation point clear of the L1 kinks and the probability clamp
  const double kink_margin = 10.0 * step;
  std::vector<EpsDraws> eps(static_cast<std::size_t>(n));
  bool clear = false;
  for (int attempt = 0; attempt < 10 && !clear; ++attempt) {
    for (int k = 0; k < n; ++k) {
      eps[static_cast<std::size_t>(k)] =
          draw_eps(F, derive_stream(seed, 0xA000 + static_cast<std::uint64_t>(attempt) * 4096 +
                                              static_cast<std::uint64_t>(k)));
    }
    const auto preds = batch_predictions(eps, nullptr);
    clear = true;
    for (int k = 0; k < n && clear; ++k) {
      const auto& pred = preds[static_cast<std::size_t>(k)];
      const FixationQuadSequence& gt = targets[static_cast<std::size_t>(k)];
      const int l = valid_length(gt);
      for (int i = 0; i < l && clear; ++i) {
        const QuadRow& row = gt.rows[static_cast<std::size_t>(i)];
        if (std::abs(pred.samples.x(i) - row.x) <= kink_margin ||
            std::abs(pred.samples.y(i) - row.y) <= kink_margin ||
            std::abs(pred.samples.t(i) - row.t / 1000.0) <= kink_margin) {
          clear = false;
        }
      }
      for (int i = 0; i < F && clear; ++i) {
        const double p = pred.head.pad_prob(i);
        if (p <= 2.0 * kProbClamp || p >= 1.0 - 2.0 * kProbClamp) clear = false;
      }
    }
  }
  if (!clear) {
    throw std::runtime_error("grad_check: could not find a kink-free point in 10 attempts");
  }

  // analytic gradients at the chosen point
  model.zero_grad();
  {
    std::vector<GazeModel::Trace> traces(static_cast<std::size_t>(n));
    const auto preds = batch_predictions(eps, &traces);
    for (int k = 0; k < n; ++k) {
      model.run_backward(traces[static_cast<std::size_t>(k)],
                         loss_gradients(preds[static_cast<std::size_t>(k)],
                                        targets[static_cast<std::size_t>(k)], n));
    }
  }

  std::vector<std::vector<int>> group_params(2);
  for (std::size_t i = 0; i < model.parameters().size(); ++i) {
    group_params[static_cast<std::size_t>(model.parameters()[i].group)].push_back(
        static_cast<int>(i));
  }

  auto eval_loss = [&]() {
    const auto preds = batch_predictions(eps, nullptr);
    return loss_total(preds, targets).total;
  };

  Rng dir_rng(derive_stream(seed, 0xD12));
  double max_rel = 0.0;
  for (int dir_idx = 0; dir_idx < n_directions; ++dir_idx) {
    const auto& group = group_params[static_cast<std::size_t>(dir_idx % 2)];
    std::size_t total = 0;
    for (const int pi : group) {
      total += static_cast<std::size_t>(model.parameters()[static_cast<std::size_t>(pi)]
                                            .value.size());
    }
    std::vector<double> direction(total);
    double norm_sq = 0.0;
    for (double& v : direction) {
      v = dir_rng.normal();
      norm_sq += v * v;
    }
    const double inv_norm = 1.0 / std::sqrt(norm_sq);
    for (double& v : direction) v *= inv_norm;

    double analytic = 0.0;
    {
      std::size_t off = 0;
      for (const int pi : group) {
        const Eigen::MatrixXd& g = model.parameters()[static_cast<std::size_t>(pi)].grad;
        for (Eigen::Index r = 0; r < g.rows(); ++r) {
          for (Eigen::Index c = 0; c < g.cols(); ++c) analytic += g(r, c) * direction[off++];
        }
      }
    }

    std::vector<Eigen::MatrixXd> snapshot;
    snapshot.reserve(group.size());
    for (const int pi : group) {
      snapshot.push_back(model.parameters()[static_cast<std::size_t>(pi)].value);
    }
    auto set_offset = [&](double delta) {
      std::size_t off = 0;
      for (std::size_t gi = 0; gi < group.size(); ++gi) {
        Eigen::MatrixXd& v =
            model.parameters()[static_cast<std::size_t>(group[gi])].value;
        v = snapshot[gi];
        for (Eigen::Index r = 0; r < v.rows(); ++r) {
          for (Eigen::Index c = 0; c < v.cols(); ++c) v(r, c) += delta * direction[off++];
        }
      }
    };

    set_offset(step);
    const double loss_plus = eval_loss();
    set_offset(-step);
    const double loss_minus = eval_loss();
    set_offset(0.0);  // exact restore from the snapshot

    const double fd = (loss_plus - loss_minus) / (2.0 * step);
    const double rel =
        std::abs(analytic - fd) / std::max({std::abs(analytic), std::abs(fd), 1e-8});
    max_rel = std::max(max_rel, rel);
  }
  return max_rel;
}

TrainResult train(GazeModel& model, const std::vector<TrainingCase>& corpus,
                  const TrainConfig& cfg) {
  validate_training_cases(model, corpus);
  if (cfg.epochs < 1) throw ValidationError("train: epochs must be >= 1");
  if (cfg.batch_size < 1) throw ValidationError("train: batch_size must be >= 1");

  const int F = model.config().max_fixations;
  const int n = static_cast<int>(corpus.size());
  Rng shuffle_rng(derive_stream(cfg.seed, 1));
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;

  TrainResult result;
  result.epoch_loss.reserve(static_cast<std::size_t>(cfg.epochs));
  std::uint64_t adam_t = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_sum = 0.0;

    for (int start = 0; start < n; start += cfg.batch_size) {
      const int nb = std::min(cfg.batch_size, n - start);
      model.zero_grad();
      Rng eps_rng(derive_stream(cfg.seed, 0x100000 + adam_t));
      double batch_sum = 0.0;

      for (int b = 0; b < nb; ++b) {
        const TrainingCase& sample =
            corpus[static_cast<std::size_t>(order[static_cast<std::size_t>(start + b)])];
        GazeModel::Trace trace;
        model.run_forward(sample.embedding, trace);

        PredictionWithSamples pred;
        pred.head = trace.head_out;
        pred.eps.x.resize(F);
        pred.eps.y.resize(F);
        pred.eps.t.resize(F);
        for (int i = 0; i < F; ++i) pred.eps.x(i) = eps_rng.normal();
        for (int i = 0; i < F; ++i) pred.eps.y(i) = eps_rng.normal();
        for (int i = 0; i < F; ++i) pred.eps.t(i) = eps_rng.normal();
        pred.samples = reparam_sample(pred.head, pred.eps);

        const CaseLoss cl = case_loss(pred, sample.target);
        batch_sum += cl.l_spa + cl.l_val;
        model.run_backward(trace, loss_gradients(pred, sample.target, nb));
      }

      if (!std::isfinite(batch_sum)) {
        throw TrainingDiverged("training diverged (non-finite loss) at epoch " +
                                   std::to_string(epoch + 1),
                               result.epoch_loss);
      }

      ++adam_t;
      const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(adam_t));
      const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(adam_t));
      for (Parameter& p : model.parameters()) {
        const double lr = p.group == 0 ? cfg.lr_decoder : cfg.lr_heads;
        if (lr == 0.0) continue;
        p.adam_m = cfg.adam_beta1 * p.adam_m + (1.0 - cfg.adam_beta1) * p.grad;
        p.adam_v = cfg.adam_beta2 * p.adam_v + (1.0 - cfg.adam_beta2) * p.grad.cwiseProduct(p.grad);
        const Eigen::ArrayXXd m_hat = p.adam_m.array() / bc1;
        const Eigen::ArrayXXd v_hat = p.adam_v.array() / bc2;
        p.value.array() -= lr * m_hat / (v_hat.sqrt() + cfg.adam_eps);
      }

      epoch_sum += batch_sum;
    }
    result.epoch_loss.push_back(epoch_sum / static_cast<double>(n));
  }
  return result;
}

void save_model(const std::string& path, const GazeModel& model) {
  TensorContainer container;
  container.kind = "gaze-model";
  const GazeModelConfig& cfg = model.config();
  container.meta = {{"max_fixations", cfg.max_fixations},
                    {"model_dim", cfg.model_dim},
                    {"n_decoder_layers", cfg.n_decoder_layers},
                    {"n_heads", cfg.n_heads},
                    {"mlp_hidden", cfg.mlp_hidden},
                    {"seed", cfg.seed},
                    {"add_positional_encoding", cfg.add_positional_encoding}};
  for (const Parameter& p : model.parameters()) {
    NamedTensor t;
    t.name = p.name;
    t.shape = {p.value.rows(), p.value.cols()};
    t.data.resize(static_cast<std::size_t>(p.value.size()));
    for (Eigen::Index r = 0; r < p.value.rows(); ++r) {
      for (Eigen::Index c = 0; c < p.value.cols(); ++c) {
        t.data[static_cast<std::size_t>(r) * static_cast<std::size_t>(p.value.cols()) +
               static_cast<std::size_t>(c)] = static_cast<float>(p.value(r, c));
      }
    }
    container.tensors.push_back(std::move(t));
  }
  write_container(path, container);
}

GazeModel load_model(const std::string& path) {
  const TensorContainer container = read_container(path);
  if (container.kind != "gaze-model") {
    throw ValidationError("'" + path + "': expected a gaze-model container, got kind '" +
                          container.kind + "'");
  }
  GazeModelConfig cfg;
  cfg.max_fixations = container.meta.at("max_fixations").get<int>();
  cfg.model_dim = container.meta.at("model_dim").get<int>();
  cfg.n_decoder_layers = container.meta.at("n_decoder_layers").get<int>();
  cfg.n_heads = container.meta.at("n_heads").get<int>();
  cfg.mlp_hidden = container.meta.at("mlp_hidden").get<int>();
  cfg.seed = container.meta.at("seed").get<std::uint64_t>();
  cfg.add_positional_encoding = container.meta.at("add_positional_encoding").get<bool>();

  GazeModel model(cfg);
  for (Parameter& p : model.parameters()) {
    const NamedTensor* t = container.find(p.name);
    if (!t) throw ValidationError("'" + path + "': missing tensor '" + p.name + "'");
    if (t->shape.size() != 2 || t->shape[0] != p.value.rows() || t->shape[1] != p.value.cols()) {
      throw ValidationError("'" + path + "': tensor '" + p.name + "' has unexpected shape");
    }
    for (Eigen::Index r = 0; r < p.value.rows(); ++r) {
      for (Eigen::Index c = 0; c < p.value.cols(); ++c) {
        p.value(r, c) = static_cast<double>(
            t->data[static_cast<std::size_t>(r) * static_cast<std::size_t>(p.value.cols()) +
                    static_cast<std::size_t>(c)]);
      }
    }
  }
  return model;
}

}  // namespace gazebench
