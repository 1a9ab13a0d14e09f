// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The GinAR Engine Authors

#include "core/model.hpp"

#include "core/init.hpp"

namespace ginar::model {

namespace {

template <typename Real>
GateParams<Real> init_gate(std::size_t width, bool with_bias, std::mt19937_64 &rng) {
  GateParams<Real> g;
  const double bound = init_bound(width);
  g.w1 = uniform_parameter<Real>({width, width}, bound, rng);
  g.w2 = uniform_parameter<Real>({width, width}, bound, rng);
  if (with_bias) {
    g.b1 = zero_parameter<Real>({width});
    g.b2 = zero_parameter<Real>({width});
  }
  g.ln_gain = one_parameter<Real>({width});
  g.ln_bias = zero_parameter<Real>({width});
  return g;
}

template <typename Real>
DecoderParams<Real> init_mlp(std::size_t in, std::size_t hidden, std::size_t out, std::mt19937_64 &rng) {
  DecoderParams<Real> d;
  d.w1 = uniform_parameter<Real>({in, hidden}, init_bound(in), rng);
  d.b1 = zero_parameter<Real>({hidden});
  d.w2 = uniform_parameter<Real>({hidden, out}, init_bound(hidden), rng);
  d.b2 = zero_parameter<Real>({out});
  return d;
}

// Sum of the graph-convolution terms for one gate given the precomputed
// graph products A_pre x and A_adap x, then layer normalization.
template <typename Real>
ad::Tensor<Real> gate_from_products(const ad::Tensor<Real> &pre_x, const ad::Tensor<Real> &adap_x,
                                    const GateParams<Real> &gate, bool bypass_ln, double eps) {
  ad::Tensor<Real> z;
  auto accumulate = [&z](const ad::Tensor<Real> &term) { z = z.defined() ? ad::add(z, term) : term; };
  if (pre_x.defined()) {
    accumulate(ad::matmul(pre_x, gate.w1));
    if (gate.b1.defined())
      accumulate(gate.b1);
  }
  if (adap_x.defined()) {
    accumulate(ad::matmul(adap_x, gate.w2));
    if (gate.b2.defined())
      accumulate(gate.b2);
  }
  if (bypass_ln)
    return z;
  return ad::layer_norm(z, gate.ln_gain, gate.ln_bias, static_cast<Real>(eps));
}

template <typename Real>
void add_gate(ParamList<Real> &out, const std::string &prefix, const GateParams<Real> &g) {
  out.emplace_back(prefix + ".w1", g.w1);
  if (g.b1.defined())
    out.emplace_back(prefix + ".b1", g.b1);
  out.emplace_back(prefix + ".w2", g.w2);
  if (g.b2.defined())
    out.emplace_back(prefix + ".b2", g.b2);
  out.emplace_back(prefix + ".ln_gain", g.ln_gain);
  out.emplace_back(prefix + ".ln_bias", g.ln_bias);
}

template <typename Real>
void add_ia(ParamList<Real> &out, const std::string &prefix, const ia::IAState<Real> &s) {
  out.emplace_back(prefix + ".e1", s.e1);
  out.emplace_back(prefix + ".e2", s.e2);
  out.emplace_back(prefix + ".w", s.w);
  out.emplace_back(prefix + ".score_w", s.score_w);
  out.emplace_back(prefix + ".score_b", s.score_b);
  out.emplace_back(prefix + ".dst_w", s.dst_w);
}

template <typename Real>
void add_mlp(ParamList<Real> &out, const std::string &prefix, const DecoderParams<Real> &d) {
  out.emplace_back(prefix + ".w1", d.w1);
  out.emplace_back(prefix + ".b1", d.b1);
  out.emplace_back(prefix + ".w2", d.w2);
  out.emplace_back(prefix + ".b2", d.b2);
}

template <typename Real>
ad::Tensor<Real> dropout(const ad::Tensor<Real> &x, double rate, std::mt19937_64 &rng) {
  if (rate <= 0)
    return x;
  std::bernoulli_distribution keep(1.0 - rate);
  const Real scale = static_cast<Real>(1.0 / (1.0 - rate));
  std::vector<Real> mask(x.size());
  for (Real &m : mask)
    m = keep(rng) ? scale : Real(0);
  return ad::hadamard(x, ad::Tensor<Real>::constant(x.shape(), std::move(mask)));
}

} // namespace

template <typename Real>
ad::Tensor<Real> agcn_apply(const ad::Tensor<Real> &x_ia, const ad::Tensor<Real> &a_pre,
                            const ad::Tensor<Real> &a_adap, const GateParams<Real> &gate,
                            bool bypass_ln, double ln_eps) {
  if (!a_pre.defined() && !a_adap.defined())
    fail(ErrorCode::kInvalidArgument,
         "agcn_apply: both the predefined and the adaptive graph are ablated");
  ad::Tensor<Real> pre_x = a_pre.defined() ? ad::matmul(a_pre, x_ia) : ad::Tensor<Real>{};
  ad::Tensor<Real> adap_x = a_adap.defined() ? ad::matmul(a_adap, x_ia) : ad::Tensor<Real>{};
  return gate_from_products(pre_x, adap_x, gate, bypass_ln, ln_eps);
}

template <typename Real>
std::pair<ad::Tensor<Real>, ad::Tensor<Real>>
cell_step(const LayerParams<Real> &params, const ad::Tensor<Real> &x_t,
          const ad::Tensor<Real> &c_prev, const CellContext<Real> &ctx) {
  const ModelConfig &cfg = *ctx.config;
  if (!ctx.a_pre.defined() && !cfg.use_ag)
    fail(ErrorCode::kInvalidArgument, "cell_step: no graph left to propagate over");

  auto x_ia = cfg.use_ia ? ia::apply_ia(params.ia, x_t, ctx.missing, cfg.ia)
                         : ia::project_only(params.ia, x_t);
  if (c_prev.shape() != x_ia.shape())
    fail(ErrorCode::kShapeMismatch, "cell_step: cell state " + ad::shape_str(c_prev.shape()) +
                                        " does not match " + ad::shape_str(x_ia.shape()));

  ad::Tensor<Real> pre_x, adap_x;
  if (ctx.a_pre.defined())
    pre_x = ad::matmul(ctx.a_pre, x_ia);
  if (cfg.use_ag) {
    auto a_adap = graph::adaptive_adjacency(graph::fuse_embedding(x_ia, params.ag));
    adap_x = ad::matmul(a_adap, x_ia);
  }

  const bool bypass = ctx.options.bypass_ln;
  const auto gate_act = cfg.sigmoid_gates ? ad::Activation::kSigmoid : ad::Activation::kGeLU;
  auto forget = ctx.options.force_forget
                    ? ad::Tensor<Real>::full(x_ia.shape(), static_cast<Real>(*ctx.options.force_forget))
                    : ad::activation(gate_from_products(pre_x, adap_x, params.forget, bypass, cfg.ln_eps), gate_act);
  auto reset = ctx.options.force_reset
                   ? ad::Tensor<Real>::full(x_ia.shape(), static_cast<Real>(*ctx.options.force_reset))
                   : ad::activation(gate_from_products(pre_x, adap_x, params.reset, bypass, cfg.ln_eps), gate_act);
  auto candidate = gate_from_products(pre_x, adap_x, params.candidate, bypass, cfg.ln_eps);

  auto c_t = ad::add(ad::hadamard(ad::one_minus(forget), candidate), ad::hadamard(forget, c_prev));
  auto h_t = ad::add(ad::hadamard(reset, ad::elu(c_t)), ad::hadamard(ad::one_minus(reset), x_ia));
  return {h_t, c_t};
}

template <typename Real>
std::vector<ad::Tensor<Real>> layer_forward(const LayerParams<Real> &params,
                                            const std::vector<ad::Tensor<Real>> &x_seq,
                                            const CellContext<Real> &ctx,
                                            ad::Tensor<Real> *final_cell) {
  require(!x_seq.empty(), ErrorCode::kInvalidArgument, "layer_forward: empty input sequence");
  ad::Shape state_shape = x_seq.front().shape();
  state_shape.back() = ctx.config->embed;
  auto c = ad::Tensor<Real>::zeros(state_shape);
  std::vector<ad::Tensor<Real>> hidden;
  hidden.reserve(x_seq.size());
  for (const auto &x_t : x_seq) {
    auto [h, c_next] = cell_step(params, x_t, c, ctx);
    hidden.push_back(std::move(h));
    c = std::move(c_next);
  }
  if (final_cell)
    *final_cell = c;
  return hidden;
}

template <typename Real>
ad::Tensor<Real> decode(const DecoderParams<Real> &dec, const ad::Tensor<Real> &h_all) {
  if (h_all.shape().back() != dec.w1.dim(0))
    fail(ErrorCode::kShapeMismatch, "decode: encoder width " + std::to_string(h_all.shape().back()) +
                                        " does not match decoder input " +
                                        std::to_string(dec.w1.dim(0)));
  auto hidden = ad::relu(ad::add(ad::matmul(h_all, dec.w1), dec.b1));
  return ad::add(ad::matmul(hidden, dec.w2), dec.b2);
}

// ---------------------------------------------------------------- GinAR

template <typename Real>
GinAR<Real>::GinAR(ModelConfig config, std::uint64_t seed) : config_(std::move(config)) {
  const ModelConfig &c = config_;
  require(c.num_vars >= 1, ErrorCode::kInvalidArgument, "model needs at least one variable");
  require(c.layers >= 1, ErrorCode::kInvalidArgument, "model needs at least one layer");
  require(c.embed >= 1 && c.var_embed >= 1 && c.in_channels >= 1 && c.horizon >= 1,
          ErrorCode::kInvalidArgument, "model widths must be positive");
  require(c.use_pg || c.use_ag, ErrorCode::kInvalidArgument,
          "the predefined and adaptive graphs cannot both be ablated");
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < c.layers; ++l) {
    const std::size_t in_width = l == 0 ? c.in_channels : c.embed;
    LayerParams<Real> p;
    p.ia = ia::IAState<Real>::init(c.num_vars, in_width, c.embed, c.var_embed, rng);
    p.ag = graph::AdaptiveGraphState<Real>::init(c.num_vars, c.embed, c.var_embed, rng);
    p.forget = init_gate<Real>(c.embed, true, rng);
    p.reset = init_gate<Real>(c.embed, true, rng);
    p.candidate = init_gate<Real>(c.embed, false, rng);
    layers_.push_back(std::move(p));
  }
  decoder_ = init_mlp<Real>(c.embed * c.layers, c.decoder_hidden, c.horizon, rng);
  a_pre_ = identity<Real>(c.num_vars);
  missing_.assign(c.num_vars, 0);
}

template <typename Real> void GinAR<Real>::set_predefined_graph(const Matrix &a_pre) {
  require(a_pre.rows() == static_cast<Eigen::Index>(config_.num_vars) && a_pre.cols() == a_pre.rows(),
          ErrorCode::kShapeMismatch, "predefined graph must be N x N");
  a_pre_ = graph::to_tensor<Real>(a_pre);
}

template <typename Real> void GinAR<Real>::set_missing(std::vector<std::uint8_t> missing) {
  require(missing.size() == config_.num_vars, ErrorCode::kShapeMismatch,
          "missing mask length differs from N");
  missing_ = std::move(missing);
}

template <typename Real> CellContext<Real> GinAR<Real>::context() const {
  CellContext<Real> ctx;
  ctx.config = &config_;
  if (config_.use_pg)
    ctx.a_pre = a_pre_;
  ctx.missing = missing_;
  ctx.options = cell_options_;
  return ctx;
}

template <typename Real>
std::vector<ad::Tensor<Real>> GinAR<Real>::split_steps(const InputBatch &batch) const {
  require(batch.vars == config_.num_vars && batch.channels == config_.in_channels &&
              batch.history >= 1,
          ErrorCode::kShapeMismatch, "input batch does not match the model configuration");
  const std::size_t B = batch.batch, N = batch.vars, H = batch.history, C = batch.channels;
  std::vector<ad::Tensor<Real>> steps;
  steps.reserve(H);
  for (std::size_t t = 0; t < H; ++t) {
    std::vector<Real> values(B * N * C);
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t n = 0; n < N; ++n)
        for (std::size_t c = 0; c < C; ++c)
          values[(b * N + n) * C + c] = static_cast<Real>(batch.x[((b * N + n) * H + t) * C + c]);
    steps.push_back(ad::Tensor<Real>::constant({B, N, C}, std::move(values)));
  }
  return steps;
}

template <typename Real>
ad::Tensor<Real> GinAR<Real>::encode(const std::vector<ad::Tensor<Real>> &x_seq, bool training,
                                     std::mt19937_64 *rng) const {
  const CellContext<Real> ctx = context();
  std::vector<ad::Tensor<Real>> last;
  std::vector<ad::Tensor<Real>> input = x_seq;
  for (const auto &layer : layers_) {
    auto hidden = layer_forward(layer, input, ctx);
    if (training && rng && config_.dropout > 0)
      for (auto &h : hidden)
        h = dropout(h, config_.dropout, *rng);
    last.push_back(hidden.back());
    input = std::move(hidden);
  }
  return last.size() == 1 ? last.front() : ad::concat(last);
}

template <typename Real>
ad::Tensor<Real> GinAR<Real>::forward(const InputBatch &batch, bool training, std::mt19937_64 &rng) {
  return decode(decoder_, encode(split_steps(batch), training, &rng));
}

template <typename Real> ParamList<Real> GinAR<Real>::parameters() const {
  ParamList<Real> out;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const std::string prefix = "layer" + std::to_string(l);
    const auto &p = layers_[l];
    add_ia(out, prefix + ".ia", p.ia);
    out.emplace_back(prefix + ".ag.embedding", p.ag.embedding);
    out.emplace_back(prefix + ".ag.w_x", p.ag.w_x);
    out.emplace_back(prefix + ".ag.w_e", p.ag.w_e);
    out.emplace_back(prefix + ".ag.fc_w", p.ag.fc_w);
    out.emplace_back(prefix + ".ag.fc_b", p.ag.fc_b);
    add_gate(out, prefix + ".forget", p.forget);
    add_gate(out, prefix + ".reset", p.reset);
    add_gate(out, prefix + ".candidate", p.candidate);
  }
  add_mlp(out, "decoder", decoder_);
  return out;
}

// ---------------------------------------------------------------- MLP stand-ins

template <typename Real> ad::Tensor<Real> flatten_history(const InputBatch &batch) {
  const std::size_t width = batch.history * batch.channels;
  std::vector<Real> values(batch.x.size());
  for (std::size_t k = 0; k < values.size(); ++k)
    values[k] = static_cast<Real>(batch.x[k]);
  return ad::Tensor<Real>::constant({batch.batch, batch.vars, width}, std::move(values));
}

template <typename Real>
MlpForecaster<Real>::MlpForecaster(std::size_t num_vars, std::size_t history, std::size_t channels,
                                   std::size_t hidden, std::size_t horizon, std::uint64_t seed)
    : num_vars_(num_vars), in_width_(history * channels), horizon_(horizon) {
  std::mt19937_64 rng(seed);
  mlp_ = init_mlp<Real>(in_width_, hidden, horizon, rng);
}

template <typename Real>
ad::Tensor<Real> MlpForecaster<Real>::forward(const InputBatch &batch, bool, std::mt19937_64 &) {
  require(batch.vars == num_vars_ && batch.history * batch.channels == in_width_,
          ErrorCode::kShapeMismatch, "input batch does not match the MLP configuration");
  return decode(mlp_, flatten_history<Real>(batch));
}

template <typename Real> ParamList<Real> MlpForecaster<Real>::parameters() const {
  ParamList<Real> out;
  add_mlp(out, "mlp", mlp_);
  return out;
}

template <typename Real>
IaMlpForecaster<Real>::IaMlpForecaster(std::size_t num_vars, std::size_t history,
                                       std::size_t channels, std::size_t ia_width,
                                       std::size_t var_embed, std::size_t hidden,
                                       std::size_t horizon, ia::IAOptions options,
                                       std::uint64_t seed)
    : num_vars_(num_vars), in_width_(history * channels), horizon_(horizon),
      options_(options), missing_(num_vars, 0) {
  std::mt19937_64 rng(seed);
  ia_ = ia::IAState<Real>::init(num_vars, in_width_, ia_width, var_embed, rng);
  mlp_ = init_mlp<Real>(ia_width, hidden, horizon, rng);
}

template <typename Real>
ad::Tensor<Real> IaMlpForecaster<Real>::forward(const InputBatch &batch, bool, std::mt19937_64 &) {
  require(batch.vars == num_vars_ && batch.history * batch.channels == in_width_,
          ErrorCode::kShapeMismatch, "input batch does not match the IA+MLP configuration");
  auto recovered = ia::apply_ia(ia_, flatten_history<Real>(batch), missing_, options_);
  return decode(mlp_, recovered);
}

template <typename Real> ParamList<Real> IaMlpForecaster<Real>::parameters() const {
  ParamList<Real> out;
  add_ia(out, "ia", ia_);
  add_mlp(out, "mlp", mlp_);
  return out;
}

#define GINAR_INSTANTIATE(Real)                                                                   \
  template ad::Tensor<Real> agcn_apply(const ad::Tensor<Real> &, const ad::Tensor<Real> &,        \
                                       const ad::Tensor<Real> &, const GateParams<Real> &, bool,  \
                                       double);                                                   \
  template std::pair<ad::Tensor<Real>, ad::Tensor<Real>> cell_step(                              \
      const LayerParams<Real> &, const ad::Tensor<Real> &, const ad::Tensor<Real> &,            \
      const CellContext<Real> &);                                                                \
  template std::vector<ad::Tensor<Real>> layer_forward(const LayerParams<Real> &,               \
                                                       const std::vector<ad::Tensor<Real>> &,   \
                                                       const CellContext<Real> &,               \
                                                       ad::Tensor<Real> *);                     \
  template ad::Tensor<Real> decode(const DecoderParams<Real> &, const ad::Tensor<Real> &);      \
  template ad::Tensor<Real> flatten_history(const InputBatch &);                                \
  template class GinAR<Real>;                                                                    \
  template class MlpForecaster<Real>;                                                            \
  template class IaMlpForecaster<Real>;

GINAR_INSTANTIATE(float)
GINAR_INSTANTIATE(double)

#undef GINAR_INSTANTIATE

} // namespace ginar::model
