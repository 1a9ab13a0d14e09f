// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The GinAR Engine Authors

#include "core/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>

namespace ginar::train {

void TrainConfig::validate() const {
  require(lr0 >= 0 && std::isfinite(lr0), ErrorCode::kInvalidArgument, "lr0 must be finite and >= 0");
  require(gamma > 0, ErrorCode::kInvalidArgument, "gamma must be positive");
  require(clip_norm > 0, ErrorCode::kInvalidArgument, "clip_norm must be positive");
  require(batch > 0, ErrorCode::kInvalidArgument, "batch must be positive");
  for (std::size_t k = 0; k < milestones.size(); ++k) {
    require(milestones[k] > 0, ErrorCode::kInvalidArgument, "milestones must be positive");
    require(k == 0 || milestones[k] > milestones[k - 1], ErrorCode::kInvalidArgument,
            "milestones must be strictly increasing");
  }
}

double lr_at_epoch(const TrainConfig &cfg, std::size_t epoch) {
  double lr = cfg.lr0;
  for (const std::size_t m : cfg.milestones)
    if (m <= epoch)
      lr *= cfg.gamma;
  return lr;
}

template <typename Real> double clip_gradients(const model::ParamList<Real> &params, double max_norm) {
  double sq = 0;
  for (const auto &[name, p] : params)
    for (const Real g : p.grad())
      sq += static_cast<double>(g) * static_cast<double>(g);
  const double norm = std::sqrt(sq);
  if (!(norm > max_norm))
    return 1.0;
  const double factor = max_norm / norm;
  for (const auto &[name, p] : params) {
    auto tensor = p;
    if (tensor.grad().empty())
      continue;
    for (Real &g : tensor.mutable_grad())
      g = static_cast<Real>(static_cast<double>(g) * factor);
  }
  return factor;
}

template <typename Real>
Adam<Real>::Adam(const model::ParamList<Real> &params, double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto &[name, p] : params) {
    m_.emplace_back(p.size(), 0.0);
    v_.emplace_back(p.size(), 0.0);
  }
}

template <typename Real> void Adam<Real>::step(model::ParamList<Real> &params, double lr) {
  require(params.size() == m_.size(), ErrorCode::kState, "Adam: parameter list changed");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto &p = params[k].second;
    require(p.size() == m_[k].size(), ErrorCode::kShapeMismatch, "Adam: moment shape mismatch");
    const auto grad = p.grad();
    auto value = p.mutable_data();
    auto &m = m_[k];
    auto &v = v_[k];
    for (std::size_t j = 0; j < value.size(); ++j) {
      const double g = grad.empty() ? 0.0 : static_cast<double>(grad[j]);
      m[j] = beta1_ * m[j] + (1 - beta1_) * g;
      v[j] = beta2_ * v[j] + (1 - beta2_) * g * g;
      const double m_hat = m[j] / c1;
      const double v_hat = v[j] / c2;
      value[j] = static_cast<Real>(static_cast<double>(value[j]) - lr * m_hat / (std::sqrt(v_hat) + eps_));
    }
  }
}

template <typename Real>
ad::Tensor<Real> l1_loss(const ad::Tensor<Real> &pred, const ad::Tensor<Real> &target) {
  if (pred.shape() != target.shape())
    fail(ErrorCode::kShapeMismatch, "l1_loss: " + ad::shape_str(pred.shape()) + " vs " +
                                        ad::shape_str(target.shape()));
  return ad::mean(ad::abs(ad::sub(pred, target)));
}

template <typename Real>
ad::Tensor<Real> denormalize(const ad::Tensor<Real> &pred, const data::Normalizer &norm) {
  const std::size_t n = norm.mean.size();
  require(pred.rank() >= 2 && pred.dim(pred.rank() - 2) == n, ErrorCode::kShapeMismatch,
          "denormalize: output does not have N rows");
  const std::size_t l = pred.shape().back();
  std::vector<Real> scale(n * l), shift(n * l);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < l; ++j) {
      scale[i * l + j] = static_cast<Real>(norm.std[i]);
      shift[i * l + j] = static_cast<Real>(norm.mean[i]);
    }
  return ad::add(ad::hadamard(pred, ad::Tensor<Real>::constant({n, l}, std::move(scale))),
                 ad::Tensor<Real>::constant({n, l}, std::move(shift)));
}

template <typename Real>
std::vector<double> predict(model::Forecaster<Real> &model, const data::PreparedSplit &split,
                            const data::Normalizer &norm, std::size_t batch) {
  ad::NoGradGuard no_grad;
  std::mt19937_64 unused(0);
  std::vector<double> out;
  out.reserve(split.windows() * split.vars * split.horizon);
  std::vector<std::size_t> ids;
  for (std::size_t start = 0; start < split.windows(); start += batch) {
    ids.resize(std::min(batch, split.windows() - start));
    std::iota(ids.begin(), ids.end(), start);
    auto y = denormalize(model.forward(split.inputs(ids), false, unused), norm);
    for (const Real v : y.data())
      out.push_back(static_cast<double>(v));
  }
  return out;
}

template <typename Real>
EpochRecord train_epoch(model::Forecaster<Real> &model, Adam<Real> &opt, const TrainData &data,
                        const TrainConfig &cfg, std::size_t epoch) {
  require(data.train && data.val && data.norm, ErrorCode::kInvalidArgument,
          "train_epoch: training data incomplete");
  const auto &train = *data.train;
  require(train.windows() > 0, ErrorCode::kInvalidArgument, "train_epoch: no training windows");
  EpochRecord rec;
  rec.epoch = epoch;
  rec.lr = lr_at_epoch(cfg, epoch);

  std::vector<std::size_t> order(train.windows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(cfg.seed * 0x9E3779B97F4A7C15ULL + epoch + 1);
  std::shuffle(order.begin(), order.end(), rng);

  auto params = model.parameters();
  double loss_sum = 0;
  std::size_t batches = 0;
  for (std::size_t start = 0; start < order.size(); start += cfg.batch, ++batches) {
    const std::size_t b = std::min(cfg.batch, order.size() - start);
    const std::span<const std::size_t> ids(order.data() + start, b);
    for (auto &[name, p] : params)
      p.zero_grad();
    double loss_value = 0;
    try {
      const auto target_values = train.targets(ids);
      auto target = ad::Tensor<Real>::constant(
          {b, train.vars, train.horizon},
          std::vector<Real>(target_values.begin(), target_values.end()));
      auto loss = l1_loss(denormalize(model.forward(train.inputs(ids), true, rng), *data.norm), target);
      loss_value = static_cast<double>(loss.item());
      if (!std::isfinite(loss_value))
        fail(ErrorCode::kNonFinite, "loss is not finite");
      loss.backward();
    } catch (const Error &e) {
      if (e.code() != ErrorCode::kNonFinite)
        throw;
      fail(ErrorCode::kNonFinite, "non-finite value in epoch " + std::to_string(epoch) + ", batch " +
                                      std::to_string(batches) + ": " + e.what());
    }
    clip_gradients(params, cfg.clip_norm);
    opt.step(params, rec.lr);
    loss_sum += loss_value;
  }
  rec.train_loss = loss_sum / static_cast<double>(batches);

  const auto &val = *data.val;
  const auto pred = predict(model, val, *data.norm);
  rec.val = metrics::evaluate(pred, val.y, val.windows(), val.vars, val.horizon, data.missing).overall;
  return rec;
}

template <typename Real>
FitResult fit(model::Forecaster<Real> &model, const TrainData &data, const TrainConfig &cfg,
              const EpochCallback &on_epoch) {
  cfg.validate();
  FitResult result;
  Adam<Real> opt(model.parameters());
  std::vector<std::vector<Real>> best;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto rec = train_epoch(model, opt, data, cfg, epoch);
    result.history.push_back(rec);
    if (on_epoch)
      on_epoch(rec);
    if (result.best_epoch < 0 || rec.val.mae < result.best_val_mae) {
      result.best_epoch = static_cast<long>(epoch);
      result.best_val_mae = rec.val.mae;
      best.clear();
      for (const auto &[name, p] : model.parameters())
        best.emplace_back(p.data().begin(), p.data().end());
    }
  }
  if (!best.empty()) {
    auto params = model.parameters();
    for (std::size_t k = 0; k < params.size(); ++k)
      std::copy(best[k].begin(), best[k].end(), params[k].second.mutable_data().begin());
  }
  return result;
}

std::string history_csv(const std::vector<EpochRecord> &history) {
  std::ostringstream out;
  out << "epoch,lr,train_loss,val_mae,val_rmse,val_mape\n";
  char buf[256];
  for (const auto &r : history) {
    std::snprintf(buf, sizeof buf, "%zu,%.10g,%.10g,%.10g,%.10g,%.10g\n", r.epoch, r.lr, r.train_loss,
                  r.val.mae, r.val.rmse, r.val.mape);
    out << buf;
  }
  return out.str();
}

#define GINAR_INSTANTIATE(Real)                                                                   \
  template double clip_gradients(const model::ParamList<Real> &, double);                        \
  template class Adam<Real>;                                                                     \
  template ad::Tensor<Real> l1_loss(const ad::Tensor<Real> &, const ad::Tensor<Real> &);         \
  template ad::Tensor<Real> denormalize(const ad::Tensor<Real> &, const data::Normalizer &);      \
  template std::vector<double> predict(model::Forecaster<Real> &, const data::PreparedSplit &,   \
                                       const data::Normalizer &, std::size_t);                   \
  template EpochRecord train_epoch(model::Forecaster<Real> &, Adam<Real> &, const TrainData &,   \
                                   const TrainConfig &, std::size_t);                            \
  template FitResult fit(model::Forecaster<Real> &, const TrainData &, const TrainConfig &,      \
                         const EpochCallback &);

GINAR_INSTANTIATE(float)
GINAR_INSTANTIATE(double)

#undef GINAR_INSTANTIATE

} // namespace ginar::train
