#include "sttgcn/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "sttgcn/errors.hpp"

namespace sttgcn {

ModelDims TrainConfig::model_dims() const {
  ModelDims d;
  d.t_in = t_in;
  d.t_out = t_out;
  d.hidden = hidden;
  d.embed = embed;
  d.conv1 = conv1;
  d.conv2 = conv2;
  d.p = p;
  return d;
}

void TrainConfig::validate() const {
  if (epochs < 0) throw ArgumentError("epochs must be nonnegative");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ArgumentError("learning rate must be >= 0");
  if (batch_size == 0) throw ArgumentError("batch size must be positive");
  if (!(lambda >= 0.0)) throw ArgumentError("lambda must be nonnegative");
  if (p < 0) throw ArgumentError("order p must be nonnegative");
  if (refactorize_every < 1) throw ArgumentError("refactorize_every must be >= 1");
  if (t_in == 0 || t_out == 0) throw ArgumentError("t_in and t_out must be positive");
  if (hidden == 0 || embed == 0 || conv1 == 0 || conv2 == 0) throw ArgumentError("layer widths must be positive");
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) throw ArgumentError("validation fraction must lie in [0, 1)");
}

std::array<Ranks, 2> resolve_ranks(const TrainConfig& config, std::size_t n_nodes) {
  if (config.ranks) {
    const Ranks r = *config.ranks;
    validate_ranks({n_nodes, config.embed, config.t_in}, r);
    validate_ranks({n_nodes, config.conv1, config.t_in}, r);
    return {r, r};
  }
  return layer_ranks(n_nodes, config.model_dims(), config.rank_rule);
}

ModelContext make_context(const TrainConfig& config, const SpatialGraph& sg, const TemporalAdjacency& at) {
  return make_context(config.mode, sg, at, resolve_ranks(config, sg.n_nodes), config.hooi);
}

std::vector<Mat> predict(const ModelParams& params, std::span<const Window> windows, const ModelContext& ctx) {
  std::vector<Mat> out;
  out.reserve(windows.size());
  for (const Window& w : windows) out.push_back(model_forward(params, w.input, ctx));
  return out;
}

MetricsReport score_predictions(std::span<const Mat> preds, std::span<const Window> windows, const Scaler& scaler) {
  if (windows.empty()) throw ArgumentError("evaluation split is empty");
  if (preds.size() != windows.size()) throw ArgumentError("one prediction per window is required");
  std::vector<double> y;
  std::vector<double> y_hat;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const Mat& t = windows[i].target;
    if (preds[i].rows() != t.rows() || preds[i].cols() != t.cols()) {
      throw ArgumentError("prediction shape does not match the target");
    }
    for (std::size_t j = 0; j < t.size(); ++j) {
      y.push_back(scaler.descale(t.data()[j]));
      y_hat.push_back(preds[i].data()[j]);
    }
  }
  return compute_metrics(y, y_hat);
}

MetricsReport evaluate(const ModelParams& params, std::span<const Window> windows, const ModelContext& ctx,
                       const Scaler& scaler) {
  if (windows.empty()) throw ArgumentError("evaluation split is empty");
  std::vector<Mat> preds = predict(params, windows, ctx);
  for (Mat& m : preds) m = scaler.descale(m);
  return score_predictions(preds, windows, scaler);
}

TrainResult train(const TrainConfig& config, const WindowSet& data, const SpatialGraph& sg,
                  const TemporalAdjacency& at, const EpochCallback& on_epoch) {
  config.validate();
  return train_from(config,
                    init_params(config.model_dims(), config.seed, config.conv_activation, config.readout_activation),
                    data, sg, at, on_epoch);
}

TrainResult train_from(const TrainConfig& config, ModelParams init, const WindowSet& data, const SpatialGraph& sg,
                       const TemporalAdjacency& at, const EpochCallback& on_epoch) {
  config.validate();
  validate_params(init);
  if (data.train.empty()) throw ArgumentError("training split has no windows");
  if (data.t_in != dims_of(init).t_in || data.t_out != dims_of(init).t_out) {
    throw ArgumentError("window lengths do not match the model");
  }
  const ModelContext ctx = make_context(config, sg, at);

  const std::size_t total = data.train.size();
  std::size_t n_val = static_cast<std::size_t>(std::floor(config.val_fraction * static_cast<double>(total)));
  if (n_val >= total) n_val = total - 1;
  const std::size_t n_fit = total - n_val;
  const std::span<const Window> fit(data.train.data(), n_fit);
  const std::span<const Window> val(data.train.data() + n_fit, n_val);

  TrainResult result;
  result.params = init;
  ModelParams params = std::move(init);
  AdamState adam = make_adam_state(params);
  const AdamOptions adam_options{config.learning_rate};
  FactorCache factor_cache;
  factor_cache.refactorize_every = config.refactorize_every;

  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(n_fit);
  std::vector<const Window*> batch;
  double best = std::numeric_limits<double>::infinity();

  {
    double s = 0.0;
    for (const Window& w : fit) s += compute_loss(model_forward(params, w.input, ctx), w.target, params, 0.0);
    result.initial_loss = s / static_cast<double>(n_fit) + config.lambda * squared_param_norm(params);
  }

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n_fit; start += config.batch_size) {
      const std::size_t end = std::min(n_fit, start + config.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(&fit[order[i]]);
      GradientResult g = compute_gradients(params, std::span<const Window* const>(batch), ctx, config.lambda,
                                           &factor_cache);
      loss_sum += g.loss;
      ++batches;
      adam_step(params, g.grads, adam, adam_options);
    }
    EpochRecord rec{epoch, loss_sum / static_cast<double>(batches), std::nullopt};
    if (!std::isfinite(rec.train_loss)) {
      throw DataError("training diverged at epoch " + std::to_string(epoch));
    }
    if (!val.empty()) {
      rec.val_rmse = evaluate(params, val, ctx, data.scaler).rmse;
      if (*rec.val_rmse < best) {
        best = *rec.val_rmse;
        result.params = params;
        result.best_epoch = epoch;
      }
    }
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  if (val.empty() || result.best_epoch == 0) {
    result.params = params;
    result.best_epoch = config.epochs;
  }
  result.last = std::move(params);
  return result;
}

}  // namespace sttgcn
