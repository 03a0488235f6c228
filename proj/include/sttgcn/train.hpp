#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "sttgcn/data_io.hpp"
#include "sttgcn/metrics.hpp"
#include "sttgcn/model.hpp"

namespace sttgcn {

struct TrainConfig {
  int epochs = 500;
  double learning_rate = 1e-3;
  std::size_t batch_size = 32;
  double lambda = 1e-5;
  int p = 2;
  ConvMode mode = ConvMode::factorized;
  std::optional<Ranks> ranks;     // explicit ranks for both conv layers
  RankRule rank_rule = RankRule::sqrt;
  int refactorize_every = 1;
  std::uint64_t seed = 42;
  std::size_t t_in = 12;
  std::size_t t_out = 1;
  std::size_t hidden = 128;
  std::size_t embed = 128;
  std::size_t conv1 = 128;
  std::size_t conv2 = 64;
  double val_fraction = 0.1;
  Activation conv_activation = Activation::relu;
  Activation readout_activation = Activation::sigmoid;
  HooiOptions hooi;

  ModelDims model_dims() const;
  void validate() const;
};

/// Resolves the per-layer ranks from the explicit ranks or the preset rule.
std::array<Ranks, 2> resolve_ranks(const TrainConfig& config, std::size_t n_nodes);
ModelContext make_context(const TrainConfig& config, const SpatialGraph& sg, const TemporalAdjacency& at);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;               // mean minibatch loss
  std::optional<double> val_rmse;        // original units
};

struct TrainResult {
  ModelParams params;   // best by validation RMSE (last epoch without a validation split)
  ModelParams last;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double initial_loss = 0.0;  // training loss of the initial parameters
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Minibatch Adam on the training windows. The chronological tail (val_fraction) of the
/// training windows is held out for model selection.
TrainResult train(const TrainConfig& config, const WindowSet& data, const SpatialGraph& sg,
                  const TemporalAdjacency& at, const EpochCallback& on_epoch = {});

/// Same loop starting from the given parameters.
TrainResult train_from(const TrainConfig& config, ModelParams init, const WindowSet& data, const SpatialGraph& sg,
                       const TemporalAdjacency& at, const EpochCallback& on_epoch = {});

/// Scaled predictions, one per window.
std::vector<Mat> predict(const ModelParams& params, std::span<const Window> windows, const ModelContext& ctx);

/// Descales predictions and targets, then scores every (node, horizon, window) entry.
MetricsReport evaluate(const ModelParams& params, std::span<const Window> windows, const ModelContext& ctx,
                       const Scaler& scaler);
MetricsReport score_predictions(std::span<const Mat> preds_original, std::span<const Window> windows,
                                const Scaler& scaler);

}  // namespace sttgcn
