#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sttgcn/data_io.hpp"
#include "sttgcn/decomp.hpp"
#include "sttgcn/graph.hpp"
#include "sttgcn/stconv.hpp"
#include "sttgcn/tensor.hpp"

namespace sttgcn {

/// Fully connected layer applied along the feature mode: w is out×in.
struct Dense {
  Mat w;
  std::vector<double> b;
};

enum class ConvMode { full, factorized, spatial_only, temporal_only };
ConvMode parse_conv_mode(std::string_view name);
std::string_view conv_mode_name(ConvMode mode);

struct ModelDims {
  std::size_t t_in = 12;
  std::size_t t_out = 1;
  std::size_t hidden = 128;  // fc1 width
  std::size_t embed = 128;   // fc2 width, conv1 input
  std::size_t conv1 = 128;
  std::size_t conv2 = 64;
  int p = 2;
};

struct ModelParams {
  Dense fc1;
  Dense fc2;
  ConvLayerParams conv1;
  ConvLayerParams conv2;
  ReadoutParams readout;
};

/// Named view of one contiguous parameter array.
struct ParamBlock {
  std::string name;
  std::span<double> values;
};
struct ConstParamBlock {
  std::string name;
  std::span<const double> values;
};

/// Blocks in a fixed order: fc1.w, fc1.b, fc2.w, fc2.b, conv1.theta[i]..., conv2.theta[i]..., readout.w, readout.b.
std::vector<ParamBlock> param_blocks(ModelParams& params);
std::vector<ConstParamBlock> param_blocks(const ModelParams& params);
std::size_t param_count(const ModelParams& params);
double squared_param_norm(const ModelParams& params);

/// Xavier-uniform weights, zero biases.
ModelParams init_params(const ModelDims& dims, std::uint64_t seed, Activation conv_activation = Activation::relu,
                        Activation readout_activation = Activation::sigmoid);
/// Same shapes and activations, every entry zero.
ModelParams zeros_like(const ModelParams& params);
ModelDims dims_of(const ModelParams& params);
void validate_params(const ModelParams& params);

/// Graphs and ranks resolved for one forward mode. Spatial-only replaces the temporal
/// adjacency by identity slices; temporal-only replaces the spatial powers by identities.
struct ModelContext {
  ConvMode mode = ConvMode::full;
  SpatialGraph sg;
  TemporalAdjacency at;
  std::array<Ranks, 2> ranks{};  // per conv layer, unused in full mode
  HooiOptions hooi;
};

ModelContext make_context(ConvMode mode, const SpatialGraph& sg, const TemporalAdjacency& at,
                          const std::array<Ranks, 2>& ranks = {}, HooiOptions hooi = {});

/// Layer ranks from a preset rule applied to each conv layer's input dims.
std::array<Ranks, 2> layer_ranks(std::size_t n_nodes, const ModelDims& dims, RankRule rule);

/// Reuses Tucker factor matrices across forwards; HOOI reruns on every
/// `refactorize_every`-th call per layer (1 means every call).
struct FactorCache {
  int refactorize_every = 1;
  std::array<std::optional<TuckerFactors>, 2> factors;
  std::array<long, 2> calls{0, 0};
  void clear();
};

struct ConvCache {
  Tensor3 input;        // input the convolution effectively saw (x̂ in factorized modes)
  std::optional<TuckerFactors> factors;
  Tensor3 pre;
  Tensor3 out;
};

struct ForwardCache {
  Tensor3 x;
  Tensor3 e1_pre, e1;
  Tensor3 e2_pre, e2;
  ConvCache c1, c2;
  Mat readout_pre;
  Mat pred;
};

/// window: N×1×t_in → prediction N×t_out.
Mat model_forward(const ModelParams& params, const Tensor3& window, const ModelContext& ctx,
                  ForwardCache* cache = nullptr, FactorCache* factor_cache = nullptr);

/// Squared Frobenius error plus λ·Σθ².
double compute_loss(const Mat& pred, const Mat& target, const ModelParams& params, double lambda);
/// Batch form: squared error averaged over the samples plus λ·Σθ².
double compute_loss(std::span<const Mat> preds, std::span<const Mat> targets, const ModelParams& params,
                    double lambda);

/// Accumulates ∂(sample loss)/∂θ into grads given ∂loss/∂pred. Exact in full mode; in factorized
/// modes the decomposition is held fixed and the input gradient passes through the projector
/// x ↦ x ×₁ U_SU_Sᵀ ×₂ U_FU_Fᵀ ×₃ U_TU_Tᵀ.
void model_backward(const ModelParams& params, const ForwardCache& cache, const Mat& d_pred,
                    const ModelContext& ctx, ModelParams& grads);

struct GradientResult {
  double loss = 0.0;
  ModelParams grads;
};

/// Loss and gradient over a minibatch, accumulated in batch order.
GradientResult compute_gradients(const ModelParams& params, std::span<const Window* const> batch,
                                 const ModelContext& ctx, double lambda, FactorCache* factor_cache = nullptr);
GradientResult compute_gradients(const ModelParams& params, std::span<const Window> batch,
                                 const ModelContext& ctx, double lambda, FactorCache* factor_cache = nullptr);

double batch_loss(const ModelParams& params, std::span<const Window> batch, const ModelContext& ctx, double lambda);

struct FdBlockReport {
  std::string name;
  std::size_t checked = 0;
  double max_rel = 0.0;
  double mean_rel = 0.0;
};

struct FdReport {
  std::vector<FdBlockReport> blocks;
  std::size_t checked = 0;
  double max_rel = 0.0;
  double mean_rel = 0.0;
};

struct FdOptions {
  double h = 1e-5;
  std::size_t samples = 400;  // entries checked when the model has more
  std::uint64_t seed = 1;
  double floor = 1e-6;        // relative error uses max(|analytic|, |numeric|, floor)
};

/// Central differences against the analytic gradient. h must be positive.
FdReport finite_difference_check(const ModelParams& params, std::span<const Window> batch, const ModelContext& ctx,
                                 double lambda, const FdOptions& options = {});

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  ModelParams m;
  ModelParams v;
  long step = 0;
};

AdamState make_adam_state(const ModelParams& params);
void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, const AdamOptions& options = {});

}  // namespace sttgcn
