#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "sttgcn/decomp.hpp"
#include "sttgcn/graph.hpp"
#include "sttgcn/tensor.hpp"

namespace sttgcn {

enum class Activation { identity, relu, sigmoid };

Activation parse_activation(std::string_view name);
std::string_view activation_name(Activation a);
double activate(Activation a, double v);
/// Derivative expressed through the pre-activation value.
double activation_derivative(Activation a, double pre);
void apply_activation(Tensor3& x, Activation a);
void apply_activation(Mat& m, Activation a);

/// Filters Θ_{kS,kT} (d_out×d_in each), stored with kS major.
struct ConvLayerParams {
  std::size_t d_in = 0;
  std::size_t d_out = 0;
  int p = 0;
  std::vector<Mat> theta;
  Activation activation = Activation::relu;

  std::size_t pairs() const { return static_cast<std::size_t>((p + 1) * (p + 1)); }
  std::size_t index(int ks, int kt) const { return static_cast<std::size_t>(ks * (p + 1) + kt); }
  const Mat& filter(int ks, int kt) const { return theta[index(ks, kt)]; }
  Mat& filter(int ks, int kt) { return theta[index(ks, kt)]; }

  void validate() const;
};

struct ReadoutParams {
  Mat w;                  // (d_out·T) × T'
  std::vector<double> b;  // T'
  Activation activation = Activation::sigmoid;

  void validate() const;
};

/// Σ_{kS,kT} x ×₁ Ã^{kS} ×̃₃ A_T^{kT} ×₂ Θ_{kS,kT}, followed by the layer activation.
Tensor3 st_conv_full(const Tensor3& x, const SpatialGraph& sg, const TemporalAdjacency& at,
                     const ConvLayerParams& params);

/// Spatial, temporal and feature components of the factorized convolution.
struct FactorizedComponents {
  std::vector<Mat> spatial;       // per kS: Ã^{kS}·X_S            (N×n)
  std::vector<Tensor3> temporal;  // per kT: per-node slice ·X_T   (N×T×t)
  std::vector<Mat> feature;       // per (kS,kT): Θ·X_F            (D'×d)
};

/// Computes the three component families; with `concurrent` they run on separate threads.
FactorizedComponents factorized_components(const TuckerFactors& f, const SpatialGraph& sg,
                                           const TemporalAdjacency& at, const ConvLayerParams& params,
                                           bool concurrent = false);

/// Pre-activation output assembled node by node from the core and components.
Tensor3 assemble_factorized(const TuckerFactors& f, const FactorizedComponents& c, const ConvLayerParams& params);

struct FactorizedOptions {
  HooiOptions hooi;
  bool concurrent = false;
};

struct FactorizedResult {
  Tensor3 output;
  TuckerFactors factors;
};

/// Factorized convolution. With `cache` the factor matrices are reused and only the core is
/// re-projected from x; otherwise x is decomposed with HOOI at `ranks`.
FactorizedResult st_conv_factorized(const Tensor3& x, const SpatialGraph& sg, const TemporalAdjacency& at,
                                    const ConvLayerParams& params, Ranks ranks,
                                    const TuckerFactors* cache = nullptr, const FactorizedOptions& options = {});

/// σ(unfold(x_enc, 1)·W + b).
Mat readout(const Tensor3& x_enc, const ReadoutParams& params);

/// Gradient of a scalar loss through the activation: d_out ⊙ σ'(pre).
Tensor3 activation_backward(const Tensor3& pre, const Tensor3& d_out, Activation a);
Mat activation_backward(const Mat& pre, const Mat& d_out, Activation a);

struct ConvGradients {
  std::vector<Mat> theta;  // same layout as ConvLayerParams::theta
  Tensor3 input;           // empty unless requested
};

/// Reverse pass of the pre-activation full convolution at input x, given ∂L/∂(pre-activation).
ConvGradients st_conv_full_backward(const Tensor3& x, const SpatialGraph& sg, const TemporalAdjacency& at,
                                    const ConvLayerParams& params, const Tensor3& d_pre, bool input_grad);

void check_conv_inputs(const Tensor3& x, const SpatialGraph& sg, const TemporalAdjacency& at,
                       const ConvLayerParams& params);

}  // namespace sttgcn
