#include "sttgcn/stconv.hpp"

#include <cmath>
#include <future>
#include <string>

namespace sttgcn {
namespace {

double sigmoid(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

// Per-node transpose of the last two modes.
Tensor3 swap_last_modes(const Tensor3& x) {
  const Dims3& d = x.dims();
  Tensor3 out({d.i1, d.i3, d.i2});
  for (std::size_t j = 0; j < d.i2; ++j)
    for (std::size_t t = 0; t < d.i3; ++t)
      for (std::size_t k = 0; k < d.i1; ++k) out(k, t, j) = x(k, j, t);
  return out;
}

// y ×̃₃ slices, using a single GEMM when every node shares the slice.
Tensor3 temporal_mix(const Tensor3& y, const Tensor3& slices, bool shared) {
  if (shared) return mode_product(y, slices.slice1(0).transpose(), 3);
  return batch_mode3_product(y, slices);
}

// Adjoint of temporal_mix with respect to y.
Tensor3 temporal_mix_adjoint(const Tensor3& d, const Tensor3& slices, bool shared) {
  if (shared) return mode_product(d, slices.slice1(0), 3);
  return batch_mode3_product(d, swap_last_modes(slices));
}

}  // namespace

Activation parse_activation(std::string_view name) {
  if (name == "identity") return Activation::identity;
  if (name == "relu") return Activation::relu;
  if (name == "sigmoid") return Activation::sigmoid;
  throw ArgumentError("unknown activation '" + std::string(name) + "'");
}

std::string_view activation_name(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    default: return "sigmoid";
  }
}

double activate(Activation a, double v) {
  switch (a) {
    case Activation::identity: return v;
    case Activation::relu: return v > 0.0 ? v : 0.0;
    default: return sigmoid(v);
  }
}

double activation_derivative(Activation a, double pre) {
  switch (a) {
    case Activation::identity: return 1.0;
    case Activation::relu: return pre > 0.0 ? 1.0 : 0.0;
    default: {
      const double s = sigmoid(pre);
      return s * (1.0 - s);
    }
  }
}

void apply_activation(Tensor3& x, Activation a) {
  if (a == Activation::identity) return;
  for (double& v : x.data()) v = activate(a, v);
}

void apply_activation(Mat& m, Activation a) {
  if (a == Activation::identity) return;
  for (double& v : m.data()) v = activate(a, v);
}

void ConvLayerParams::validate() const {
  if (p < 0) throw ArgumentError("conv layer order must be nonnegative");
  if (theta.size() != pairs()) {
    throw ArgumentError("conv layer expects " + std::to_string(pairs()) + " filters, has " +
                        std::to_string(theta.size()));
  }
  for (const Mat& t : theta) {
    if (t.rows() != d_out || t.cols() != d_in) throw ArgumentError("conv filter shape must be d_out x d_in");
    for (double v : t.data())
      if (!std::isfinite(v)) throw DataError("conv filter contains non-finite values");
  }
}

void ReadoutParams::validate() const {
  if (b.size() != w.cols()) throw ArgumentError("readout bias length must equal the number of horizons");
  for (double v : w.data())
    if (!std::isfinite(v)) throw DataError("readout weights contain non-finite values");
  for (double v : b)
    if (!std::isfinite(v)) throw DataError("readout bias contains non-finite values");
}

void check_conv_inputs(const Tensor3& x, const SpatialGraph& sg, const TemporalAdjacency& at,
                       const ConvLayerParams& params) {
  params.validate();
  const Dims3& d = x.dims();
  if (d.i2 != params.d_in) {
    throw ArgumentError("conv input has " + std::to_string(d.i2) + " features, layer expects " +
                        std::to_string(params.d_in));
  }
  if (sg.order() < params.p || at.order() < params.p) {
    throw ArgumentError("graph powers computed to order " + std::to_string(std::min(sg.order(), at.order())) +
                        " but layer order is " + std::to_string(params.p));
  }
  if (sg.n_nodes != d.i1 || sg.powers.front().rows() != d.i1) throw ArgumentError("spatial graph size mismatch");
  if (at.n_nodes() != d.i1 || at.steps() != d.i3) throw ArgumentError("temporal adjacency shape mismatch");
}

Tensor3 st_conv_full(const Tensor3& x, const SpatialGraph& sg, const TemporalAdjacency& at,
                     const ConvLayerParams& params) {
  check_conv_inputs(x, sg, at, params);
  const Dims3& d = x.dims();
  Tensor3 out({d.i1, params.d_out, d.i3});
  for (int ks = 0; ks <= params.p; ++ks) {
    const Tensor3 spatial = ks == 0 ? x : mode_product(x, sg.powers[ks], 1);
    for (int kt = 0; kt <= params.p; ++kt) {
      if (kt == 0) {
        mode_product_accumulate(spatial, params.filter(ks, kt), 2, out);
      } else {
        mode_product_accumulate(temporal_mix(spatial, at.powers[kt], at.shared), params.filter(ks, kt), 2, out);
      }
    }
  }
  apply_activation(out, params.activation);
  return out;
}

FactorizedComponents factorized_components(const TuckerFactors& f, const SpatialGraph& sg,
                                           const TemporalAdjacency& at, const ConvLayerParams& params,
                                           bool concurrent) {
  const auto spatial = [&] {
    std::vector<Mat> out;
    for (int ks = 0; ks <= params.p; ++ks) out.push_back(matmul(sg.powers[ks], f.u_s));
    return out;
  };
  // The batch product multiplies each node's time axis from the right, so the temporal
  // factor is carried through the transposed slice: [A_T^k]_{n::}ᵀ·X_T.
  const auto temporal = [&] {
    std::vector<Tensor3> out;
    const std::size_t n = at.n_nodes();
    const std::size_t steps = at.steps();
    const std::size_t r = f.u_t.cols();
    for (int kt = 0; kt <= params.p; ++kt) {
      const Tensor3& slices = at.powers[kt];
      Tensor3 comp({n, steps, r});
      if (at.shared) {
        const Mat m = matmul_tn(slices.slice1(0), f.u_t);
        for (std::size_t k = 0; k < n; ++k) comp.set_slice1(k, m);
      } else {
        for (std::size_t k = 0; k < n; ++k) comp.set_slice1(k, matmul_tn(slices.slice1(k), f.u_t));
      }
      out.push_back(std::move(comp));
    }
    return out;
  };
  const auto feature = [&] {
    std::vector<Mat> out;
    for (const Mat& theta : params.theta) out.push_back(matmul(theta, f.u_f));
    return out;
  };

  FactorizedComponents c;
  if (concurrent) {
    auto fs = std::async(std::launch::async, spatial);
    auto ft = std::async(std::launch::async, temporal);
    auto ff = std::async(std::launch::async, feature);
    c.spatial = fs.get();
    c.temporal = ft.get();
    c.feature = ff.get();
  } else {
    c.spatial = spatial();
    c.temporal = temporal();
    c.feature = feature();
  }
  return c;
}

Tensor3 assemble_factorized(const TuckerFactors& f, const FactorizedComponents& c, const ConvLayerParams& params) {
  const std::size_t n = c.spatial.front().rows();
  const std::size_t steps = c.temporal.front().dims().i2;
  Tensor3 out({n, params.d_out, steps});

  std::vector<Tensor3> temporal_t;
  temporal_t.reserve(c.temporal.size());
  for (const Tensor3& t : c.temporal) temporal_t.push_back(swap_last_modes(t));

  for (int ks = 0; ks <= params.p; ++ks) {
    // Row k of the spatial component contracted into the core: N×d×t.
    const Tensor3 spatial_core = mode_product(f.core, c.spatial[ks], 1);
    for (int kt = 0; kt <= params.p; ++kt) {
      const Tensor3 q = batch_mode3_product(spatial_core, temporal_t[kt]);  // N×d×T
      mode_product_accumulate(q, c.feature[params.index(ks, kt)], 2, out);
    }
  }
  return out;
}

FactorizedResult st_conv_factorized(const Tensor3& x, const SpatialGraph& sg, const TemporalAdjacency& at,
                                    const ConvLayerParams& params, Ranks ranks, const TuckerFactors* cache,
                                    const FactorizedOptions& options) {
  check_conv_inputs(x, sg, at, params);
  validate_ranks(x.dims(), ranks);

  FactorizedResult result;
  if (cache != nullptr) {
    const Dims3& d = x.dims();
    if (cache->u_s.rows() != d.i1 || cache->u_f.rows() != d.i2 || cache->u_t.rows() != d.i3) {
      throw ArgumentError("cached Tucker factors do not match the input shape");
    }
    result.factors.u_s = cache->u_s;
    result.factors.u_f = cache->u_f;
    result.factors.u_t = cache->u_t;
    result.factors.ranks = cache->ranks;
    result.factors.core = project_core(x, cache->u_s, cache->u_f, cache->u_t);
  } else {
    result.factors = hooi(x, ranks, options.hooi);
  }

  const FactorizedComponents comps = factorized_components(result.factors, sg, at, params, options.concurrent);
  result.output = assemble_factorized(result.factors, comps, params);
  apply_activation(result.output, params.activation);
  return result;
}

Tensor3 activation_backward(const Tensor3& pre, const Tensor3& d_out, Activation a) {
  if (pre.dims() != d_out.dims()) throw ArgumentError("activation gradient shape mismatch");
  Tensor3 out = d_out;
  if (a == Activation::identity) return out;
  auto o = out.data();
  auto p = pre.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= activation_derivative(a, p[i]);
  return out;
}

Mat activation_backward(const Mat& pre, const Mat& d_out, Activation a) {
  if (pre.rows() != d_out.rows() || pre.cols() != d_out.cols()) {
    throw ArgumentError("activation gradient shape mismatch");
  }
  Mat out = d_out;
  if (a == Activation::identity) return out;
  auto o = out.data();
  auto p = pre.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= activation_derivative(a, p[i]);
  return out;
}

ConvGradients st_conv_full_backward(const Tensor3& x, const SpatialGraph& sg, const TemporalAdjacency& at,
                                    const ConvLayerParams& params, const Tensor3& d_pre, bool input_grad) {
  check_conv_inputs(x, sg, at, params);
  const Dims3& d = x.dims();
  if (d_pre.dims() != Dims3{d.i1, params.d_out, d.i3}) throw ArgumentError("conv output gradient shape mismatch");

  ConvGradients g;
  g.theta.resize(params.pairs());
  if (input_grad) g.input = Tensor3(d);
  const Mat dz2 = unfold(d_pre, 2);
  for (int ks = 0; ks <= params.p; ++ks) {
    const Tensor3 spatial = ks == 0 ? x : mode_product(x, sg.powers[ks], 1);
    Tensor3 acc;
    if (input_grad) acc = Tensor3(d);
    for (int kt = 0; kt <= params.p; ++kt) {
      const Mat& theta = params.filter(ks, kt);
      if (kt == 0) {
        g.theta[params.index(ks, kt)] = matmul_nt(dz2, unfold(spatial, 2));
        if (input_grad) mode_product_accumulate(d_pre, theta.transpose(), 2, acc);
      } else {
        g.theta[params.index(ks, kt)] = matmul_nt(dz2, unfold(temporal_mix(spatial, at.powers[kt], at.shared), 2));
        if (input_grad) acc += temporal_mix_adjoint(mode_product(d_pre, theta.transpose(), 2), at.powers[kt], at.shared);
      }
    }
    if (input_grad) {
      if (ks == 0) {
        g.input += acc;
      } else {
        mode_product_accumulate(acc, sg.powers[ks].transpose(), 1, g.input);
      }
    }
  }
  return g;
}

Mat readout(const Tensor3& x_enc, const ReadoutParams& params) {
  params.validate();
  const Dims3& d = x_enc.dims();
  if (params.w.rows() != d.i2 * d.i3) {
    throw ArgumentError("readout weight has " + std::to_string(params.w.rows()) + " rows, expected " +
                        std::to_string(d.i2 * d.i3));
  }
  Mat out = matmul(unfold(x_enc, 1), params.w);
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += params.b[c];
  apply_activation(out, params.activation);
  return out;
}

}  // namespace sttgcn
