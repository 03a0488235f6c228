#include "sttgcn/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "sttgcn/errors.hpp"

namespace sttgcn {
namespace {

Tensor3 dense_forward(const Tensor3& x, const Dense& layer) {
  Tensor3 out = mode_product(x, layer.w, 2);
  const Dims3& d = out.dims();
  for (std::size_t t = 0; t < d.i3; ++t)
    for (std::size_t j = 0; j < d.i2; ++j) {
      const double b = layer.b[j];
      for (std::size_t k = 0; k < d.i1; ++k) out(k, j, t) += b;
    }
  return out;
}

// Accumulates weight and bias gradients; returns ∂L/∂x when requested.
Tensor3 dense_backward(const Tensor3& x, const Dense& layer, const Tensor3& d_pre, Dense& grad, bool input_grad) {
  const Mat g = matmul_nt(unfold(d_pre, 2), unfold(x, 2));
  auto gw = grad.w.data();
  auto src = g.data();
  for (std::size_t i = 0; i < gw.size(); ++i) gw[i] += src[i];
  const Dims3& d = d_pre.dims();
  for (std::size_t t = 0; t < d.i3; ++t)
    for (std::size_t j = 0; j < d.i2; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < d.i1; ++k) s += d_pre(k, j, t);
      grad.b[j] += s;
    }
  if (!input_grad) return {};
  return mode_product(d_pre, layer.w.transpose(), 2);
}

Mat xavier(std::size_t rows, std::size_t cols, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Mat m(rows, cols);
  for (double& v : m.data()) v = dist(rng);
  return m;
}

ConvLayerParams make_conv(std::size_t d_in, std::size_t d_out, int p, Activation act, std::mt19937_64* rng) {
  ConvLayerParams c{d_in, d_out, p, {}, act};
  for (std::size_t i = 0; i < c.pairs(); ++i)
    c.theta.push_back(rng ? xavier(d_out, d_in, d_in, d_out, *rng) : Mat(d_out, d_in));
  return c;
}

template <typename Params, typename Block, typename Span>
std::vector<Block> blocks_impl(Params& p) {
  std::vector<Block> out;
  out.push_back({"fc1.w", Span(p.fc1.w.data())});
  out.push_back({"fc1.b", Span(p.fc1.b)});
  out.push_back({"fc2.w", Span(p.fc2.w.data())});
  out.push_back({"fc2.b", Span(p.fc2.b)});
  for (std::size_t i = 0; i < p.conv1.theta.size(); ++i)
    out.push_back({"conv1.theta" + std::to_string(i), Span(p.conv1.theta[i].data())});
  for (std::size_t i = 0; i < p.conv2.theta.size(); ++i)
    out.push_back({"conv2.theta" + std::to_string(i), Span(p.conv2.theta[i].data())});
  out.push_back({"readout.w", Span(p.readout.w.data())});
  out.push_back({"readout.b", Span(p.readout.b)});
  return out;
}

// Conv forward for one layer, filling the cache entry when given.
Tensor3 conv_forward(const Tensor3& x, const ConvLayerParams& params, const ModelContext& ctx, int layer,
                     ConvCache* cache, FactorCache* factor_cache) {
  if (ctx.mode == ConvMode::full) {
    check_conv_inputs(x, ctx.sg, ctx.at, params);
    ConvLayerParams linear = params;
    linear.activation = Activation::identity;
    Tensor3 pre = st_conv_full(x, ctx.sg, ctx.at, linear);
    Tensor3 out = pre;
    apply_activation(out, params.activation);
    if (cache) {
      cache->input = x;
      cache->factors.reset();
      cache->pre = std::move(pre);
      cache->out = out;
    }
    return out;
  }

  check_conv_inputs(x, ctx.sg, ctx.at, params);
  const Ranks ranks = ctx.ranks[static_cast<std::size_t>(layer)];
  validate_ranks(x.dims(), ranks);
  TuckerFactors f;
  bool reuse = false;
  if (factor_cache) {
    auto& slot = factor_cache->factors[static_cast<std::size_t>(layer)];
    long& calls = factor_cache->calls[static_cast<std::size_t>(layer)];
    const int every = std::max(1, factor_cache->refactorize_every);
    reuse = slot.has_value() && slot->ranks == ranks && slot->u_s.rows() == x.dims().i1 &&
            slot->u_f.rows() == x.dims().i2 && slot->u_t.rows() == x.dims().i3 && calls % every != 0;
    if (reuse) {
      f.u_s = slot->u_s;
      f.u_f = slot->u_f;
      f.u_t = slot->u_t;
      f.ranks = slot->ranks;
      f.core = project_core(x, f.u_s, f.u_f, f.u_t);
    } else {
      f = hooi(x, ranks, ctx.hooi);
      slot = f;
    }
    ++calls;
  } else {
    f = hooi(x, ranks, ctx.hooi);
  }

  const FactorizedComponents comps = factorized_components(f, ctx.sg, ctx.at, params);
  Tensor3 pre = assemble_factorized(f, comps, params);
  Tensor3 out = pre;
  apply_activation(out, params.activation);
  if (cache) {
    cache->input = reconstruct(f);
    cache->factors = std::move(f);
    cache->pre = std::move(pre);
    cache->out = out;
  }
  return out;
}

// Self-adjoint projector onto the span of the fixed Tucker factors.
Tensor3 project(const Tensor3& g, const TuckerFactors& f) {
  return tucker_reconstruct(project_core(g, f.u_s, f.u_f, f.u_t), f.u_s, f.u_f, f.u_t);
}

Tensor3 conv_backward(const ConvCache& cache, const ConvLayerParams& params, const ModelContext& ctx,
                      const Tensor3& d_out, ConvLayerParams& grad) {
  const Tensor3 d_pre = activation_backward(cache.pre, d_out, params.activation);
  ConvGradients g = st_conv_full_backward(cache.input, ctx.sg, ctx.at, params, d_pre, true);
  for (std::size_t i = 0; i < g.theta.size(); ++i) {
    auto dst = grad.theta[i].data();
    auto src = g.theta[i].data();
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
  }
  if (cache.factors) return project(g.input, *cache.factors);
  return std::move(g.input);
}

double relative_fd_error(double a, double n, double floor) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
}

}  // namespace

ConvMode parse_conv_mode(std::string_view name) {
  if (name == "full") return ConvMode::full;
  if (name == "factorized") return ConvMode::factorized;
  if (name == "spatial-only") return ConvMode::spatial_only;
  if (name == "temporal-only") return ConvMode::temporal_only;
  throw ArgumentError("unknown mode '" + std::string(name) +
                      "' (expected full, factorized, spatial-only or temporal-only)");
}

std::string_view conv_mode_name(ConvMode mode) {
  switch (mode) {
    case ConvMode::full: return "full";
    case ConvMode::factorized: return "factorized";
    case ConvMode::spatial_only: return "spatial-only";
    default: return "temporal-only";
  }
}

std::vector<ParamBlock> param_blocks(ModelParams& params) {
  return blocks_impl<ModelParams, ParamBlock, std::span<double>>(params);
}

std::vector<ConstParamBlock> param_blocks(const ModelParams& params) {
  return blocks_impl<const ModelParams, ConstParamBlock, std::span<const double>>(params);
}

std::size_t param_count(const ModelParams& params) {
  std::size_t n = 0;
  for (const auto& b : param_blocks(params)) n += b.values.size();
  return n;
}

double squared_param_norm(const ModelParams& params) {
  double s = 0.0;
  for (const auto& b : param_blocks(params))
    for (double v : b.values) s += v * v;
  return s;
}

ModelParams init_params(const ModelDims& d, std::uint64_t seed, Activation conv_activation,
                        Activation readout_activation) {
  if (d.t_in == 0 || d.t_out == 0 || d.hidden == 0 || d.embed == 0 || d.conv1 == 0 || d.conv2 == 0 || d.p < 0) {
    throw ArgumentError("model dimensions must be positive");
  }
  std::mt19937_64 rng(seed);
  ModelParams p;
  p.fc1 = {xavier(d.hidden, 1, 1, d.hidden, rng), std::vector<double>(d.hidden, 0.0)};
  p.fc2 = {xavier(d.embed, d.hidden, d.hidden, d.embed, rng), std::vector<double>(d.embed, 0.0)};
  p.conv1 = make_conv(d.embed, d.conv1, d.p, conv_activation, &rng);
  p.conv2 = make_conv(d.conv1, d.conv2, d.p, conv_activation, &rng);
  p.readout.w = xavier(d.conv2 * d.t_in, d.t_out, d.conv2 * d.t_in, d.t_out, rng);
  p.readout.b.assign(d.t_out, 0.0);
  p.readout.activation = readout_activation;
  return p;
}

ModelParams zeros_like(const ModelParams& params) {
  ModelParams z = params;
  for (auto& b : param_blocks(z)) std::fill(b.values.begin(), b.values.end(), 0.0);
  return z;
}

ModelDims dims_of(const ModelParams& params) {
  ModelDims d;
  d.hidden = params.fc1.w.rows();
  d.embed = params.fc2.w.rows();
  d.conv1 = params.conv1.d_out;
  d.conv2 = params.conv2.d_out;
  d.p = params.conv1.p;
  d.t_out = params.readout.w.cols();
  d.t_in = d.conv2 == 0 ? 0 : params.readout.w.rows() / d.conv2;
  return d;
}

void validate_params(const ModelParams& p) {
  if (p.fc1.w.cols() != 1 || p.fc1.b.size() != p.fc1.w.rows()) throw ArgumentError("fc1 must map 1 feature");
  if (p.fc2.w.cols() != p.fc1.w.rows() || p.fc2.b.size() != p.fc2.w.rows()) {
    throw ArgumentError("fc2 shape does not chain with fc1");
  }
  if (p.conv1.d_in != p.fc2.w.rows()) throw ArgumentError("conv1 input width does not match the embedding");
  if (p.conv2.d_in != p.conv1.d_out) throw ArgumentError("conv2 input width does not match conv1");
  if (p.conv1.p != p.conv2.p) throw ArgumentError("conv layers must share the order p");
  p.conv1.validate();
  p.conv2.validate();
  p.readout.validate();
  if (p.conv2.d_out == 0 || p.readout.w.rows() % p.conv2.d_out != 0) {
    throw ArgumentError("readout rows must be a multiple of the conv2 width");
  }
  for (const auto& b : param_blocks(p))
    for (double v : b.values)
      if (!std::isfinite(v)) throw DataError("parameter block " + b.name + " contains non-finite values");
}

ModelContext make_context(ConvMode mode, const SpatialGraph& sg, const TemporalAdjacency& at,
                          const std::array<Ranks, 2>& ranks, HooiOptions hooi) {
  ModelContext ctx;
  ctx.mode = mode;
  ctx.ranks = ranks;
  ctx.hooi = hooi;
  switch (mode) {
    case ConvMode::spatial_only:
      ctx.sg = sg;
      ctx.at = build_temporal_adjacency(at.n_nodes(), at.steps(), TemporalScheme::identity, at.order());
      break;
    case ConvMode::temporal_only:
      ctx.sg = identity_spatial_graph(sg.n_nodes, sg.order());
      ctx.at = at;
      break;
    default:
      ctx.sg = sg;
      ctx.at = at;
  }
  return ctx;
}

std::array<Ranks, 2> layer_ranks(std::size_t n_nodes, const ModelDims& dims, RankRule rule) {
  return {ranks_from_rule({n_nodes, dims.embed, dims.t_in}, rule),
          ranks_from_rule({n_nodes, dims.conv1, dims.t_in}, rule)};
}

void FactorCache::clear() {
  factors = {};
  calls = {0, 0};
}

Mat model_forward(const ModelParams& params, const Tensor3& window, const ModelContext& ctx, ForwardCache* cache,
                  FactorCache* factor_cache) {
  const Dims3& d = window.dims();
  if (d.i2 != 1) throw ArgumentError("input window must have a single raw feature");
  if (params.readout.w.rows() != params.conv2.d_out * d.i3) {
    throw ArgumentError("window length " + std::to_string(d.i3) + " does not match the readout");
  }
  if (!window.all_finite()) throw DataError("input window contains non-finite values");

  Tensor3 e1_pre = dense_forward(window, params.fc1);
  Tensor3 e1 = e1_pre;
  apply_activation(e1, Activation::relu);
  Tensor3 e2_pre = dense_forward(e1, params.fc2);
  Tensor3 e2 = e2_pre;
  apply_activation(e2, Activation::relu);

  Tensor3 h1 = conv_forward(e2, params.conv1, ctx, 0, cache ? &cache->c1 : nullptr, factor_cache);
  Tensor3 h2 = conv_forward(h1, params.conv2, ctx, 1, cache ? &cache->c2 : nullptr, factor_cache);

  Mat pre = matmul(unfold(h2, 1), params.readout.w);
  for (std::size_t r = 0; r < pre.rows(); ++r)
    for (std::size_t c = 0; c < pre.cols(); ++c) pre(r, c) += params.readout.b[c];
  Mat pred = pre;
  apply_activation(pred, params.readout.activation);

  if (cache) {
    cache->x = window;
    cache->e1_pre = std::move(e1_pre);
    cache->e1 = std::move(e1);
    cache->e2_pre = std::move(e2_pre);
    cache->e2 = std::move(e2);
    cache->readout_pre = std::move(pre);
    cache->pred = pred;
  }
  return pred;
}

double compute_loss(const Mat& pred, const Mat& target, const ModelParams& params, double lambda) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw ArgumentError("prediction and target shapes differ");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double r = pred.data()[i] - target.data()[i];
    s += r * r;
  }
  return lambda == 0.0 ? s : s + lambda * squared_param_norm(params);
}

double compute_loss(std::span<const Mat> preds, std::span<const Mat> targets, const ModelParams& params,
                    double lambda) {
  if (preds.size() != targets.size() || preds.empty()) throw ArgumentError("loss needs matching non-empty batches");
  double s = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) s += compute_loss(preds[i], targets[i], params, 0.0);
  s /= static_cast<double>(preds.size());
  return lambda == 0.0 ? s : s + lambda * squared_param_norm(params);
}

void model_backward(const ModelParams& params, const ForwardCache& c, const Mat& d_pred, const ModelContext& ctx,
                    ModelParams& grads) {
  const Mat d_ro = activation_backward(c.readout_pre, d_pred, params.readout.activation);
  const Mat u = unfold(c.c2.out, 1);
  const Mat gw = matmul_tn(u, d_ro);
  for (std::size_t i = 0; i < gw.size(); ++i) grads.readout.w.data()[i] += gw.data()[i];
  for (std::size_t r = 0; r < d_ro.rows(); ++r)
    for (std::size_t col = 0; col < d_ro.cols(); ++col) grads.readout.b[col] += d_ro(r, col);

  const Tensor3 d_h2 = fold(matmul_nt(d_ro, params.readout.w), 1, c.c2.out.dims());
  const Tensor3 d_h1 = conv_backward(c.c2, params.conv2, ctx, d_h2, grads.conv2);
  const Tensor3 d_e2 = conv_backward(c.c1, params.conv1, ctx, d_h1, grads.conv1);
  const Tensor3 d_e2_pre = activation_backward(c.e2_pre, d_e2, Activation::relu);
  const Tensor3 d_e1 = dense_backward(c.e1, params.fc2, d_e2_pre, grads.fc2, true);
  const Tensor3 d_e1_pre = activation_backward(c.e1_pre, d_e1, Activation::relu);
  dense_backward(c.x, params.fc1, d_e1_pre, grads.fc1, false);
}

GradientResult compute_gradients(const ModelParams& params, std::span<const Window* const> batch,
                                 const ModelContext& ctx, double lambda, FactorCache* factor_cache) {
  if (batch.empty()) throw ArgumentError("gradient batch is empty");
  GradientResult r{0.0, zeros_like(params)};
  const double scale = 1.0 / static_cast<double>(batch.size());
  ForwardCache cache;
  for (const Window* w : batch) {
    const Mat pred = model_forward(params, w->input, ctx, &cache, factor_cache);
    if (pred.rows() != w->target.rows() || pred.cols() != w->target.cols()) {
      throw ArgumentError("target shape does not match the prediction");
    }
    Mat d_pred(pred.rows(), pred.cols());
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const double res = pred.data()[i] - w->target.data()[i];
      s += res * res;
      d_pred.data()[i] = 2.0 * scale * res;
    }
    r.loss += scale * s;
    model_backward(params, cache, d_pred, ctx, r.grads);
  }
  if (lambda != 0.0) {
    r.loss += lambda * squared_param_norm(params);
    auto gb = param_blocks(r.grads);
    const auto pb = param_blocks(params);
    for (std::size_t b = 0; b < gb.size(); ++b)
      for (std::size_t i = 0; i < gb[b].values.size(); ++i) gb[b].values[i] += 2.0 * lambda * pb[b].values[i];
  }
  if (!std::isfinite(r.loss)) {
    throw DataError("non-finite training loss (" + std::to_string(r.loss) +
                    "); lower the learning rate or check the input scaling");
  }
  return r;
}

GradientResult compute_gradients(const ModelParams& params, std::span<const Window> batch, const ModelContext& ctx,
                                 double lambda, FactorCache* factor_cache) {
  std::vector<const Window*> ptrs;
  ptrs.reserve(batch.size());
  for (const Window& w : batch) ptrs.push_back(&w);
  return compute_gradients(params, std::span<const Window* const>(ptrs), ctx, lambda, factor_cache);
}

double batch_loss(const ModelParams& params, std::span<const Window> batch, const ModelContext& ctx, double lambda) {
  if (batch.empty()) throw ArgumentError("loss batch is empty");
  double s = 0.0;
  for (const Window& w : batch) s += compute_loss(model_forward(params, w.input, ctx), w.target, params, 0.0);
  s /= static_cast<double>(batch.size());
  return lambda == 0.0 ? s : s + lambda * squared_param_norm(params);
}

FdReport finite_difference_check(const ModelParams& params, std::span<const Window> batch, const ModelContext& ctx,
                                 double lambda, const FdOptions& options) {
  if (!(options.h > 0.0) || !std::isfinite(options.h)) throw ArgumentError("finite-difference step must be positive");
  const GradientResult analytic = compute_gradients(params, batch, ctx, lambda);
  ModelParams work = params;
  auto wb = param_blocks(work);
  const auto gb = param_blocks(analytic.grads);

  const std::size_t total = param_count(params);
  std::mt19937_64 rng(options.seed);
  FdReport report;
  double sum = 0.0;
  for (std::size_t b = 0; b < wb.size(); ++b) {
    const std::size_t size = wb[b].values.size();
    std::vector<std::size_t> idx(size);
    std::iota(idx.begin(), idx.end(), 0);
    if (total > options.samples) {
      const auto share = static_cast<std::size_t>(
          std::ceil(static_cast<double>(options.samples) * static_cast<double>(size) / static_cast<double>(total)));
      const std::size_t take = std::min(size, std::max<std::size_t>(share, 4));
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(take);
      std::sort(idx.begin(), idx.end());
    }
    FdBlockReport br{wb[b].name, 0, 0.0, 0.0};
    for (std::size_t i : idx) {
      double& v = wb[b].values[i];
      const double orig = v;
      v = orig + options.h;
      const double lp = batch_loss(work, batch, ctx, lambda);
      v = orig - options.h;
      const double lm = batch_loss(work, batch, ctx, lambda);
      v = orig;
      const double numeric = (lp - lm) / (2.0 * options.h);
      const double rel = relative_fd_error(gb[b].values[i], numeric, options.floor);
      br.max_rel = std::max(br.max_rel, rel);
      br.mean_rel += rel;
      ++br.checked;
    }
    sum += br.mean_rel;
    if (br.checked) br.mean_rel /= static_cast<double>(br.checked);
    report.checked += br.checked;
    report.max_rel = std::max(report.max_rel, br.max_rel);
    report.blocks.push_back(std::move(br));
  }
  if (report.checked) report.mean_rel = sum / static_cast<double>(report.checked);
  return report;
}

AdamState make_adam_state(const ModelParams& params) { return {zeros_like(params), zeros_like(params), 0}; }

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, const AdamOptions& o) {
  auto pb = param_blocks(params);
  const auto gb = param_blocks(grads);
  auto mb = param_blocks(state.m);
  auto vb = param_blocks(state.v);
  if (gb.size() != pb.size() || mb.size() != pb.size() || vb.size() != pb.size()) {
    throw ArgumentError("optimizer state does not mirror the parameters");
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(o.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(o.beta2, static_cast<double>(state.step));
  for (std::size_t b = 0; b < pb.size(); ++b) {
    if (gb[b].values.size() != pb[b].values.size() || mb[b].values.size() != pb[b].values.size()) {
      throw ArgumentError("optimizer state block " + pb[b].name + " has the wrong size");
    }
    for (std::size_t i = 0; i < pb[b].values.size(); ++i) {
      const double g = gb[b].values[i];
      double& m = mb[b].values[i];
      double& v = vb[b].values[i];
      m = o.beta1 * m + (1.0 - o.beta1) * g;
      v = o.beta2 * v + (1.0 - o.beta2) * g * g;
      pb[b].values[i] -= o.lr * (m / c1) / (std::sqrt(v / c2) + o.eps);
    }
  }
}

}  // namespace sttgcn
