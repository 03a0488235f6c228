#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "sttgcn/checkpoint.hpp"
#include "sttgcn/model.hpp"
#include "sttgcn/train.hpp"

using namespace sttgcn;

namespace {

ModelDims small_dims() {
  ModelDims d;
  d.t_in = 4;
  d.t_out = 2;
  d.hidden = 3;
  d.embed = 3;
  d.conv1 = 3;
  d.conv2 = 2;
  d.p = 2;
  return d;
}

struct Fixture {
  std::size_t n = 5;
  ModelDims dims = small_dims();
  SpatialGraph sg;
  TemporalAdjacency at;
  std::vector<Window> windows;

  explicit Fixture(std::uint64_t seed = 1) {
    std::mt19937_64 rng(seed);
    sg = make_spatial_graph(ring_adjacency(n), dims.p);
    at = build_temporal_adjacency(n, dims.t_in, TemporalScheme::backward_chain, dims.p);
    std::uniform_real_distribution<double> u(0.1, 0.9);
    for (int w = 0; w < 4; ++w) {
      Window win{Tensor3({n, 1, dims.t_in}), Mat(n, dims.t_out), 0};
      for (double& v : win.input.data()) v = u(rng);
      for (double& v : win.target.data()) v = u(rng);
      windows.push_back(std::move(win));
    }
  }
  ModelContext ctx(ConvMode mode, RankRule rule = RankRule::full) const {
    return make_context(mode, sg, at, layer_ranks(n, dims, rule));
  }
};

bool params_equal(const ModelParams& a, const ModelParams& b) {
  const auto ba = param_blocks(a);
  const auto bb = param_blocks(b);
  if (ba.size() != bb.size()) return false;
  for (std::size_t i = 0; i < ba.size(); ++i) {
    if (ba[i].name != bb[i].name || ba[i].values.size() != bb[i].values.size()) return false;
    for (std::size_t k = 0; k < ba[i].values.size(); ++k)
      if (ba[i].values[k] != bb[i].values[k]) return false;
  }
  return true;
}

double relu(double v) { return v > 0.0 ? v : 0.0; }

// Dense along the feature mode, written as plain loops.
Tensor3 dense_oracle(const Tensor3& x, const Dense& fc) {
  const Dims3& d = x.dims();
  Tensor3 out({d.i1, fc.w.rows(), d.i3});
  for (std::size_t n = 0; n < d.i1; ++n)
    for (std::size_t o = 0; o < fc.w.rows(); ++o)
      for (std::size_t t = 0; t < d.i3; ++t) {
        double s = fc.b[o];
        for (std::size_t i = 0; i < d.i2; ++i) s += fc.w(o, i) * x(n, i, t);
        out(n, o, t) = relu(s);
      }
  return out;
}

Tensor3 conv_oracle(const Tensor3& x, const SpatialGraph& sg, const TemporalAdjacency& at, const ConvLayerParams& p) {
  const Dims3& d = x.dims();
  Tensor3 out({d.i1, p.d_out, d.i3});
  for (int ks = 0; ks <= p.p; ++ks) {
    const Tensor3 s = oracle::mode_product(x, oracle::matpow(sg.a_norm, ks), 1);
    for (int kt = 0; kt <= p.p; ++kt) {
      Tensor3 slices({d.i1, d.i3, d.i3});
      for (std::size_t k = 0; k < d.i1; ++k) slices.set_slice1(k, oracle::matpow(at.tensor.slice1(k), kt));
      out += oracle::mode_product(oracle::batch_mode3(s, slices), p.filter(ks, kt), 2);
    }
  }
  for (double& v : out.data()) v = relu(v);
  return out;
}

Mat model_oracle(const ModelParams& m, const Tensor3& x, const SpatialGraph& sg, const TemporalAdjacency& at) {
  const Tensor3 h = conv_oracle(conv_oracle(dense_oracle(dense_oracle(x, m.fc1), m.fc2), sg, at, m.conv1), sg, at,
                                m.conv2);
  const Mat flat = oracle::unfold(h, 1);
  Mat out(flat.rows(), m.readout.w.cols());
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) {
      double s = m.readout.b[c];
      for (std::size_t k = 0; k < flat.cols(); ++k) s += flat(r, k) * m.readout.w(k, c);
      out(r, c) = 1.0 / (1.0 + std::exp(-s));
    }
  return out;
}

}  // namespace

TEST_CASE("parameter layout") {
  const ModelParams p = init_params(small_dims(), 3);
  const auto blocks = param_blocks(p);
  REQUIRE(blocks.size() == 4 + 9 + 9 + 2);
  CHECK(blocks.front().name == "fc1.w");
  CHECK(blocks.back().name == "readout.b");
  CHECK(p.fc1.w.rows() == 3);
  CHECK(p.fc1.w.cols() == 1);
  CHECK(p.readout.w.rows() == 2 * 4);
  CHECK(p.readout.w.cols() == 2);
  std::size_t total = 0;
  for (const auto& b : blocks) total += b.values.size();
  CHECK(param_count(p) == total);
  for (double v : p.fc1.b) CHECK(v == 0.0);
  const double bound = std::sqrt(6.0 / (3 + 3));
  for (double v : p.conv1.theta[0].data()) CHECK(std::abs(v) <= bound);
  CHECK(params_equal(init_params(small_dims(), 3), p));
  CHECK_FALSE(params_equal(init_params(small_dims(), 4), p));
  CHECK(squared_param_norm(zeros_like(p)) == 0.0);
  CHECK(dims_of(p).conv2 == 2);
}

TEST_CASE("mode names") {
  for (ConvMode m : {ConvMode::full, ConvMode::factorized, ConvMode::spatial_only, ConvMode::temporal_only})
    CHECK(parse_conv_mode(conv_mode_name(m)) == m);
  CHECK(conv_mode_name(ConvMode::spatial_only) == "spatial-only");
  CHECK_THROWS_AS(parse_conv_mode("dense"), ArgumentError);
}

TEST_CASE("zero weights predict the readout activation of zero") {
  Fixture f;
  ModelParams z = zeros_like(init_params(f.dims, 1));
  const Mat pred = model_forward(z, f.windows[0].input, f.ctx(ConvMode::full));
  for (double v : pred.data()) CHECK(v == 0.5);
  z.readout.activation = Activation::identity;
  const Mat lin = model_forward(z, f.windows[0].input, f.ctx(ConvMode::full));
  CHECK(lin.frobenius_norm() == 0.0);
}

TEST_CASE("forward matches a layer-by-layer oracle") {
  Fixture f;
  const ModelParams p = init_params(f.dims, 5);
  for (const Window& w : f.windows) {
    const Mat got = model_forward(p, w.input, f.ctx(ConvMode::full));
    const Mat want = model_oracle(p, w.input, f.sg, f.at);
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got.data()[i] == doctest::Approx(want.data()[i]).epsilon(1e-12));
  }
}

TEST_CASE("factorized modes at full rank agree with the full model") {
  Fixture f;
  const ModelParams p = init_params(f.dims, 6);
  const Mat full = model_forward(p, f.windows[1].input, f.ctx(ConvMode::full));
  const Mat fact = model_forward(p, f.windows[1].input, f.ctx(ConvMode::factorized));
  for (std::size_t i = 0; i < full.size(); ++i) CHECK(fact.data()[i] == doctest::Approx(full.data()[i]).epsilon(1e-8));

  // spatial-only equals the full model on identity temporal slices, temporal-only on an identity graph
  const Mat so = model_forward(p, f.windows[1].input, f.ctx(ConvMode::spatial_only));
  const ModelContext id_t = make_context(ConvMode::full, f.sg,
                                         build_temporal_adjacency(f.n, f.dims.t_in, TemporalScheme::identity, f.dims.p));
  const Mat so_ref = model_forward(p, f.windows[1].input, id_t);
  for (std::size_t i = 0; i < so.size(); ++i) CHECK(so.data()[i] == doctest::Approx(so_ref.data()[i]).epsilon(1e-8));
  const Mat to = model_forward(p, f.windows[1].input, f.ctx(ConvMode::temporal_only));
  const ModelContext id_s = make_context(ConvMode::full, identity_spatial_graph(f.n, f.dims.p), f.at);
  const Mat to_ref = model_forward(p, f.windows[1].input, id_s);
  for (std::size_t i = 0; i < to.size(); ++i) CHECK(to.data()[i] == doctest::Approx(to_ref.data()[i]).epsilon(1e-8));
}

TEST_CASE("loss") {
  ModelParams z = zeros_like(init_params(small_dims(), 1));
  const Mat pred = Mat::from_rows({{1, 2}, {3, 4}});
  const Mat target = Mat::from_rows({{0, 2}, {1, 3}});
  CHECK(compute_loss(pred, target, z, 0.5) == doctest::Approx(6.0));
  CHECK(compute_loss(target, target, z, 0.5) == 0.0);
  ModelParams p = init_params(small_dims(), 2);
  CHECK(compute_loss(target, target, p, 0.25) == doctest::Approx(0.25 * squared_param_norm(p)));
  const std::vector<Mat> preds{pred, target};
  const std::vector<Mat> targets{target, target};
  CHECK(compute_loss(preds, targets, z, 0.0) == doctest::Approx(3.0));
  CHECK_THROWS_AS(compute_loss(pred, Mat(2, 3), z, 0.0), ArgumentError);
}

TEST_CASE("gradient of the penalty alone is 2 lambda theta") {
  Fixture f;
  const ModelParams p = init_params(f.dims, 7);
  // targets set to the model's own predictions: the residual vanishes
  std::vector<Window> batch = f.windows;
  const ModelContext ctx = f.ctx(ConvMode::full);
  for (Window& w : batch) w.target = model_forward(p, w.input, ctx);
  const GradientResult g0 = compute_gradients(p, batch, ctx, 0.0);
  CHECK(g0.loss == doctest::Approx(0.0));
  CHECK(squared_param_norm(g0.grads) == doctest::Approx(0.0));
  const double lambda = 0.3;
  const GradientResult g = compute_gradients(p, batch, ctx, lambda);
  const auto pb = param_blocks(p);
  const auto gb = param_blocks(g.grads);
  for (std::size_t b = 0; b < pb.size(); ++b)
    for (std::size_t i = 0; i < pb[b].values.size(); ++i)
      CHECK(gb[b].values[i] == doctest::Approx(2.0 * lambda * pb[b].values[i]).epsilon(1e-12));
}

TEST_CASE("analytic gradients match central differences") {
  Fixture f;
  ModelParams p = init_params(f.dims, 8);
  // nonzero biases so every block is exercised
  for (double& v : p.fc1.b) v = 0.05;
  for (double& v : p.readout.b) v = -0.1;
  const FdReport r = finite_difference_check(p, f.windows, f.ctx(ConvMode::full), 1e-3, {1e-5, 100000, 1, 1e-6});
  CHECK(r.checked == param_count(p));
  CHECK(r.max_rel <= 1e-4);
  for (const auto& b : r.blocks) CHECK(b.checked > 0);

  FdOptions sub;
  sub.samples = 40;
  const FdReport rs = finite_difference_check(p, f.windows, f.ctx(ConvMode::full), 1e-3, sub);
  CHECK(rs.checked <= param_count(p));
  CHECK(rs.max_rel <= 1e-4);

  CHECK_THROWS_AS(finite_difference_check(p, f.windows, f.ctx(ConvMode::full), 0.0, {0.0}), ArgumentError);
  CHECK_THROWS_AS(finite_difference_check(p, f.windows, f.ctx(ConvMode::full), 0.0, {-1e-5}), ArgumentError);
}

TEST_CASE("factorized gradients at full rank match the full gradients") {
  Fixture f;
  const ModelParams p = init_params(f.dims, 9);
  const GradientResult gf = compute_gradients(p, f.windows, f.ctx(ConvMode::full), 1e-3);
  const GradientResult gt = compute_gradients(p, f.windows, f.ctx(ConvMode::factorized), 1e-3);
  CHECK(gt.loss == doctest::Approx(gf.loss).epsilon(1e-8));
  const auto a = param_blocks(gf.grads);
  const auto b = param_blocks(gt.grads);
  for (std::size_t k = 0; k < a.size(); ++k)
    for (std::size_t i = 0; i < a[k].values.size(); ++i)
      CHECK(b[k].values[i] == doctest::Approx(a[k].values[i]).epsilon(1e-6).scale(1e-8));
}

TEST_CASE("factor cache") {
  Fixture f;
  const ModelParams p = init_params(f.dims, 10);
  const ModelContext ctx = f.ctx(ConvMode::factorized, RankRule::sqrt);
  FactorCache cache;
  cache.refactorize_every = 3;
  const Mat a = model_forward(p, f.windows[0].input, ctx, nullptr, &cache);
  CHECK(a == model_forward(p, f.windows[0].input, ctx));
  REQUIRE(cache.factors[0].has_value());
  const Mat u_s = cache.factors[0]->u_s;
  model_forward(p, f.windows[1].input, ctx, nullptr, &cache);
  CHECK(cache.factors[0]->u_s == u_s);
  CHECK(cache.calls[0] == 2);
  cache.clear();
  CHECK_FALSE(cache.factors[0].has_value());
  CHECK(cache.calls[1] == 0);
}

TEST_CASE("adam") {
  const ModelParams p = init_params(small_dims(), 11);
  ModelParams q = p;
  AdamState st = make_adam_state(q);
  adam_step(q, zeros_like(p), st);
  CHECK(params_equal(p, q));
  CHECK(st.step == 1);

  ModelParams g = zeros_like(p);
  g.fc1.w(0, 0) = 3.0;
  g.fc1.w(1, 0) = -1e-3;
  ModelParams r = p;
  AdamState s2 = make_adam_state(r);
  adam_step(r, g, s2, {0.01});
  CHECK(r.fc1.w(0, 0) - p.fc1.w(0, 0) == doctest::Approx(-0.01).epsilon(1e-6));
  CHECK(r.fc1.w(1, 0) - p.fc1.w(1, 0) == doctest::Approx(0.01).epsilon(1e-4));
  CHECK(r.fc1.w(2, 0) == p.fc1.w(2, 0));

  ModelParams r2 = p;
  AdamState s3 = make_adam_state(r2);
  adam_step(r2, g, s3, {0.01});
  CHECK(params_equal(r, r2));
}

namespace {

WindowSet small_windows() {
  SyntheticOptions o;
  o.nodes = 5;
  o.steps = 120;
  return prepare_windows(make_synthetic_dataset(o), 4, 2, 0.8);
}

TrainConfig small_config() {
  TrainConfig c;
  c.epochs = 3;
  c.batch_size = 8;
  c.learning_rate = 0.01;
  c.t_in = 4;
  c.t_out = 2;
  c.hidden = c.embed = c.conv1 = 3;
  c.conv2 = 2;
  c.mode = ConvMode::full;
  return c;
}

}  // namespace

TEST_CASE("training") {
  const WindowSet ws = small_windows();
  const SpatialGraph sg = make_spatial_graph(ring_adjacency(5), 2);
  const TemporalAdjacency at = build_temporal_adjacency(5, 4, TemporalScheme::backward_chain, 2);

  TrainConfig frozen = small_config();
  frozen.learning_rate = 0.0;
  const ModelParams init = init_params(frozen.model_dims(), frozen.seed);
  const TrainResult f = train_from(frozen, init, ws, sg, at);
  CHECK(params_equal(f.last, init));

  TrainConfig c = small_config();
  c.epochs = 15;
  int seen = 0;
  const TrainResult a = train(c, ws, sg, at, [&](const EpochRecord& r) {
    ++seen;
    CHECK(r.val_rmse.has_value());
  });
  CHECK(seen == 15);
  CHECK(a.history.size() == 15);
  CHECK(a.history.back().train_loss < a.initial_loss);
  CHECK(a.best_epoch >= 1);
  const TrainResult b = train(c, ws, sg, at);
  CHECK(params_equal(a.params, b.params));
  CHECK(params_equal(a.last, b.last));

  TrainConfig fz = small_config();
  fz.mode = ConvMode::factorized;
  fz.epochs = 2;
  const TrainResult t1 = train(fz, ws, sg, at);
  const TrainResult t2 = train(fz, ws, sg, at);
  CHECK(params_equal(t1.last, t2.last));

  TrainConfig bad = small_config();
  bad.batch_size = 0;
  CHECK_THROWS_AS(train(bad, ws, sg, at), ArgumentError);
  bad = small_config();
  bad.t_in = 5;
  CHECK_THROWS_AS(train(bad, ws, sg, at), ArgumentError);
}

TEST_CASE("evaluation") {
  const WindowSet ws = small_windows();
  std::vector<Mat> perfect;
  for (const Window& w : ws.test) perfect.push_back(ws.scaler.descale(w.target));
  const MetricsReport m = score_predictions(perfect, ws.test, ws.scaler);
  CHECK(m.rmse == 0.0);
  CHECK(m.mae == 0.0);
  CHECK(*m.accuracy == 1.0);
  CHECK(*m.r2 == 1.0);

  double mean = 0.0;
  std::size_t count = 0;
  for (const Mat& p : perfect)
    for (double v : p.data()) mean += v, ++count;
  mean /= static_cast<double>(count);
  std::vector<Mat> flat;
  for (const Mat& p : perfect) {
    Mat q(p.rows(), p.cols());
    for (double& v : q.data()) v = mean;
    flat.push_back(q);
  }
  CHECK(*score_predictions(flat, ws.test, ws.scaler).r2 == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK(m.count == ws.test.size() * 5 * 2);
}

TEST_CASE("checkpoint round trip is bit-exact") {
  Checkpoint c;
  c.config = small_config();
  c.config.mode = ConvMode::temporal_only;
  c.config.ranks = Ranks{2, 2, 3};
  c.params = init_params(c.config.model_dims(), 77);
  c.params.readout.b[1] = 0.1 + 0.2;
  c.scaler.max = 61.23456789012345;
  c.seed = 77;
  const Checkpoint r = checkpoint_from_json(checkpoint_to_json(c));
  CHECK(params_equal(r.params, c.params));
  CHECK(r.scaler.max == c.scaler.max);
  CHECK(r.seed == 77);
  CHECK(r.config.mode == ConvMode::temporal_only);
  CHECK(r.config.ranks == c.config.ranks);
  CHECK(r.config.t_out == 2);
  CHECK(r.params.conv1.activation == Activation::relu);

  CHECK_THROWS_AS(checkpoint_from_json("{"), DataError);
  CHECK_THROWS_AS(checkpoint_from_json("{\"format\":\"other\"}"), DataError);
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/ckpt.json"), DataError);
}
