#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "sttgcn/bench.hpp"
#include "sttgcn/cli.hpp"
#include "sttgcn/data_io.hpp"
#include "sttgcn/decomp.hpp"
#include "sttgcn/errors.hpp"
#include "sttgcn/graph.hpp"
#include "sttgcn/metrics.hpp"
#include "sttgcn/stconv.hpp"

namespace py = pybind11;
using namespace sttgcn;

namespace {

// Tensor3 stores the first index fastest, which is Fortran order for an (N, D, T) array.
using FArray = py::array_t<double, py::array::f_style | py::array::forcecast>;
using CArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor3 to_tensor(const FArray& a) {
  if (a.ndim() != 3) throw ArgumentError("expected a 3-dimensional array");
  const Dims3 d{static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)),
                static_cast<std::size_t>(a.shape(2))};
  return Tensor3(d, std::vector<double>(a.data(), a.data() + d.size()));
}

py::array_t<double> from_tensor(const Tensor3& t) {
  const Dims3& d = t.dims();
  py::array_t<double, py::array::f_style> out({d.i1, d.i2, d.i3});
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

Mat to_mat(const CArray& a) {
  if (a.ndim() != 2) throw ArgumentError("expected a 2-dimensional array");
  const auto r = static_cast<std::size_t>(a.shape(0));
  const auto c = static_cast<std::size_t>(a.shape(1));
  return Mat(r, c, std::vector<double>(a.data(), a.data() + r * c));
}

py::array_t<double> from_mat(const Mat& m) {
  py::array_t<double> out({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

std::vector<double> to_vector(const CArray& a) { return {a.data(), a.data() + a.size()}; }

Dims3 to_dims(const std::vector<std::size_t>& v) {
  if (v.size() != 3) throw ArgumentError("expected three extents");
  return {v[0], v[1], v[2]};
}

Ranks to_ranks(const std::vector<std::size_t>& v) {
  if (v.size() != 3) throw ArgumentError("expected three ranks");
  return {v[0], v[1], v[2]};
}

ConvLayerParams conv_params(const std::vector<CArray>& weights, int p, const std::string& activation) {
  ConvLayerParams params;
  params.p = p;
  params.activation = parse_activation(activation);
  for (const auto& w : weights) params.theta.push_back(to_mat(w));
  if (params.theta.empty()) throw ArgumentError("at least one filter matrix is required");
  params.d_out = params.theta.front().rows();
  params.d_in = params.theta.front().cols();
  return params;
}

TemporalAdjacency temporal(std::size_t n, std::size_t t, int p, const std::string& scheme) {
  return build_temporal_adjacency(n, t, parse_temporal_scheme(scheme), p);
}

py::dict metrics_dict(const MetricsReport& m) {
  py::dict d;
  d["rmse"] = m.rmse;
  d["mae"] = m.mae;
  d["accuracy"] = m.accuracy ? py::cast(*m.accuracy) : py::none();
  d["r2"] = m.r2 ? py::cast(*m.r2) : py::none();
  d["var"] = m.var ? py::cast(*m.var) : py::none();
  d["count"] = m.count;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Tensor graph convolution primitives";
  py::register_exception<ArgumentError>(m, "ArgumentError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_RuntimeError);

  m.def("unfold", [](const FArray& x, int mode) { return from_mat(unfold(to_tensor(x), mode)); }, py::arg("x"),
        py::arg("mode"));
  m.def(
      "fold",
      [](const CArray& mat, int mode, const std::vector<std::size_t>& dims) {
        return from_tensor(fold(to_mat(mat), mode, to_dims(dims)));
      },
      py::arg("m"), py::arg("mode"), py::arg("dims"));
  m.def(
      "mode_product",
      [](const FArray& x, const CArray& u, int mode) { return from_tensor(mode_product(to_tensor(x), to_mat(u), mode)); },
      py::arg("x"), py::arg("u"), py::arg("mode"));
  m.def(
      "batch_mode3_product",
      [](const FArray& a, const FArray& b) { return from_tensor(batch_mode3_product(to_tensor(a), to_tensor(b))); },
      py::arg("a"), py::arg("b"));

  m.def(
      "hooi",
      [](const FArray& x, const std::vector<std::size_t>& ranks, int max_iter, double tol) {
        HooiTrace trace;
        const TuckerFactors f = hooi(to_tensor(x), to_ranks(ranks), {max_iter, tol}, &trace);
        py::dict d;
        d["core"] = from_tensor(f.core);
        d["u_s"] = from_mat(f.u_s);
        d["u_f"] = from_mat(f.u_f);
        d["u_t"] = from_mat(f.u_t);
        d["errors"] = trace.errors;
        return d;
      },
      py::arg("x"), py::arg("ranks"), py::arg("max_iter") = 50, py::arg("tol") = 1e-7);
  m.def(
      "tucker_reconstruct",
      [](const FArray& core, const CArray& u1, const CArray& u2, const CArray& u3) {
        return from_tensor(tucker_reconstruct(to_tensor(core), to_mat(u1), to_mat(u2), to_mat(u3)));
      },
      py::arg("core"), py::arg("u_s"), py::arg("u_f"), py::arg("u_t"));
  m.def(
      "ranks_from_rule",
      [](const std::vector<std::size_t>& dims, const std::string& rule) {
        const Ranks r = ranks_from_rule(to_dims(dims), parse_rank_rule(rule));
        return std::vector<std::size_t>{r.n, r.d, r.t};
      },
      py::arg("dims"), py::arg("rule") = "sqrt");

  m.def(
      "normalize_adjacency",
      [](const CArray& a, bool self_loops) { return from_mat(normalize_adjacency(to_mat(a), self_loops)); },
      py::arg("a"), py::arg("add_self_loops") = true);

  m.def(
      "st_conv_full",
      [](const FArray& x, const CArray& adjacency, const std::vector<CArray>& weights, int p,
         const std::string& activation, const std::string& scheme) {
        const Tensor3 xt = to_tensor(x);
        const Dims3& d = xt.dims();
        return from_tensor(st_conv_full(xt, make_spatial_graph(to_mat(adjacency), p), temporal(d.i1, d.i3, p, scheme),
                                        conv_params(weights, p, activation)));
      },
      py::arg("x"), py::arg("adjacency"), py::arg("weights"), py::arg("p"), py::arg("activation") = "identity",
      py::arg("scheme") = "backward-chain");
  m.def(
      "st_conv_factorized",
      [](const FArray& x, const CArray& adjacency, const std::vector<CArray>& weights, int p,
         const std::vector<std::size_t>& ranks, const std::string& activation, const std::string& scheme) {
        const Tensor3 xt = to_tensor(x);
        const Dims3& d = xt.dims();
        return from_tensor(st_conv_factorized(xt, make_spatial_graph(to_mat(adjacency), p),
                                              temporal(d.i1, d.i3, p, scheme), conv_params(weights, p, activation),
                                              to_ranks(ranks))
                               .output);
      },
      py::arg("x"), py::arg("adjacency"), py::arg("weights"), py::arg("p"), py::arg("ranks"),
      py::arg("activation") = "identity", py::arg("scheme") = "backward-chain");

  m.def(
      "compute_metrics",
      [](const CArray& y, const CArray& y_hat) { return metrics_dict(compute_metrics(to_vector(y), to_vector(y_hat))); },
      py::arg("y"), py::arg("y_hat"));
  m.def("memory_footprint", &memory_footprint, py::arg("N"), py::arg("D"), py::arg("T"), py::arg("n"), py::arg("d"),
        py::arg("t"));

  m.def(
      "make_synthetic",
      [](std::size_t nodes, std::size_t steps, std::uint64_t seed) {
        SyntheticOptions o;
        o.nodes = nodes;
        o.steps = steps;
        o.seed = seed;
        const RawDataset raw = make_synthetic_dataset(o);
        return py::make_tuple(from_mat(raw.speeds), from_mat(raw.adjacency));
      },
      py::arg("nodes") = 20, py::arg("steps") = 2000, py::arg("seed") = 7);
  m.def(
      "ha_metrics",
      [](const CArray& speeds, const CArray& adjacency, std::size_t t_in, std::size_t t_out, double split) {
        RawDataset raw{to_mat(speeds), to_mat(adjacency), 15};
        validate_dataset(raw);
        const WindowSet ws = prepare_windows(raw, t_in, t_out, split);
        const std::vector<Mat> preds = ha_baseline(ws);
        std::vector<double> y, yh;
        for (std::size_t i = 0; i < preds.size(); ++i) {
          const Mat target = ws.scaler.descale(ws.test[i].target);
          y.insert(y.end(), target.data().begin(), target.data().end());
          yh.insert(yh.end(), preds[i].data().begin(), preds[i].data().end());
        }
        return metrics_dict(compute_metrics(y, yh));
      },
      py::arg("speeds"), py::arg("adjacency"), py::arg("t_in") = 12, py::arg("t_out") = 1, py::arg("split") = 0.8);

  m.def(
      "bench_forward",
      [](const std::vector<std::vector<std::size_t>>& sizes, int p, const std::string& rule, int repetitions,
         std::uint64_t seed) {
        std::vector<BenchSize> bs;
        for (const auto& s : sizes) {
          const Dims3 d = to_dims(s);
          bs.push_back({d.i1, d.i2, d.i3});
        }
        BenchOptions o;
        o.p = p;
        o.rule = parse_rank_rule(rule);
        o.repetitions = repetitions;
        o.seed = seed;
        py::list rows;
        for (const BenchRow& r : bench_forward(bs, o).rows) {
          py::dict d;
          d["N"] = r.N;
          d["D"] = r.D;
          d["T"] = r.T;
          d["ranks"] = std::vector<std::size_t>{r.ranks.n, r.ranks.d, r.ranks.t};
          d["full_seconds"] = r.full_seconds;
          d["factorized_seconds"] = r.factorized_seconds;
          d["speedup"] = r.speedup;
          d["memory_full"] = r.memory_full;
          d["memory_factorized"] = r.memory_factorized;
          d["relative_difference"] = r.relative_difference;
          rows.append(d);
        }
        return rows;
      },
      py::arg("sizes"), py::arg("p") = 2, py::arg("rule") = "sqrt", py::arg("repetitions") = 5, py::arg("seed") = 1);

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::vector<const char*> argv{"sttgcn"};
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"));
}
