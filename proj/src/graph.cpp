#include "sttgcn/graph.hpp"

#include <cmath>
#include <string>

namespace sttgcn {
namespace {

void check_order(int p) {
  if (p < 0) throw ArgumentError("polynomial order must be nonnegative, got " + std::to_string(p));
}

Tensor3 identity_slices(std::size_t n, std::size_t t) {
  Tensor3 out({n, t, t});
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < t; ++i) out(k, i, i) = 1.0;
  return out;
}

bool slices_identical(const Tensor3& x) {
  const Dims3& d = x.dims();
  for (std::size_t k = 1; k < d.i1; ++k)
    for (std::size_t i = 0; i < d.i2; ++i)
      for (std::size_t j = 0; j < d.i3; ++j)
        if (x(k, i, j) != x(0, i, j)) return false;
  return true;
}

}  // namespace

Mat normalize_adjacency(const Mat& a, bool add_self_loops) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw ArgumentError("adjacency must be square");
  for (double v : a.data()) {
    if (!std::isfinite(v)) throw ArgumentError("adjacency contains non-finite values");
    if (v < 0.0) throw ArgumentError("adjacency contains negative entries");
  }
  Mat m = a;
  if (add_self_loops) {
    for (std::size_t i = 0; i < n; ++i) m(i, i) += 1.0;
  }
  std::vector<double> inv_sqrt_deg(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double deg = 0.0;
    for (std::size_t j = 0; j < n; ++j) deg += m(i, j);
    inv_sqrt_deg[i] = deg > 0.0 ? 1.0 / std::sqrt(deg) : 0.0;
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m(i, j) *= inv_sqrt_deg[i] * inv_sqrt_deg[j];
  return m;
}

std::vector<Mat> spatial_powers(const Mat& a_norm, int p) {
  check_order(p);
  if (a_norm.rows() != a_norm.cols()) throw ArgumentError("spatial_powers: matrix must be square");
  std::vector<Mat> powers;
  powers.reserve(static_cast<std::size_t>(p) + 1);
  powers.push_back(Mat::identity(a_norm.rows()));
  for (int k = 1; k <= p; ++k) powers.push_back(matmul(powers.back(), a_norm));
  return powers;
}

SpatialGraph make_spatial_graph(const Mat& adjacency, int p, bool add_self_loops) {
  SpatialGraph g;
  g.n_nodes = adjacency.rows();
  g.a = adjacency;
  g.a_norm = normalize_adjacency(adjacency, add_self_loops);
  g.powers = spatial_powers(g.a_norm, p);
  return g;
}

SpatialGraph identity_spatial_graph(std::size_t n_nodes, int p) {
  check_order(p);
  SpatialGraph g;
  g.n_nodes = n_nodes;
  g.a = Mat(n_nodes, n_nodes);
  g.a_norm = Mat::identity(n_nodes);
  g.powers.assign(static_cast<std::size_t>(p) + 1, Mat::identity(n_nodes));
  return g;
}

TemporalScheme parse_temporal_scheme(std::string_view name) {
  if (name == "backward-chain") return TemporalScheme::backward_chain;
  if (name == "identity") return TemporalScheme::identity;
  throw ArgumentError("unknown temporal scheme '" + std::string(name) + "'");
}

std::vector<Tensor3> temporal_powers(const Tensor3& at, int p) {
  check_order(p);
  const Dims3& d = at.dims();
  if (d.i2 != d.i3) throw ArgumentError("temporal adjacency slices must be square");
  std::vector<Tensor3> powers;
  powers.reserve(static_cast<std::size_t>(p) + 1);
  powers.push_back(identity_slices(d.i1, d.i2));
  for (int k = 1; k <= p; ++k) powers.push_back(batch_mode3_product(powers.back(), at));
  return powers;
}

TemporalAdjacency temporal_adjacency_from_tensor(Tensor3 tensor, int p) {
  const Dims3& d = tensor.dims();
  if (d.i2 != d.i3) throw ArgumentError("temporal adjacency slices must be square");
  for (double v : tensor.data()) {
    if (!std::isfinite(v) || v < 0.0) throw ArgumentError("temporal adjacency entries must be finite and nonnegative");
  }
  TemporalAdjacency out;
  out.powers = temporal_powers(tensor, p);
  out.shared = slices_identical(tensor);
  out.tensor = std::move(tensor);
  return out;
}

TemporalAdjacency build_temporal_adjacency(std::size_t n_nodes, std::size_t t_steps, TemporalScheme scheme, int p) {
  if (n_nodes < 1 || t_steps < 1) throw ArgumentError("temporal adjacency needs at least one node and one step");
  if (scheme == TemporalScheme::identity) return temporal_adjacency_from_tensor(identity_slices(n_nodes, t_steps), p);

  Mat slice(t_steps, t_steps);
  for (std::size_t t = 0; t < t_steps; ++t) {
    slice(t, t) = 1.0;
    if (t >= 1) slice(t, t - 1) = 1.0;
  }
  for (std::size_t t = 0; t < t_steps; ++t) {
    double row = 0.0;
    for (std::size_t s = 0; s < t_steps; ++s) row += slice(t, s);
    for (std::size_t s = 0; s < t_steps; ++s) slice(t, s) /= row;
  }
  Tensor3 tensor({n_nodes, t_steps, t_steps});
  for (std::size_t k = 0; k < n_nodes; ++k) tensor.set_slice1(k, slice);
  return temporal_adjacency_from_tensor(std::move(tensor), p);
}

}  // namespace sttgcn
