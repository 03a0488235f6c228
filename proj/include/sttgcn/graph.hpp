#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "sttgcn/tensor.hpp"

namespace sttgcn {

/// Symmetric normalization D^{-1/2}(A [+ I])D^{-1/2}; isolated rows without self-loops stay zero.
Mat normalize_adjacency(const Mat& a, bool add_self_loops = true);

/// [I, Ã, Ã², …, Ã^p].
std::vector<Mat> spatial_powers(const Mat& a_norm, int p);

struct SpatialGraph {
  std::size_t n_nodes = 0;
  Mat a;       // raw adjacency
  Mat a_norm;  // normalized
  std::vector<Mat> powers;

  int order() const { return static_cast<int>(powers.size()) - 1; }
};

SpatialGraph make_spatial_graph(const Mat& adjacency, int p, bool add_self_loops = true);
/// Graph whose every power is the identity (spatial mixing disabled).
SpatialGraph identity_spatial_graph(std::size_t n_nodes, int p);

enum class TemporalScheme { backward_chain, identity };
TemporalScheme parse_temporal_scheme(std::string_view name);

struct TemporalAdjacency {
  Tensor3 tensor;               // N×T×T
  std::vector<Tensor3> powers;  // powers[k] slices are the k-th matrix power of tensor's slices
  bool shared = false;          // every node slice identical

  int order() const { return static_cast<int>(powers.size()) - 1; }
  std::size_t n_nodes() const { return tensor.dims().i1; }
  std::size_t steps() const { return tensor.dims().i2; }
};

/// Per-node slice powers [A_T⁰, …, A_T^p]; power 0 has identity slices.
std::vector<Tensor3> temporal_powers(const Tensor3& at, int p);

TemporalAdjacency build_temporal_adjacency(std::size_t n_nodes, std::size_t t_steps, TemporalScheme scheme, int p);
/// Wraps an arbitrary nonnegative N×T×T tensor.
TemporalAdjacency temporal_adjacency_from_tensor(Tensor3 tensor, int p);

}  // namespace sttgcn
