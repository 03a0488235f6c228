#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "sttgcn/graph.hpp"

using namespace sttgcn;

namespace {

Mat random_symmetric_adjacency(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Mat a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (u(rng) < 0.4) a(i, j) = a(j, i) = u(rng);
  return a;
}

// Largest |eigenvalue| by power iteration on a symmetric matrix.
double spectral_radius(const Mat& m) {
  std::vector<double> v(m.rows(), 1.0);
  double lambda = 0.0;
  for (int it = 0; it < 2000; ++it) {
    std::vector<double> w(m.rows(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i)
      for (std::size_t j = 0; j < m.cols(); ++j) w[i] += m(i, j) * v[j];
    double norm = 0.0;
    for (double x : w) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) return 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) v[i] = w[i] / norm;
    lambda = norm;
  }
  return lambda;
}

}  // namespace

TEST_CASE("normalization hand cases") {
  CHECK(normalize_adjacency(Mat(3, 3)) == Mat::identity(3));

  const Mat path = Mat::from_rows({{0, 1, 0}, {1, 0, 1}, {0, 1, 0}});
  const Mat p = normalize_adjacency(path, false);
  const double h = 1.0 / std::sqrt(2.0);
  CHECK(oracle::max_abs_diff(p, Mat::from_rows({{0, h, 0}, {h, 0, h}, {0, h, 0}})) <= 1e-15);

  const Mat k3 = Mat::from_rows({{0, 1, 1}, {1, 0, 1}, {1, 1, 0}});
  const Mat n = normalize_adjacency(k3);
  for (double v : n.data()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  const Mat isolated = Mat::from_rows({{0, 0}, {0, 0}});
  CHECK(normalize_adjacency(isolated, false).frobenius_norm() == 0.0);
}

TEST_CASE("normalization errors") {
  CHECK_THROWS_AS(normalize_adjacency(Mat(2, 3)), ArgumentError);
  CHECK_THROWS_AS(normalize_adjacency(Mat::from_rows({{0, -1}, {-1, 0}})), ArgumentError);
}

TEST_CASE("normalized symmetric adjacency is symmetric with spectrum in [-1, 1]") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + rng() % 9;
    const Mat a = random_symmetric_adjacency(n, rng);
    for (bool loops : {true, false}) {
      const Mat m = normalize_adjacency(a, loops);
      CHECK(oracle::max_abs_diff(m, m.transpose()) <= 1e-12);
      CHECK(spectral_radius(m) <= 1.0 + 1e-10);
    }
  }
}

TEST_CASE("spatial powers") {
  const auto p0 = spatial_powers(Mat::identity(3), 0);
  CHECK(p0.size() == 1);
  CHECK(p0[0] == Mat::identity(3));
  for (const Mat& m : spatial_powers(Mat::identity(4), 3)) CHECK(m == Mat::identity(4));
  const Mat swap = Mat::from_rows({{0, 1}, {1, 0}});
  const auto ps = spatial_powers(swap, 2);
  CHECK(ps[1] == swap);
  CHECK(ps[2] == Mat::identity(2));
  CHECK_THROWS_AS(spatial_powers(swap, -1), ArgumentError);

  std::mt19937_64 rng(2);
  const SpatialGraph g = make_spatial_graph(random_symmetric_adjacency(6, rng), 3);
  CHECK(g.powers[0] == Mat::identity(6));
  CHECK(g.order() == 3);
  for (int k = 1; k <= 3; ++k) CHECK(oracle::max_abs_diff(g.powers[k], oracle::matpow(g.a_norm, k)) <= 1e-14);

  const SpatialGraph id = identity_spatial_graph(5, 2);
  for (const Mat& m : id.powers) CHECK(m == Mat::identity(5));
}

TEST_CASE("temporal adjacency schemes") {
  const TemporalAdjacency id = build_temporal_adjacency(3, 4, TemporalScheme::identity, 2);
  CHECK(id.shared);
  for (const Tensor3& p : id.powers)
    for (std::size_t k = 0; k < 3; ++k) CHECK(p.slice1(k) == Mat::identity(4));

  const TemporalAdjacency bc = build_temporal_adjacency(4, 3, TemporalScheme::backward_chain, 2);
  const Mat expect = Mat::from_rows({{1, 0, 0}, {0.5, 0.5, 0}, {0, 0.5, 0.5}});
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(bc.tensor.slice1(k) == expect);
    CHECK(bc.powers[0].slice1(k) == Mat::identity(3));
    CHECK(oracle::max_abs_diff(bc.powers[2].slice1(k), oracle::matmul(expect, expect)) <= 1e-15);
  }
  CHECK(bc.shared);

  const TemporalAdjacency big = build_temporal_adjacency(2, 12, TemporalScheme::backward_chain, 1);
  const Mat s = big.tensor.slice1(1);
  for (std::size_t r = 0; r < s.rows(); ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < s.cols(); ++c) {
      sum += s(r, c);
      CHECK(s(r, c) >= 0.0);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }

  CHECK(parse_temporal_scheme("backward-chain") == TemporalScheme::backward_chain);
  CHECK(parse_temporal_scheme("identity") == TemporalScheme::identity);
  CHECK_THROWS_AS(parse_temporal_scheme("random"), ArgumentError);
}

TEST_CASE("per-node temporal powers follow each slice") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Tensor3 t({3, 4, 4});
  for (double& v : t.data()) v = u(rng);
  const TemporalAdjacency at = temporal_adjacency_from_tensor(t, 3);
  CHECK_FALSE(at.shared);
  for (int k = 0; k <= 3; ++k)
    for (std::size_t n = 0; n < 3; ++n)
      CHECK(oracle::max_abs_diff(at.powers[k].slice1(n), oracle::matpow(t.slice1(n), k)) <= 1e-13);

  Tensor3 neg({1, 2, 2});
  neg(0, 1, 0) = -0.5;
  CHECK_THROWS_AS(temporal_adjacency_from_tensor(neg, 1), ArgumentError);
}
