#include "sttgcn/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>
#include <sstream>
#include <tuple>

#include "sttgcn/errors.hpp"
#include "sttgcn/graph.hpp"
#include "sttgcn/stconv.hpp"

namespace sttgcn {
namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

Mat random_mat(std::size_t r, std::size_t c, double scale, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, scale);
  Mat m(r, c);
  for (double& v : m.data()) v = dist(rng);
  return m;
}

Tensor3 random_tensor(Dims3 d, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Tensor3 x(d);
  for (double& v : x.data()) v = dist(rng);
  return x;
}

// Ring plus a few random chords, unit weights.
Mat random_graph(std::size_t n, std::mt19937_64& rng) {
  Mat a(n, n);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  for (std::size_t k = 0; k < n && n > 1; ++k) {
    const std::size_t j = (k + 1) % n;
    a(k, j) = a(j, k) = 1.0;
    const std::size_t c = pick(rng);
    if (c != k) a(k, c) = a(c, k) = 1.0;
  }
  return a;
}

Tensor3 bench_input(Dims3 d, Ranks r, BenchInput kind, std::mt19937_64& rng) {
  if (kind == BenchInput::gaussian) return random_tensor(d, rng);
  const Tensor3 core = random_tensor({r.n, r.d, r.t}, rng);
  Tensor3 x = tucker_reconstruct(core, random_mat(d.i1, r.n, 1.0, rng), random_mat(d.i2, r.d, 1.0, rng),
                                 random_mat(d.i3, r.t, 1.0, rng));
  const double rms = x.frobenius_norm() / std::sqrt(static_cast<double>(x.size()));
  std::normal_distribution<double> noise(0.0, 0.05 * rms);
  for (double& v : x.data()) v += noise(rng);
  return x;
}

}  // namespace

std::pair<std::size_t, std::size_t> memory_footprint(std::size_t N, std::size_t D, std::size_t T, std::size_t n,
                                                     std::size_t d, std::size_t t) {
  if (!N || !D || !T || !n || !d || !t) throw ArgumentError("memory_footprint arguments must be positive");
  return {N * D * T, n * N + t * T + d * D + n * d * t};
}

RankRule parse_rank_rule(std::string_view name) {
  if (name == "full") return RankRule::full;
  if (name == "sqrt") return RankRule::sqrt;
  if (name == "cbrt") return RankRule::cbrt;
  throw ArgumentError("unknown rank rule '" + std::string(name) + "' (expected full, sqrt or cbrt)");
}

std::string_view rank_rule_name(RankRule rule) {
  switch (rule) {
    case RankRule::full: return "full";
    case RankRule::sqrt: return "sqrt";
    default: return "cbrt";
  }
}

BenchInput parse_bench_input(std::string_view name) {
  if (name == "lowrank") return BenchInput::lowrank;
  if (name == "gaussian") return BenchInput::gaussian;
  throw ArgumentError("unknown bench input '" + std::string(name) + "' (expected lowrank or gaussian)");
}

std::string_view bench_input_name(BenchInput input) {
  return input == BenchInput::lowrank ? "lowrank" : "gaussian";
}

BenchReport bench_forward(const std::vector<BenchSize>& sizes, const BenchOptions& o) {
  if (o.repetitions < 1) throw ArgumentError("repetitions must be >= 1");
  if (o.p < 0) throw ArgumentError("order p must be nonnegative");
  BenchReport report{o, {}};
  std::mt19937_64 rng(o.seed);
  using clock = std::chrono::steady_clock;
  for (const BenchSize& s : sizes) {
    if (!s.n || !s.d || !s.t) throw ArgumentError("benchmark sizes must be positive");
    const Dims3 dims{s.n, s.d, s.t};
    const Ranks ranks = ranks_from_rule(dims, o.rule);
    const SpatialGraph sg = make_spatial_graph(random_graph(s.n, rng), o.p);
    const TemporalAdjacency at = build_temporal_adjacency(s.n, s.t, TemporalScheme::backward_chain, o.p);
    ConvLayerParams params{s.d, s.d, o.p, {}, Activation::relu};
    for (std::size_t i = 0; i < params.pairs(); ++i)
      params.theta.push_back(random_mat(s.d, s.d, 1.0 / std::sqrt(static_cast<double>(s.d)), rng));
    const Tensor3 x = bench_input(dims, ranks, o.input, rng);

    std::vector<double> full_t;
    std::vector<double> fact_t;
    Tensor3 y_full;
    Tensor3 y_fact;
    const FactorizedOptions fopt{o.hooi, o.concurrent};
    for (int r = 0; r < o.repetitions; ++r) {
      auto t0 = clock::now();
      y_full = st_conv_full(x, sg, at, params);
      auto t1 = clock::now();
      y_fact = st_conv_factorized(x, sg, at, params, ranks, nullptr, fopt).output;
      auto t2 = clock::now();
      full_t.push_back(std::chrono::duration<double>(t1 - t0).count());
      fact_t.push_back(std::chrono::duration<double>(t2 - t1).count());
    }
    BenchRow row;
    row.N = s.n;
    row.D = s.d;
    row.T = s.t;
    row.ranks = ranks;
    row.full_seconds = median(full_t);
    row.factorized_seconds = median(fact_t);
    row.speedup = row.full_seconds / row.factorized_seconds;
    std::tie(row.memory_full, row.memory_factorized) = memory_footprint(s.n, s.d, s.t, ranks.n, ranks.d, ranks.t);
    row.relative_difference = relative_error(y_fact, y_full);
    report.rows.push_back(row);
  }
  return report;
}

std::string bench_csv_header() {
  return "N,D,T,n,d,t,full_seconds,factorized_seconds,speedup,memory_full,memory_factorized,relative_difference";
}

std::string bench_csv_row(const BenchRow& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%zu,%zu,%zu,%zu,%zu,%zu,%.6g,%.6g,%.4f,%zu,%zu,%.3e", r.N, r.D, r.T, r.ranks.n,
                r.ranks.d, r.ranks.t, r.full_seconds, r.factorized_seconds, r.speedup, r.memory_full,
                r.memory_factorized, r.relative_difference);
  return buf;
}

void write_bench_table(std::ostream& os, const BenchReport& report) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%6s %5s %4s  %12s  %10s %10s %8s  %10s %10s  %9s\n", "N", "D", "T", "ranks",
                "full(s)", "fact(s)", "speedup", "mem_full", "mem_fact", "rel_diff");
  os << buf;
  for (const BenchRow& r : report.rows) {
    const std::string ranks =
        "(" + std::to_string(r.ranks.n) + "," + std::to_string(r.ranks.d) + "," + std::to_string(r.ranks.t) + ")";
    std::snprintf(buf, sizeof buf, "%6zu %5zu %4zu  %12s  %10.4f %10.4f %8.2f  %10zu %10zu  %9.2e\n", r.N, r.D, r.T,
                  ranks.c_str(), r.full_seconds, r.factorized_seconds, r.speedup, r.memory_full,
                  r.memory_factorized, r.relative_difference);
    os << buf;
  }
}

}  // namespace sttgcn
