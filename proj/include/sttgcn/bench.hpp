#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sttgcn/decomp.hpp"

namespace sttgcn {

/// (N·D·T, n·N + t·T + d·D + n·d·t).
std::pair<std::size_t, std::size_t> memory_footprint(std::size_t N, std::size_t D, std::size_t T, std::size_t n,
                                                     std::size_t d, std::size_t t);

RankRule parse_rank_rule(std::string_view name);
std::string_view rank_rule_name(RankRule rule);

/// Random input used by the benchmark: `lowrank` is a Tucker tensor at the benchmark ranks plus
/// 5% Gaussian noise, `gaussian` is i.i.d. standard normal.
enum class BenchInput { lowrank, gaussian };
BenchInput parse_bench_input(std::string_view name);
std::string_view bench_input_name(BenchInput input);

struct BenchSize {
  std::size_t n = 0;
  std::size_t d = 0;
  std::size_t t = 0;
};

struct BenchOptions {
  int p = 2;
  RankRule rule = RankRule::sqrt;
  int repetitions = 5;
  std::uint64_t seed = 1;
  bool concurrent = false;
  BenchInput input = BenchInput::lowrank;
  HooiOptions hooi;
};

struct BenchRow {
  std::size_t N = 0, D = 0, T = 0;
  Ranks ranks;
  double full_seconds = 0.0;        // median
  double factorized_seconds = 0.0;  // median, decomposition included
  double speedup = 0.0;
  std::size_t memory_full = 0;
  std::size_t memory_factorized = 0;
  double relative_difference = 0.0;  // between the two outputs on the last repetition
};

struct BenchReport {
  BenchOptions options;
  std::vector<BenchRow> rows;
};

BenchReport bench_forward(const std::vector<BenchSize>& sizes, const BenchOptions& options = {});

std::string bench_csv_header();
std::string bench_csv_row(const BenchRow& row);
void write_bench_table(std::ostream& os, const BenchReport& report);

}  // namespace sttgcn
