#include <doctest.h>

#include <sstream>

#include "sttgcn/bench.hpp"
#include "sttgcn/errors.hpp"

using namespace sttgcn;

TEST_CASE("memory footprint") {
  CHECK(memory_footprint(156, 128, 12, 13, 12, 4) == std::pair<std::size_t, std::size_t>{239616, 4236});
  CHECK(memory_footprint(1, 1, 1, 1, 1, 1) == std::pair<std::size_t, std::size_t>{1, 4});
  for (std::size_t n : {2, 5, 9})
    for (std::size_t d : {1, 3, 8})
      for (std::size_t t : {1, 4, 12}) {
        const auto [full, fact] = memory_footprint(n, d, t, n, d, t);
        CHECK(fact >= full);
      }
  CHECK_THROWS_AS(memory_footprint(0, 1, 1, 1, 1, 1), ArgumentError);
  CHECK_THROWS_AS(memory_footprint(1, 1, 1, 1, 0, 1), ArgumentError);
}

TEST_CASE("names") {
  for (RankRule r : {RankRule::full, RankRule::sqrt, RankRule::cbrt}) CHECK(parse_rank_rule(rank_rule_name(r)) == r);
  for (BenchInput b : {BenchInput::lowrank, BenchInput::gaussian}) CHECK(parse_bench_input(bench_input_name(b)) == b);
  CHECK_THROWS_AS(parse_rank_rule("log"), ArgumentError);
  CHECK_THROWS_AS(parse_bench_input("uniform"), ArgumentError);
}

TEST_CASE("small benchmark") {
  BenchOptions o;
  o.repetitions = 3;
  const BenchReport r = bench_forward({{16, 8, 6}, {9, 4, 4}}, o);
  REQUIRE(r.rows.size() == 2);
  const BenchRow& row = r.rows[0];
  CHECK(row.N == 16);
  CHECK(row.ranks == Ranks{4, 3, 3});
  CHECK(row.full_seconds > 0.0);
  CHECK(row.factorized_seconds > 0.0);
  CHECK(row.speedup == doctest::Approx(row.full_seconds / row.factorized_seconds));
  CHECK(row.memory_full == 16 * 8 * 6);
  CHECK(row.memory_factorized == memory_footprint(16, 8, 6, 4, 3, 3).second);
  CHECK(row.relative_difference < 0.2);

  o.rule = RankRule::full;
  o.input = BenchInput::gaussian;
  const BenchReport exact = bench_forward({{6, 3, 4}}, o);
  CHECK(exact.rows[0].relative_difference <= 1e-8);

  std::ostringstream table;
  write_bench_table(table, r);
  CHECK(table.str().find("16") != std::string::npos);
  CHECK(bench_csv_row(row).find(',') != std::string::npos);
  CHECK(bench_csv_header().find("speedup") != std::string::npos);

  o.repetitions = 0;
  CHECK_THROWS_AS(bench_forward({{4, 2, 2}}, o), ArgumentError);
}
