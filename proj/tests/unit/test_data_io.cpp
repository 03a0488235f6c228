#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "sttgcn/data_io.hpp"
#include "sttgcn/errors.hpp"

using namespace sttgcn;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name, const std::string& text) {
  const fs::path dir = fs::temp_directory_path() / "sttgcn_data_io_test";
  fs::create_directories(dir);
  const fs::path p = dir / name;
  std::ofstream(p) << text;
  return p;
}

RawDataset ramp(std::size_t steps, std::size_t nodes) {
  RawDataset r;
  r.speeds = Mat(steps, nodes);
  for (std::size_t t = 0; t < steps; ++t)
    for (std::size_t n = 0; n < nodes; ++n) r.speeds(t, n) = static_cast<double>(t + 1 + 100 * n);
  r.adjacency = ring_adjacency(nodes);
  return r;
}

}  // namespace

TEST_CASE("csv reading") {
  const Mat m = read_csv_matrix(temp_file("plain.csv", "1,2.5,3\n4,5,-6e-1\n"));
  REQUIRE(m.rows() == 2);
  REQUIRE(m.cols() == 3);
  CHECK(m(0, 1) == 2.5);
  CHECK(m(1, 2) == -0.6);
  const Mat h = read_csv_matrix(temp_file("header.csv", "a,b\n1,2\n3,4\n"));
  CHECK(h.rows() == 2);
  CHECK(h(1, 0) == 3.0);
  const fs::path ids = temp_file("ids.csv", "90217,90218\n1,2\n");
  CHECK(read_csv_matrix(ids).rows() == 2);
  CHECK(read_csv_matrix(ids, CsvHeader::present).rows() == 1);
  CHECK(read_csv_matrix(ids, CsvHeader::present)(0, 1) == 2.0);
  CHECK(read_csv_matrix(temp_file("hdr_no.csv", "1,2\n"), CsvHeader::absent).rows() == 1);
  CHECK_THROWS_AS(read_csv_matrix(temp_file("hdr_abs.csv", "a,b\n1,2\n"), CsvHeader::absent), DataError);
  CHECK(parse_csv_header("yes") == CsvHeader::present);
  CHECK_THROWS_AS(parse_csv_header("maybe"), ArgumentError);
  CHECK_THROWS_AS(read_csv_matrix(temp_file("ragged.csv", "1,2\n3\n")), DataError);
  CHECK_THROWS_AS(read_csv_matrix(temp_file("text.csv", "1,2\n3,x\n")), DataError);
  CHECK_THROWS_AS(read_csv_matrix("/nonexistent/file.csv"), DataError);
  try {
    read_csv_matrix(temp_file("where.csv", "1,2\n3,oops\n"));
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("where.csv") != std::string::npos);
  }
}

TEST_CASE("csv round trip") {
  Mat m = Mat::from_rows({{0.1, 1e-300}, {1.0 / 3.0, 12345.678}});
  const fs::path p = fs::temp_directory_path() / "sttgcn_data_io_test" / "rt.csv";
  write_csv_matrix(p, m);
  CHECK(read_csv_matrix(p) == m);
}

TEST_CASE("dataset validation") {
  const fs::path speed = temp_file("speed.csv", "1,2,3\n4,5,6\n");
  CHECK_THROWS_AS(load_dataset(speed, temp_file("adj23.csv", "0,1,0\n1,0,1\n"), 15), DataError);
  CHECK_THROWS_AS(load_dataset(speed, temp_file("adj22.csv", "0,1\n1,0\n"), 15), DataError);
  CHECK_THROWS_AS(load_dataset(temp_file("neg.csv", "1,-2,3\n4,5,6\n"),
                               temp_file("adj33.csv", "0,1,0\n1,0,1\n0,1,0\n"), 15),
                  DataError);
  const RawDataset ok = load_dataset(speed, temp_file("adj33b.csv", "0,1,0\n1,0,1\n0,1,0\n"), 5);
  CHECK(ok.nodes() == 3);
  CHECK(ok.steps() == 2);
  CHECK(ok.interval_minutes == 5);
}

TEST_CASE("window counts and split") {
  CHECK(window_count(100, 12, 1) == 88);
  CHECK(window_count(13, 12, 1) == 1);
  CHECK(window_count(12, 12, 1) == 0);
  CHECK(window_count(3, 12, 1) == 0);

  const RawDataset r = ramp(100, 3);
  const WindowSet ws = prepare_windows(r, 12, 3, 0.8);
  CHECK(ws.split_row == 80);
  CHECK(ws.train.size() == window_count(80, 12, 3));
  CHECK(ws.test.size() == window_count(20, 12, 3));
  CHECK(ws.scaler.max == 80.0 + 200.0);
  for (const Window& w : ws.train) CHECK(w.end_row + 3 < 80);
  for (const Window& w : ws.test) CHECK(w.end_row >= 80 + 11);

  // values and ordering of the first window
  const Window& w0 = ws.train[0];
  CHECK(w0.input.dims().i1 == 3);
  CHECK(w0.input.dims().i3 == 12);
  CHECK(ws.scaler.descale(w0.input(1, 0, 0)) == doctest::Approx(101.0));
  CHECK(ws.scaler.descale(w0.input(1, 0, 11)) == doctest::Approx(112.0));
  CHECK(ws.scaler.descale(w0.target(1, 0)) == doctest::Approx(113.0));
  CHECK(ws.scaler.descale(w0.target(1, 2)) == doctest::Approx(115.0));

  CHECK_THROWS_AS(prepare_windows(r, 90, 20, 0.8), ArgumentError);
  CHECK_THROWS_AS(prepare_windows(r, 12, 1, 1.0), ArgumentError);
  CHECK_THROWS_AS(prepare_windows(r, 12, 1, 0.0), ArgumentError);
  CHECK_THROWS_AS(prepare_windows(r, 12, 1, 0.8, 0.0), ArgumentError);
  CHECK(prepare_windows(r, 12, 1, 0.8, 50.0).scaler.max == 50.0);
}

TEST_CASE("constant series and scaling") {
  RawDataset c = ramp(30, 2);
  for (double& v : c.speeds.data()) v = 7.0;
  const WindowSet ws = prepare_windows(c, 4, 1, 0.5);
  for (const Window& w : ws.train) {
    for (double v : w.input.data()) CHECK(v == 1.0);
    for (double v : w.target.data()) CHECK(v == 1.0);
  }
  for (double& v : c.speeds.data()) v = 0.0;
  CHECK(prepare_windows(c, 4, 1, 0.5).scaler.max == 1.0);

  Scaler s{37.5};
  for (double v : {0.0, 1.0, 12.25, 80.0}) CHECK(s.descale(s.scale(v)) == doctest::Approx(v).epsilon(1e-15));
}

TEST_CASE("gaussian noise") {
  RawDataset base;
  base.speeds = Mat(1000, 1000);
  base.adjacency = Mat(1000, 1000);
  const RawDataset noisy = add_gaussian_noise(base, 1.0, 99);
  double sum = 0.0;
  double sq = 0.0;
  for (double v : noisy.speeds.data()) {
    sum += v;
    sq += v * v;
  }
  const double n = 1e6;
  const double mean = sum / n;
  const double sd = std::sqrt(sq / n - mean * mean);
  CHECK(std::abs(mean) <= 0.005);
  CHECK(std::abs(sd - 1.0) <= 0.01);
  CHECK(add_gaussian_noise(base, 1.0, 99).speeds == noisy.speeds);
  CHECK_FALSE(add_gaussian_noise(base, 1.0, 100).speeds == noisy.speeds);

  const RawDataset r = ramp(20, 3);
  CHECK(add_gaussian_noise(r, 0.0, 5).speeds == r.speeds);
  CHECK_THROWS_AS(add_gaussian_noise(r, -1.0, 5), ArgumentError);
}

TEST_CASE("historical average") {
  RawDataset r;
  r.speeds = Mat(30, 1);
  for (std::size_t t = 0; t < 30; ++t) r.speeds(t, 0) = static_cast<double>(t % 15 + 1);
  r.adjacency = Mat(1, 1);
  // test segment starts at row 15, so the first test window sees 1..12
  const WindowSet ws = prepare_windows(r, 12, 2, 0.5);
  const std::vector<Mat> ha = ha_baseline(ws);
  REQUIRE(ha.size() == ws.test.size());
  CHECK(ha[0](0, 0) == doctest::Approx(6.5));
  CHECK(ha[0](0, 1) == doctest::Approx(6.5));
  WindowSet empty = ws;
  empty.test.clear();
  CHECK_THROWS_AS(ha_baseline(empty), ArgumentError);
}

TEST_CASE("synthetic data") {
  const RawDataset a = make_synthetic_dataset();
  CHECK(a.nodes() == 20);
  CHECK(a.steps() == 2000);
  CHECK(a.adjacency == ring_adjacency(20));
  CHECK(make_synthetic_dataset().speeds == a.speeds);
  for (double v : a.speeds.data()) CHECK(v >= 0.0);
  CHECK(a.speeds(0, 0) == doctest::Approx(40.0).epsilon(0.01));
  const Mat ring = ring_adjacency(4);
  CHECK(ring(0, 1) == 1.0);
  CHECK(ring(0, 3) == 1.0);
  CHECK(ring(0, 2) == 0.0);
  CHECK(ring(0, 0) == 0.0);
}
