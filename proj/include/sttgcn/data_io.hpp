#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "sttgcn/tensor.hpp"

namespace sttgcn {

struct RawDataset {
  Mat speeds;     // T_total × N, one row per timestamp
  Mat adjacency;  // N × N
  int interval_minutes = 15;

  std::size_t steps() const { return speeds.rows(); }
  std::size_t nodes() const { return speeds.cols(); }
};

/// Max-value scaling fitted on the training rows.
struct Scaler {
  double max = 1.0;
  double scale(double v) const { return v / max; }
  double descale(double v) const { return v * max; }
  Mat descale(const Mat& m) const;
};

struct Window {
  Tensor3 input;  // N×1×t_in, scaled
  Mat target;     // N×t_out, scaled
  std::size_t end_row = 0;  // last input row
};

struct WindowSet {
  std::vector<Window> train;
  std::vector<Window> test;
  Scaler scaler;
  std::size_t t_in = 0;
  std::size_t t_out = 0;
  std::size_t split_row = 0;  // first test row
  std::size_t nodes() const;
};

/// Header handling: `detect` skips a first row whose first token is not numeric; files whose
/// header holds numeric ids (road ids, say) need `present`.
enum class CsvHeader { detect, present, absent };
CsvHeader parse_csv_header(std::string_view name);  // auto, yes, no

/// Reads a numeric CSV. Errors name the file, row and column.
Mat read_csv_matrix(const std::filesystem::path& path, CsvHeader header = CsvHeader::detect);
void write_csv_matrix(const std::filesystem::path& path, const Mat& m);

RawDataset load_dataset(const std::filesystem::path& speed_path, const std::filesystem::path& adjacency_path,
                        int interval_minutes, CsvHeader speed_header = CsvHeader::detect);
/// Checks the dataset invariants (finite, nonnegative speeds; square adjacency matching N).
void validate_dataset(const RawDataset& raw);

/// Number of complete windows inside a segment of `length` rows.
std::size_t window_count(std::size_t length, std::size_t t_in, std::size_t t_out);

/// Chronological split at floor(train_fraction·T_total); stride-1 windows entirely inside one
/// segment; scaling by the training maximum unless `scaler_max` is given (e.g. from a checkpoint).
WindowSet prepare_windows(const RawDataset& raw, std::size_t t_in, std::size_t t_out, double train_fraction,
                          std::optional<double> scaler_max = std::nullopt);

/// Adds independent N(0, σ²) draws to every speed entry. σ = 0 returns an exact copy.
RawDataset add_gaussian_noise(const RawDataset& raw, double sigma, std::uint64_t seed);

/// Historical-average forecast per test window: each node's input mean repeated over the
/// horizons, in original units.
std::vector<Mat> ha_baseline(const WindowSet& windows);

struct SyntheticOptions {
  std::size_t nodes = 20;
  std::size_t steps = 2000;
  double base = 40.0;
  double amplitude = 10.0;
  double period = 48.0;
  double noise_std = 0.05;
  std::uint64_t seed = 7;
};

/// Phase-shifted sinusoids on a ring graph: v(t,n) = base + amplitude·sin(2πt/period + 2πn/N) + noise.
RawDataset make_synthetic_dataset(const SyntheticOptions& options = {});
/// Ring adjacency with unit edges between neighbouring nodes.
Mat ring_adjacency(std::size_t n);

}  // namespace sttgcn
