#include "sttgcn/data_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <string>
#include <string_view>

#include "sttgcn/errors.hpp"

namespace sttgcn {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool parse_double(std::string_view tok, double& out) {
  if (tok.empty()) return false;
  if (tok.front() == '+') tok.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && ptr == tok.data() + tok.size();
}

}  // namespace

Mat Scaler::descale(const Mat& m) const {
  Mat out = m;
  for (double& v : out.data()) v *= max;
  return out;
}

std::size_t WindowSet::nodes() const {
  if (!train.empty()) return train.front().input.dims().i1;
  if (!test.empty()) return test.front().input.dims().i1;
  return 0;
}

CsvHeader parse_csv_header(std::string_view name) {
  if (name == "auto") return CsvHeader::detect;
  if (name == "yes") return CsvHeader::present;
  if (name == "no") return CsvHeader::absent;
  throw ArgumentError("unknown header mode '" + std::string(name) + "' (expected auto, yes or no)");
}

Mat read_csv_matrix(const std::filesystem::path& path, CsvHeader header) {
  std::ifstream in(path);
  if (!in) throw DataError(path.string() + ": cannot open file");
  std::vector<double> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::string line;
  std::size_t line_no = 0;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto toks = split_commas(line);
    if (first_content) {
      first_content = false;
      double probe = 0.0;
      if (header == CsvHeader::present) continue;
      if (header == CsvHeader::detect && !parse_double(toks.front(), probe)) continue;
    }
    if (cols == 0) cols = toks.size();
    if (toks.size() != cols) {
      throw DataError(path.string() + ": line " + std::to_string(line_no) + " has " + std::to_string(toks.size()) +
                      " columns, expected " + std::to_string(cols));
    }
    for (std::size_t c = 0; c < toks.size(); ++c) {
      double v = 0.0;
      if (!parse_double(toks[c], v) || !std::isfinite(v)) {
        throw DataError(path.string() + ": line " + std::to_string(line_no) + ", column " + std::to_string(c + 1) +
                        ": cannot parse '" + std::string(toks[c]) + "' as a finite number");
      }
      values.push_back(v);
    }
    ++rows;
  }
  if (rows == 0) throw DataError(path.string() + ": no numeric rows");
  return Mat(rows, cols, std::move(values));
}

void write_csv_matrix(const std::filesystem::path& path, const Mat& m) {
  std::ofstream out(path);
  if (!out) throw DataError(path.string() + ": cannot write file");
  char buf[32];
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      const auto res = std::to_chars(buf, buf + sizeof buf, m(r, c));
      if (c) out << ',';
      out.write(buf, res.ptr - buf);
    }
    out << '\n';
  }
}

void validate_dataset(const RawDataset& raw) {
  if (raw.adjacency.rows() != raw.adjacency.cols()) {
    throw DataError("adjacency must be square, got " + std::to_string(raw.adjacency.rows()) + "x" +
                    std::to_string(raw.adjacency.cols()));
  }
  if (raw.adjacency.rows() != raw.speeds.cols()) {
    throw DataError("adjacency has " + std::to_string(raw.adjacency.rows()) + " nodes but the speed file has " +
                    std::to_string(raw.speeds.cols()) + " columns");
  }
  for (std::size_t r = 0; r < raw.speeds.rows(); ++r)
    for (std::size_t c = 0; c < raw.speeds.cols(); ++c)
      if (raw.speeds(r, c) < 0.0) {
        throw DataError("negative speed at data row " + std::to_string(r + 1) + ", column " + std::to_string(c + 1));
      }
  for (std::size_t r = 0; r < raw.adjacency.rows(); ++r)
    for (std::size_t c = 0; c < raw.adjacency.cols(); ++c)
      if (raw.adjacency(r, c) < 0.0) {
        throw DataError("negative adjacency entry at row " + std::to_string(r + 1) + ", column " +
                        std::to_string(c + 1));
      }
}

RawDataset load_dataset(const std::filesystem::path& speed_path, const std::filesystem::path& adjacency_path,
                        int interval_minutes, CsvHeader speed_header) {
  if (interval_minutes <= 0) throw ArgumentError("interval must be positive");
  RawDataset raw{read_csv_matrix(speed_path, speed_header), read_csv_matrix(adjacency_path), interval_minutes};
  validate_dataset(raw);
  return raw;
}

std::size_t window_count(std::size_t length, std::size_t t_in, std::size_t t_out) {
  const std::size_t need = t_in + t_out;
  return length + 1 > need ? length + 1 - need : 0;
}

WindowSet prepare_windows(const RawDataset& raw, std::size_t t_in, std::size_t t_out, double train_fraction,
                          std::optional<double> scaler_max) {
  if (t_in == 0 || t_out == 0) throw ArgumentError("t_in and t_out must be positive");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ArgumentError("train fraction must lie in (0, 1)");
  const std::size_t total = raw.steps();
  const std::size_t n = raw.nodes();
  if (t_in + t_out > total) {
    throw ArgumentError("need at least t_in + t_out = " + std::to_string(t_in + t_out) + " rows, dataset has " +
                        std::to_string(total));
  }

  WindowSet ws;
  ws.t_in = t_in;
  ws.t_out = t_out;
  ws.split_row = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(total)));

  double mx = 0.0;
  for (std::size_t r = 0; r < ws.split_row; ++r)
    for (std::size_t c = 0; c < n; ++c) mx = std::max(mx, raw.speeds(r, c));
  ws.scaler.max = mx > 0.0 ? mx : 1.0;
  if (scaler_max) {
    if (!(*scaler_max > 0.0) || !std::isfinite(*scaler_max)) throw ArgumentError("scaler maximum must be positive");
    ws.scaler.max = *scaler_max;
  }

  const auto build = [&](std::size_t begin, std::size_t end, std::vector<Window>& out) {
    const std::size_t count = window_count(end - begin, t_in, t_out);
    out.reserve(count);
    for (std::size_t w = 0; w < count; ++w) {
      const std::size_t first = begin + w;
      Window win{Tensor3({n, 1, t_in}), Mat(n, t_out), first + t_in - 1};
      for (std::size_t t = 0; t < t_in; ++t)
        for (std::size_t k = 0; k < n; ++k) win.input(k, 0, t) = ws.scaler.scale(raw.speeds(first + t, k));
      for (std::size_t h = 0; h < t_out; ++h)
        for (std::size_t k = 0; k < n; ++k) win.target(k, h) = ws.scaler.scale(raw.speeds(first + t_in + h, k));
      out.push_back(std::move(win));
    }
  };
  build(0, ws.split_row, ws.train);
  build(ws.split_row, total, ws.test);
  return ws;
}

RawDataset add_gaussian_noise(const RawDataset& raw, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ArgumentError("noise sigma must be a nonnegative number");
  RawDataset out = raw;
  if (sigma == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, sigma);
  for (double& v : out.speeds.data()) v += dist(rng);
  return out;
}

std::vector<Mat> ha_baseline(const WindowSet& windows) {
  if (windows.test.empty()) throw ArgumentError("HA baseline needs at least one test window");
  std::vector<Mat> preds;
  preds.reserve(windows.test.size());
  for (const Window& w : windows.test) {
    const Dims3& d = w.input.dims();
    Mat p(d.i1, windows.t_out);
    for (std::size_t k = 0; k < d.i1; ++k) {
      double s = 0.0;
      for (std::size_t t = 0; t < d.i3; ++t) s += w.input(k, 0, t);
      const double mean = windows.scaler.descale(s / static_cast<double>(d.i3));
      for (std::size_t h = 0; h < windows.t_out; ++h) p(k, h) = mean;
    }
    preds.push_back(std::move(p));
  }
  return preds;
}

Mat ring_adjacency(std::size_t n) {
  Mat a(n, n);
  if (n < 2) return a;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t next = (k + 1) % n;
    a(k, next) = 1.0;
    a(next, k) = 1.0;
  }
  return a;
}

RawDataset make_synthetic_dataset(const SyntheticOptions& o) {
  if (o.nodes == 0 || o.steps == 0 || !(o.period > 0.0)) throw ArgumentError("invalid synthetic dataset options");
  std::mt19937_64 rng(o.seed);
  std::normal_distribution<double> noise(0.0, o.noise_std > 0.0 ? o.noise_std : 1.0);
  Mat speeds(o.steps, o.nodes);
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t t = 0; t < o.steps; ++t)
    for (std::size_t k = 0; k < o.nodes; ++k) {
      const double phase = two_pi * static_cast<double>(t) / o.period +
                           two_pi * static_cast<double>(k) / static_cast<double>(o.nodes);
      const double eps = o.noise_std > 0.0 ? noise(rng) : 0.0;
      speeds(t, k) = std::max(0.0, o.base + o.amplitude * std::sin(phase) + eps);
    }
  return RawDataset{std::move(speeds), ring_adjacency(o.nodes), 15};
}

}  // namespace sttgcn
