#pragma once

#include <optional>
#include <span>
#include <string>

namespace sttgcn {

/// Five forecast scores over a flattened set of (prediction, target) entries.
/// Accuracy is undefined for an all-zero target; R² and var for a constant target.
struct MetricsReport {
  double rmse = 0.0;
  double mae = 0.0;
  std::optional<double> accuracy;
  std::optional<double> r2;
  std::optional<double> var;
  std::size_t count = 0;
};

MetricsReport compute_metrics(std::span<const double> y, std::span<const double> y_hat);

/// Aligned two-column table, one metric per line.
std::string format_metrics_table(const MetricsReport& m, const std::string& title = {});
/// `key=value` lines; undefined scores print as `undefined`.
std::string format_metrics_kv(const MetricsReport& m, const std::string& prefix = {});

}  // namespace sttgcn
