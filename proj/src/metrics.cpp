#include "sttgcn/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "sttgcn/errors.hpp"

namespace sttgcn {
namespace {

std::string fmt(const std::optional<double>& v) {
  if (!v) return "undefined";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", *v);
  return buf;
}

}  // namespace

MetricsReport compute_metrics(std::span<const double> y, std::span<const double> y_hat) {
  if (y.size() != y_hat.size()) throw ArgumentError("metrics: target and prediction lengths differ");
  if (y.empty()) throw ArgumentError("metrics: empty input");
  const auto n = static_cast<double>(y.size());

  double sq = 0.0;
  double abs_sum = 0.0;
  double y_sq = 0.0;
  double y_mean = 0.0;
  double r_mean = 0.0;  // residual y − ŷ
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!std::isfinite(y[i]) || !std::isfinite(y_hat[i])) throw DataError("metrics: non-finite value");
    const double r = y[i] - y_hat[i];
    sq += r * r;
    abs_sum += std::abs(r);
    y_sq += y[i] * y[i];
    y_mean += y[i];
    r_mean += r;
  }
  y_mean /= n;
  r_mean /= n;

  double ss_tot = 0.0;
  double r_var = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double dy = y[i] - y_mean;
    const double dr = (y[i] - y_hat[i]) - r_mean;
    ss_tot += dy * dy;
    r_var += dr * dr;
  }

  MetricsReport m;
  m.count = y.size();
  m.rmse = std::sqrt(sq / n);
  m.mae = abs_sum / n;
  if (y_sq > 0.0) m.accuracy = 1.0 - std::sqrt(sq) / std::sqrt(y_sq);
  if (ss_tot > 0.0) {
    m.r2 = 1.0 - sq / ss_tot;
    m.var = 1.0 - (r_var / n) / (ss_tot / n);
  }
  return m;
}

std::string format_metrics_table(const MetricsReport& m, const std::string& title) {
  std::ostringstream os;
  if (!title.empty()) os << title << '\n';
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", m.rmse);
  os << "  RMSE      " << buf << '\n';
  std::snprintf(buf, sizeof buf, "%.6f", m.mae);
  os << "  MAE       " << buf << '\n';
  os << "  Accuracy  " << fmt(m.accuracy) << '\n';
  os << "  R2        " << fmt(m.r2) << '\n';
  os << "  var       " << fmt(m.var) << '\n';
  return os.str();
}

std::string format_metrics_kv(const MetricsReport& m, const std::string& prefix) {
  std::ostringstream os;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", m.rmse);
  os << prefix << "rmse=" << buf << '\n';
  std::snprintf(buf, sizeof buf, "%.10g", m.mae);
  os << prefix << "mae=" << buf << '\n';
  const auto opt = [&](const char* key, const std::optional<double>& v) {
    if (v) {
      std::snprintf(buf, sizeof buf, "%.10g", *v);
      os << prefix << key << '=' << buf << '\n';
    } else {
      os << prefix << key << "=undefined\n";
    }
  };
  opt("accuracy", m.accuracy);
  opt("r2", m.r2);
  opt("var", m.var);
  os << prefix << "count=" << m.count << '\n';
  return os.str();
}

}  // namespace sttgcn
