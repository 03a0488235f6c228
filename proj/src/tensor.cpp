#include "sttgcn/tensor.hpp"

#include "eigen_view.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sttgcn {
namespace {

using detail::view;
using ColMatMap = Eigen::Map<Eigen::MatrixXd>;
using ConstColMatMap = Eigen::Map<const Eigen::MatrixXd>;

void check_mode(int mode) {
  if (mode < 1 || mode > 3) {
    throw ArgumentError("tensor mode must be 1, 2 or 3, got " + std::to_string(mode));
  }
}

Dims3 replace_dim(Dims3 d, int mode, std::size_t extent) {
  switch (mode) {
    case 1: d.i1 = extent; break;
    case 2: d.i2 = extent; break;
    default: d.i3 = extent; break;
  }
  return d;
}

bool finite_span(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

std::string dims_str(const Dims3& d) {
  return std::to_string(d.i1) + "x" + std::to_string(d.i2) + "x" + std::to_string(d.i3);
}

}  // namespace

// ---------------------------------------------------------------- Mat

Mat::Mat(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

Mat::Mat(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ArgumentError("matrix data length " + std::to_string(data_.size()) + " does not match " +
                        std::to_string(rows_) + "x" + std::to_string(cols_));
  }
  if (!finite_span(data_)) throw DataError("matrix contains non-finite values");
}

Mat Mat::identity(std::size_t n) {
  Mat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Mat Mat::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.front().size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ArgumentError("ragged rows in matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Mat(r, c, std::move(data));
}

Mat Mat::transpose() const {
  Mat t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

double Mat::frobenius_norm() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return std::sqrt(s);
}

Mat matmul(const Mat& a, const Mat& b) {
  if (a.cols() != b.rows()) {
    throw ArgumentError("matmul shape mismatch: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                        " times " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  Mat out(a.rows(), b.cols());
  if (out.empty() || a.cols() == 0) return out;
  view(out).noalias() = view(a) * view(b);
  return out;
}

Mat matmul_tn(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows()) throw ArgumentError("matmul_tn shape mismatch");
  Mat out(a.cols(), b.cols());
  if (out.empty() || a.rows() == 0) return out;
  view(out).noalias() = view(a).transpose() * view(b);
  return out;
}

Mat matmul_nt(const Mat& a, const Mat& b) {
  if (a.cols() != b.cols()) throw ArgumentError("matmul_nt shape mismatch");
  Mat out(a.rows(), b.rows());
  if (out.empty() || a.cols() == 0) return out;
  view(out).noalias() = view(a) * view(b).transpose();
  return out;
}

Mat operator+(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ArgumentError("matrix sum shape mismatch");
  Mat out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += b.data()[i];
  return out;
}

Mat operator-(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ArgumentError("matrix difference shape mismatch");
  Mat out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] -= b.data()[i];
  return out;
}

Mat operator*(double s, const Mat& a) {
  Mat out = a;
  for (double& v : out.data()) v *= s;
  return out;
}

// ---------------------------------------------------------------- Tensor3

std::size_t Dims3::operator[](int mode) const {
  check_mode(mode);
  return mode == 1 ? i1 : (mode == 2 ? i2 : i3);
}

Tensor3::Tensor3(Dims3 dims) : dims_(dims), data_(dims.size(), 0.0) {}

Tensor3::Tensor3(Dims3 dims, std::vector<double> data) : dims_(dims), data_(std::move(data)) {
  if (data_.size() != dims_.size()) {
    throw ArgumentError("tensor data length " + std::to_string(data_.size()) + " does not match dims " +
                        dims_str(dims_));
  }
  if (!finite_span(data_)) throw DataError("tensor contains non-finite values");
}

double Tensor3::squared_norm() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return s;
}

double Tensor3::frobenius_norm() const { return std::sqrt(squared_norm()); }

bool Tensor3::all_finite() const { return finite_span(data_); }

Mat Tensor3::slice1(std::size_t k) const {
  Mat m(dims_.i2, dims_.i3);
  for (std::size_t j = 0; j < dims_.i2; ++j)
    for (std::size_t t = 0; t < dims_.i3; ++t) m(j, t) = (*this)(k, j, t);
  return m;
}

void Tensor3::set_slice1(std::size_t k, const Mat& m) {
  if (m.rows() != dims_.i2 || m.cols() != dims_.i3) throw ArgumentError("slice shape mismatch");
  for (std::size_t j = 0; j < dims_.i2; ++j)
    for (std::size_t t = 0; t < dims_.i3; ++t) (*this)(k, j, t) = m(j, t);
}

Tensor3& Tensor3::operator+=(const Tensor3& other) {
  if (dims_ != other.dims_) throw ArgumentError("tensor sum shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Tensor3& Tensor3::operator-=(const Tensor3& other) {
  if (dims_ != other.dims_) throw ArgumentError("tensor difference shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Tensor3& Tensor3::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Tensor3 operator+(Tensor3 a, const Tensor3& b) { return a += b; }
Tensor3 operator-(Tensor3 a, const Tensor3& b) { return a -= b; }
Tensor3 operator*(double s, Tensor3 a) { return a *= s; }

double relative_error(const Tensor3& a, const Tensor3& b) {
  if (a.dims() != b.dims()) throw ArgumentError("relative_error shape mismatch");
  double diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    diff += d * d;
  }
  const double ref = b.frobenius_norm();
  return ref > 0.0 ? std::sqrt(diff) / ref : std::sqrt(diff);
}

double relative_error(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ArgumentError("relative_error shape mismatch");
  double diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    diff += d * d;
  }
  const double ref = b.frobenius_norm();
  return ref > 0.0 ? std::sqrt(diff) / ref : std::sqrt(diff);
}

// ---------------------------------------------------------------- matricization

Mat unfold(const Tensor3& x, int mode) {
  check_mode(mode);
  const Dims3& d = x.dims();
  switch (mode) {
    case 1: {
      // Column c = i2 + I2*i3, which is exactly the storage order.
      Mat m(d.i1, d.i2 * d.i3);
      for (std::size_t c = 0; c < d.i2 * d.i3; ++c)
        for (std::size_t r = 0; r < d.i1; ++r) m(r, c) = x.data()[r + d.i1 * c];
      return m;
    }
    case 2: {
      Mat m(d.i2, d.i1 * d.i3);
      for (std::size_t k = 0; k < d.i3; ++k)
        for (std::size_t j = 0; j < d.i2; ++j)
          for (std::size_t i = 0; i < d.i1; ++i) m(j, i + d.i1 * k) = x(i, j, k);
      return m;
    }
    default: {
      Mat m(d.i3, d.i1 * d.i2);
      for (std::size_t k = 0; k < d.i3; ++k)
        for (std::size_t j = 0; j < d.i2; ++j)
          for (std::size_t i = 0; i < d.i1; ++i) m(k, i + d.i1 * j) = x(i, j, k);
      return m;
    }
  }
}

Tensor3 fold(const Mat& m, int mode, Dims3 dims) {
  check_mode(mode);
  const std::size_t rows = dims[mode];
  const std::size_t cols = dims.size() / std::max<std::size_t>(rows, 1);
  if (m.rows() != rows || m.cols() * rows != dims.size() || (rows == 0 && m.cols() != cols)) {
    throw ArgumentError("fold: matrix " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                        " does not match dims " + dims_str(dims) + " at mode " + std::to_string(mode));
  }
  Tensor3 x(dims);
  for (std::size_t k = 0; k < dims.i3; ++k)
    for (std::size_t j = 0; j < dims.i2; ++j)
      for (std::size_t i = 0; i < dims.i1; ++i) {
        switch (mode) {
          case 1: x(i, j, k) = m(i, j + dims.i2 * k); break;
          case 2: x(i, j, k) = m(j, i + dims.i1 * k); break;
          default: x(i, j, k) = m(k, i + dims.i1 * j); break;
        }
      }
  return x;
}

// ---------------------------------------------------------------- products

void mode_product_accumulate(const Tensor3& x, const Mat& u, int mode, Tensor3& out) {
  check_mode(mode);
  const Dims3& d = x.dims();
  if (u.cols() != d[mode]) {
    throw ArgumentError("mode_product: matrix has " + std::to_string(u.cols()) + " columns but mode " +
                        std::to_string(mode) + " of tensor " + dims_str(d) + " has extent " +
                        std::to_string(d[mode]));
  }
  const Dims3 od = replace_dim(d, mode, u.rows());
  if (out.dims() != od) throw ArgumentError("mode_product_accumulate: output shape mismatch");
  if (od.size() == 0 || d.size() == 0) return;

  const auto uv = view(u);
  const auto e = [](std::size_t v) { return static_cast<Eigen::Index>(v); };
  switch (mode) {
    case 1: {
      ConstColMatMap xm(x.data().data(), e(d.i1), e(d.i2 * d.i3));
      ColMatMap om(out.data().data(), e(od.i1), e(od.i2 * od.i3));
      om.noalias() += uv * xm;
      break;
    }
    case 2: {
      for (std::size_t k = 0; k < d.i3; ++k) {
        ConstColMatMap xs(x.data().data() + d.i1 * d.i2 * k, e(d.i1), e(d.i2));
        ColMatMap os(out.data().data() + od.i1 * od.i2 * k, e(od.i1), e(od.i2));
        os.noalias() += xs * uv.transpose();
      }
      break;
    }
    default: {
      ConstColMatMap xm(x.data().data(), e(d.i1 * d.i2), e(d.i3));
      ColMatMap om(out.data().data(), e(od.i1 * od.i2), e(od.i3));
      om.noalias() += xm * uv.transpose();
      break;
    }
  }
}

Tensor3 mode_product(const Tensor3& x, const Mat& u, int mode) {
  check_mode(mode);
  if (u.cols() != x.dims()[mode]) {
    throw ArgumentError("mode_product: matrix has " + std::to_string(u.cols()) + " columns but mode " +
                        std::to_string(mode) + " of tensor " + dims_str(x.dims()) + " has extent " +
                        std::to_string(x.dims()[mode]));
  }
  Tensor3 out(replace_dim(x.dims(), mode, u.rows()));
  mode_product_accumulate(x, u, mode, out);
  return out;
}

Tensor3 batch_mode3_product(const Tensor3& a, const Tensor3& b) {
  const Dims3& da = a.dims();
  const Dims3& db = b.dims();
  if (da.i1 != db.i1) {
    throw ArgumentError("batch_mode3_product: first dimensions differ (" + std::to_string(da.i1) + " vs " +
                        std::to_string(db.i1) + ")");
  }
  if (da.i3 != db.i2) {
    throw ArgumentError("batch_mode3_product: inner dimensions differ (" + std::to_string(da.i3) + " vs " +
                        std::to_string(db.i2) + ")");
  }
  const std::size_t n = da.i1;
  Tensor3 out({n, da.i2, db.i3});
  const double* ap = a.data().data();
  const double* bp = b.data().data();
  double* op = out.data().data();
  // out[k,d,s] = sum_t a[k,d,t] * b[k,t,s]; the node index is contiguous in all three.
  for (std::size_t s = 0; s < db.i3; ++s) {
    for (std::size_t t = 0; t < da.i3; ++t) {
      const double* bcol = bp + n * (t + db.i2 * s);
      for (std::size_t dd = 0; dd < da.i2; ++dd) {
        const double* acol = ap + n * (dd + da.i2 * t);
        double* ocol = op + n * (dd + da.i2 * s);
        for (std::size_t k = 0; k < n; ++k) ocol[k] += acol[k] * bcol[k];
      }
    }
  }
  return out;
}

Tensor3 tucker_reconstruct(const Tensor3& core, const Mat& u1, const Mat& u2, const Mat& u3) {
  const Dims3& c = core.dims();
  if (u1.cols() != c.i1 || u2.cols() != c.i2 || u3.cols() != c.i3) {
    throw ArgumentError("tucker_reconstruct: factor columns do not match core dims " + dims_str(c));
  }
  return mode_product(mode_product(mode_product(core, u1, 1), u2, 2), u3, 3);
}

}  // namespace sttgcn
