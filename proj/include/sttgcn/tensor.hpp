#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "sttgcn/errors.hpp"

namespace sttgcn {

/// Dense row-major real matrix.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols);
  /// Takes ownership of `data` (row-major); throws if the length is wrong or any entry is non-finite.
  Mat(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Mat identity(std::size_t n);
  static Mat from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  Mat transpose() const;
  double frobenius_norm() const;

  friend bool operator==(const Mat&, const Mat&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Mat matmul(const Mat& a, const Mat& b);
/// aᵀ·b without materializing the transpose.
Mat matmul_tn(const Mat& a, const Mat& b);
/// a·bᵀ.
Mat matmul_nt(const Mat& a, const Mat& b);
Mat operator+(const Mat& a, const Mat& b);
Mat operator-(const Mat& a, const Mat& b);
Mat operator*(double s, const Mat& a);

struct Dims3 {
  std::size_t i1 = 0;
  std::size_t i2 = 0;
  std::size_t i3 = 0;

  std::size_t size() const { return i1 * i2 * i3; }
  /// Extent along a one-based mode.
  std::size_t operator[](int mode) const;
  friend bool operator==(const Dims3&, const Dims3&) = default;
};

/// Dense 3-mode tensor. Element (i1,i2,i3) lives at i1 + I1*(i2 + I2*i3).
class Tensor3 {
 public:
  Tensor3() = default;
  explicit Tensor3(Dims3 dims);
  Tensor3(Dims3 dims, std::vector<double> data);

  const Dims3& dims() const { return dims_; }
  std::size_t size() const { return data_.size(); }

  std::size_t offset(std::size_t i1, std::size_t i2, std::size_t i3) const {
    return i1 + dims_.i1 * (i2 + dims_.i2 * i3);
  }
  double& operator()(std::size_t i1, std::size_t i2, std::size_t i3) { return data_[offset(i1, i2, i3)]; }
  double operator()(std::size_t i1, std::size_t i2, std::size_t i3) const {
    return data_[offset(i1, i2, i3)];
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  double frobenius_norm() const;
  double squared_norm() const;
  bool all_finite() const;

  /// Node slice k (I2×I3 matrix).
  Mat slice1(std::size_t k) const;
  void set_slice1(std::size_t k, const Mat& m);

  Tensor3& operator+=(const Tensor3& other);
  Tensor3& operator-=(const Tensor3& other);
  Tensor3& operator*=(double s);

  friend bool operator==(const Tensor3&, const Tensor3&) = default;

 private:
  Dims3 dims_{};
  std::vector<double> data_;
};

Tensor3 operator+(Tensor3 a, const Tensor3& b);
Tensor3 operator-(Tensor3 a, const Tensor3& b);
Tensor3 operator*(double s, Tensor3 a);

/// ‖a − b‖_F / ‖b‖_F (absolute error when ‖b‖_F is zero).
double relative_error(const Tensor3& a, const Tensor3& b);
double relative_error(const Mat& a, const Mat& b);

/// Mode-n matricization with Kolda–Bader column ordering (lower remaining mode varies fastest).
Mat unfold(const Tensor3& x, int mode);
/// Inverse of unfold for the given mode and target dims.
Tensor3 fold(const Mat& m, int mode, Dims3 dims);

/// x ×_mode u, with u of shape J × I_mode.
Tensor3 mode_product(const Tensor3& x, const Mat& u, int mode);
/// out += x ×_mode u; `out` must already have the product's shape.
void mode_product_accumulate(const Tensor3& x, const Mat& u, int mode, Tensor3& out);

/// Per-node product: result[k] = a[k] · b[k] for a: N×D×T, b: N×T×T2.
Tensor3 batch_mode3_product(const Tensor3& a, const Tensor3& b);

/// core ×₁ u1 ×₂ u2 ×₃ u3.
Tensor3 tucker_reconstruct(const Tensor3& core, const Mat& u1, const Mat& u2, const Mat& u3);

}  // namespace sttgcn
