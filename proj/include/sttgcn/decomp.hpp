#pragma once

#include <cstddef>
#include <vector>

#include "sttgcn/tensor.hpp"

namespace sttgcn {

struct Ranks {
  std::size_t n = 1;  // spatial
  std::size_t d = 1;  // feature
  std::size_t t = 1;  // temporal
  friend bool operator==(const Ranks&, const Ranks&) = default;
};

/// Core plus column-orthonormal factors; x ≈ core ×₁ u_s ×₂ u_f ×₃ u_t.
struct TuckerFactors {
  Tensor3 core;
  Mat u_s;  // N×n
  Mat u_f;  // D×d
  Mat u_t;  // T×t
  Ranks ranks;
};

/// Symmetric eigendecomposition, eigenvalues sorted descending. `a` is n×n symmetric.
/// Uses cyclic Jacobi rotations for small matrices and a tridiagonal QR solver above
/// kJacobiMaxDim; eigenvector columns are returned in `vectors`.
struct SymmetricEigen {
  std::vector<double> values;
  Mat vectors;
};
inline constexpr std::size_t kJacobiMaxDim = 96;
SymmetricEigen symmetric_eigen(const Mat& a);
SymmetricEigen jacobi_eigen(const Mat& a, int max_sweeps = 100);

/// Top-r left singular basis of m (rows×r, orthonormal columns). Sign convention: the
/// largest-magnitude entry of each column is positive, ties go to the lowest row index.
/// Requires 1 ≤ r ≤ min(rows, cols).
Mat leading_singular_basis(const Mat& m, std::size_t r);

/// Same contract but allows r up to m.rows(), completing the basis from the null space when
/// the matrix has fewer than r nonzero singular values. Used inside HOSVD/HOOI.
Mat leading_left_basis(const Mat& m, std::size_t r);

struct HooiOptions {
  int max_iter = 50;
  double tol = 1e-7;
};

struct HooiTrace {
  /// errors[0] is the HOSVD initialization; errors[i] the error after sweep i.
  /// Convergence compares consecutive sweeps, so at least two run unless the fit is exact.
  std::vector<double> errors;
  int iterations = 0;
  bool converged = false;
};

/// Truncated HOSVD: each factor is the leading basis of the corresponding unfolding.
TuckerFactors hosvd(const Tensor3& x, Ranks ranks);

/// Higher-order orthogonal iteration started from hosvd(x, ranks).
TuckerFactors hooi(const Tensor3& x, Ranks ranks, const HooiOptions& options = {}, HooiTrace* trace = nullptr);

/// Core for fixed factors: x ×₁ u_sᵀ ×₂ u_fᵀ ×₃ u_tᵀ.
Tensor3 project_core(const Tensor3& x, const Mat& u_s, const Mat& u_f, const Mat& u_t);

Tensor3 reconstruct(const TuckerFactors& f);

/// ‖x − reconstruct(f)‖_F / ‖x‖_F, zero when x is zero.
double reconstruction_error(const Tensor3& x, const TuckerFactors& f);

void validate_ranks(const Dims3& dims, const Ranks& ranks);

/// Rank presets: exponent 1, 1/2 or 1/3 applied per mode with ceiling rounding.
enum class RankRule { full, sqrt, cbrt };
Ranks ranks_from_rule(const Dims3& dims, RankRule rule);
/// Smallest integer r with r^root ≥ value.
std::size_t ceil_root(std::size_t value, int root);

}  // namespace sttgcn
