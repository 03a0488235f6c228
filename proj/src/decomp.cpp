#include "sttgcn/decomp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "eigen_view.hpp"

namespace sttgcn {
namespace {

using detail::view;

bool finite(const Mat& m) {
  return std::all_of(m.data().begin(), m.data().end(), [](double v) { return std::isfinite(v); });
}

Mat gram_rows(const Mat& m) {  // m·mᵀ
  Mat g(m.rows(), m.rows());
  if (m.cols() > 0) view(g).noalias() = view(m) * view(m).transpose();
  return g;
}

Mat gram_cols(const Mat& m) {  // mᵀ·m
  Mat g(m.cols(), m.cols());
  if (m.rows() > 0) view(g).noalias() = view(m).transpose() * view(m);
  return g;
}

void apply_sign_convention(Mat& u) {
  for (std::size_t c = 0; c < u.cols(); ++c) {
    std::size_t best = 0;
    double best_abs = -1.0;
    for (std::size_t r = 0; r < u.rows(); ++r) {
      const double a = std::abs(u(r, c));
      if (a > best_abs) {
        best_abs = a;
        best = r;
      }
    }
    if (u(best, c) < 0.0) {
      for (std::size_t r = 0; r < u.rows(); ++r) u(r, c) = -u(r, c);
    }
  }
}

// Two passes of modified Gram–Schmidt over the columns.
void reorthonormalize(Mat& u) {
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t c = 0; c < u.cols(); ++c) {
      for (std::size_t prev = 0; prev < c; ++prev) {
        double dot = 0.0;
        for (std::size_t r = 0; r < u.rows(); ++r) dot += u(r, prev) * u(r, c);
        for (std::size_t r = 0; r < u.rows(); ++r) u(r, c) -= dot * u(r, prev);
      }
      double norm = 0.0;
      for (std::size_t r = 0; r < u.rows(); ++r) norm += u(r, c) * u(r, c);
      norm = std::sqrt(norm);
      for (std::size_t r = 0; r < u.rows(); ++r) u(r, c) /= norm;
    }
  }
}

Mat first_columns(const Mat& v, std::size_t r) {
  Mat out(v.rows(), r);
  for (std::size_t i = 0; i < v.rows(); ++i)
    for (std::size_t c = 0; c < r; ++c) out(i, c) = v(i, c);
  return out;
}

std::string dims_str(const Dims3& d) {
  return std::to_string(d.i1) + "x" + std::to_string(d.i2) + "x" + std::to_string(d.i3);
}

}  // namespace

SymmetricEigen jacobi_eigen(const Mat& a, int max_sweeps) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw ArgumentError("jacobi_eigen: matrix is not square");
  // Column-major working copies; the symmetric matrix is kept whole and rows mirror columns.
  std::vector<double> m(n * n);
  std::vector<double> v(n * n, 0.0);
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t r = 0; r < n; ++r) m[c * n + r] = 0.5 * (a(r, c) + a(c, r));
    v[c * n + c] = 1.0;
  }
  const auto at = [&](std::size_t r, std::size_t c) -> double& { return m[c * n + r]; };

  double fro = 0.0;
  for (double x : m) fro += x * x;
  fro = std::sqrt(fro);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t q = 1; q < n; ++q)
      for (std::size_t p = 0; p < q; ++p) off += at(p, q) * at(p, q);
    if (off == 0.0 || std::sqrt(off) <= 1e-15 * fro) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = at(p, q);
        if (std::abs(apq) < 1e-300) continue;
        const double app = at(p, p);
        const double aqq = at(q, q);
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        double* cp = &m[p * n];
        double* cq = &m[q * n];
        for (std::size_t k = 0; k < n; ++k) {
          const double mkp = cp[k];
          const double mkq = cq[k];
          cp[k] = c * mkp - s * mkq;
          cq[k] = s * mkp + c * mkq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          m[k * n + p] = cp[k];
          m[k * n + q] = cq[k];
        }
        at(p, p) = app - t * apq;
        at(q, q) = aqq + t * apq;
        at(p, q) = 0.0;
        at(q, p) = 0.0;
        double* vp = &v[p * n];
        double* vq = &v[q * n];
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = vp[k];
          const double vkq = vq[k];
          vp[k] = c * vkp - s * vkq;
          vq[k] = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return at(i, i) > at(j, j); });

  SymmetricEigen out{std::vector<double>(n), Mat(n, n)};
  for (std::size_t c = 0; c < n; ++c) {
    out.values[c] = at(order[c], order[c]);
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, c) = v[order[c] * n + r];
  }
  return out;
}

SymmetricEigen symmetric_eigen(const Mat& a) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw ArgumentError("symmetric_eigen: matrix is not square");
  if (n <= kJacobiMaxDim) return jacobi_eigen(a);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(Eigen::MatrixXd(view(a)));
  if (solver.info() != Eigen::Success) throw DataError("symmetric eigensolver failed to converge");
  SymmetricEigen out{std::vector<double>(n), Mat(n, n)};
  // Eigen sorts ascending.
  for (std::size_t c = 0; c < n; ++c) {
    const auto src = static_cast<Eigen::Index>(n - 1 - c);
    out.values[c] = solver.eigenvalues()(src);
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, c) = solver.eigenvectors()(static_cast<Eigen::Index>(r), src);
  }
  return out;
}

Mat leading_left_basis(const Mat& m, std::size_t r) {
  if (r == 0 || r > m.rows()) {
    throw ArgumentError("leading basis rank " + std::to_string(r) + " out of range for " +
                        std::to_string(m.rows()) + " rows");
  }
  if (!finite(m)) throw DataError("leading basis: matrix contains non-finite values");

  // Tall case: eigen-decompose the small mᵀm and map back through m.
  if (m.rows() > m.cols() && r <= m.cols()) {
    const SymmetricEigen eig = symmetric_eigen(gram_cols(m));
    const double top = eig.values.front();
    if (top > 0.0 && eig.values[r - 1] > 1e-12 * top) {
      Mat u = matmul(m, first_columns(eig.vectors, r));
      for (std::size_t c = 0; c < r; ++c) {
        const double inv = 1.0 / std::sqrt(eig.values[c]);
        for (std::size_t i = 0; i < u.rows(); ++i) u(i, c) *= inv;
      }
      reorthonormalize(u);
      apply_sign_convention(u);
      return u;
    }
  }

  const SymmetricEigen eig = symmetric_eigen(gram_rows(m));
  Mat u = first_columns(eig.vectors, r);
  apply_sign_convention(u);
  return u;
}

Mat leading_singular_basis(const Mat& m, std::size_t r) {
  if (r == 0 || r > std::min(m.rows(), m.cols())) {
    throw ArgumentError("leading_singular_basis: r=" + std::to_string(r) + " must lie in [1, " +
                        std::to_string(std::min(m.rows(), m.cols())) + "]");
  }
  return leading_left_basis(m, r);
}

void validate_ranks(const Dims3& dims, const Ranks& ranks) {
  if (ranks.n < 1 || ranks.d < 1 || ranks.t < 1 || ranks.n > dims.i1 || ranks.d > dims.i2 || ranks.t > dims.i3) {
    throw ArgumentError("Tucker ranks (" + std::to_string(ranks.n) + "," + std::to_string(ranks.d) + "," +
                        std::to_string(ranks.t) + ") invalid for tensor " + dims_str(dims));
  }
}

Tensor3 project_core(const Tensor3& x, const Mat& u_s, const Mat& u_f, const Mat& u_t) {
  return mode_product(mode_product(mode_product(x, u_s.transpose(), 1), u_f.transpose(), 2), u_t.transpose(), 3);
}

Tensor3 reconstruct(const TuckerFactors& f) { return tucker_reconstruct(f.core, f.u_s, f.u_f, f.u_t); }

double reconstruction_error(const Tensor3& x, const TuckerFactors& f) {
  const Dims3& d = x.dims();
  if (f.u_s.rows() != d.i1 || f.u_f.rows() != d.i2 || f.u_t.rows() != d.i3) {
    throw ArgumentError("reconstruction_error: factor rows do not match tensor " + dims_str(d));
  }
  const double ref = x.frobenius_norm();
  if (ref == 0.0) return 0.0;
  return (x - reconstruct(f)).frobenius_norm() / ref;
}

TuckerFactors hosvd(const Tensor3& x, Ranks ranks) {
  validate_ranks(x.dims(), ranks);
  if (!x.all_finite()) throw DataError("hosvd: tensor contains non-finite values");
  TuckerFactors f;
  f.ranks = ranks;
  f.u_s = leading_left_basis(unfold(x, 1), ranks.n);
  f.u_f = leading_left_basis(unfold(x, 2), ranks.d);
  f.u_t = leading_left_basis(unfold(x, 3), ranks.t);
  f.core = project_core(x, f.u_s, f.u_f, f.u_t);
  return f;
}

TuckerFactors hooi(const Tensor3& x, Ranks ranks, const HooiOptions& options, HooiTrace* trace) {
  validate_ranks(x.dims(), ranks);
  if (options.max_iter < 1) throw ArgumentError("hooi: max_iter must be at least 1");
  if (!(options.tol > 0.0)) throw ArgumentError("hooi: tol must be positive");
  if (!x.all_finite()) throw DataError("hooi: tensor contains non-finite values");

  // The first sweep recomputes the spatial factor from the HOSVD feature and temporal factors
  // alone, so the HOSVD spatial factor is only materialized when the caller wants the baseline.
  TuckerFactors f;
  f.ranks = ranks;
  f.u_f = leading_left_basis(unfold(x, 2), ranks.d);
  f.u_t = leading_left_basis(unfold(x, 3), ranks.t);
  if (trace != nullptr) {
    f.u_s = leading_left_basis(unfold(x, 1), ranks.n);
    f.core = project_core(x, f.u_s, f.u_f, f.u_t);
    *trace = HooiTrace{{reconstruction_error(x, f)}, 0, false};
  }

  const double x_sq = x.squared_norm();
  double prev = 0.0;
  for (int it = 1; it <= options.max_iter; ++it) {
    const Tensor3 y1 = mode_product(mode_product(x, f.u_f.transpose(), 2), f.u_t.transpose(), 3);
    f.u_s = leading_left_basis(unfold(y1, 1), ranks.n);

    const Tensor3 xs = mode_product(x, f.u_s.transpose(), 1);
    const Tensor3 y2 = mode_product(xs, f.u_t.transpose(), 3);
    f.u_f = leading_left_basis(unfold(y2, 2), ranks.d);

    const Tensor3 y3 = mode_product(xs, f.u_f.transpose(), 2);
    f.u_t = leading_left_basis(unfold(y3, 3), ranks.t);
    f.core = mode_product(y3, f.u_t.transpose(), 3);

    // With orthonormal factors ‖x − x̂‖² = ‖x‖² − ‖core‖²; fall back to the direct
    // residual when the difference is too small to be resolved that way.
    double err = 0.0;
    if (x_sq > 0.0) {
      const double rel_sq = (x_sq - f.core.squared_norm()) / x_sq;
      err = rel_sq > 1e-4 ? std::sqrt(rel_sq) : reconstruction_error(x, f);
    }
    if (trace != nullptr) {
      trace->errors.push_back(err);
      trace->iterations = it;
    }
    const bool done = err == 0.0 || (it > 1 && (prev - err) / prev < options.tol);
    if (done) {
      if (trace != nullptr) trace->converged = true;
      break;
    }
    prev = err;
  }
  return f;
}

std::size_t ceil_root(std::size_t value, int root) {
  if (root < 1) throw ArgumentError("ceil_root: root must be positive");
  if (value <= 1) return value;
  const auto power = [root](std::size_t base) {
    std::size_t p = 1;
    for (int i = 0; i < root; ++i) p *= base;
    return p;
  };
  auto r = static_cast<std::size_t>(std::pow(static_cast<double>(value), 1.0 / root));
  r = std::max<std::size_t>(r, 1);
  while (power(r) < value) ++r;
  while (r > 1 && power(r - 1) >= value) --r;
  return r;
}

Ranks ranks_from_rule(const Dims3& dims, RankRule rule) {
  const int root = rule == RankRule::full ? 1 : (rule == RankRule::sqrt ? 2 : 3);
  return {ceil_root(dims.i1, root), ceil_root(dims.i2, root), ceil_root(dims.i3, root)};
}

}  // namespace sttgcn
