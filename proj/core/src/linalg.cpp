#include "dwe/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <utility>

#include "dwe/error.hpp"

namespace dwe::linalg {

Matrix::Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    throw Error(ErrorKind::shape_mismatch, "expected " + std::to_string(rows_ * cols_) + " values, got " +
                                               std::to_string(values_.size()));
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> diag) {
  Matrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
  return t;
}

Matrix multiply(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw Error(ErrorKind::shape_mismatch, "multiply: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                               " by " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      auto brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out[j] += aik * brow[j];
    }
  }
  return c;
}

Matrix subtract(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw Error(ErrorKind::shape_mismatch, "subtract: shapes differ");
  std::vector<double> out(a.values().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] - b.values()[i];
  return Matrix(a.rows(), a.cols(), std::move(out));
}

double frobenius_norm(const Matrix& m) {
  double s = 0.0;
  for (double v : m.values()) s += v * v;
  return std::sqrt(s);
}

double max_abs(const Matrix& m) {
  double s = 0.0;
  for (double v : m.values()) s = std::max(s, std::fabs(v));
  return s;
}

Matrix to_matrix(const EmbeddingMatrix& m) {
  auto src = m.values();
  return Matrix(m.rows(), m.dim(), std::vector<double>(src.begin(), src.end()));
}

namespace {

template <class Block>
Matrix gram_product(const Block& a, const Block& b, std::size_t n, std::size_t d) {
  Matrix out(d, d);
  for (std::size_t k = 0; k < n; ++k) {
    auto arow = a.row(k);
    auto brow = b.row(k);
    for (std::size_t i = 0; i < d; ++i) {
      const double aki = arow[i];
      auto orow = out.row(i);
      for (std::size_t j = 0; j < d; ++j) orow[j] += aki * static_cast<double>(brow[j]);
    }
  }
  return out;
}

}  // namespace

Matrix matmul_t(const EmbeddingMatrix& a, const EmbeddingMatrix& b) {
  if (a.rows() != b.rows() || a.dim() != b.dim()) {
    throw Error(ErrorKind::shape_mismatch, "matmul_t: " + std::to_string(a.rows()) + "x" + std::to_string(a.dim()) +
                                               " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.dim()));
  }
  return gram_product(a, b, a.rows(), a.dim());
}

Matrix matmul_t(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorKind::shape_mismatch, "matmul_t: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                               " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  return gram_product(a, b, a.rows(), a.cols());
}

// ---------------------------------------------------------------------------
// SVD

namespace {

double dot(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

void rotate_pair(std::span<double> x, std::span<double> y, double c, double s) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    const double yi = y[i];
    x[i] = c * xi - s * yi;
    y[i] = s * xi + c * yi;
  }
}

// Fills the null rows of `basis` (flagged in `missing`) so that all rows are orthonormal.
// Candidates are the standard basis vectors in index order; two Gram-Schmidt passes each.
void complete_basis(Matrix& basis, const std::vector<bool>& missing) {
  const std::size_t n = basis.cols();
  std::vector<std::size_t> accepted;
  for (std::size_t r = 0; r < basis.rows(); ++r)
    if (!missing[r]) accepted.push_back(r);

  std::size_t candidate = 0;
  std::vector<double> v(n);
  for (std::size_t r = 0; r < basis.rows(); ++r) {
    if (!missing[r]) continue;
    for (;; ++candidate) {
      if (candidate >= n) throw Error(ErrorKind::numerical_failure, "svd: cannot complete orthonormal basis");
      std::fill(v.begin(), v.end(), 0.0);
      v[candidate] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t a : accepted) {
          auto u = basis.row(a);
          const double proj = dot(u, v);
          for (std::size_t i = 0; i < n; ++i) v[i] -= proj * u[i];
        }
      }
      const double norm = std::sqrt(dot(v, v));
      if (norm > 0.5) {
        auto out = basis.row(r);
        for (std::size_t i = 0; i < n; ++i) out[i] = v[i] / norm;
        accepted.push_back(r);
        ++candidate;
        break;
      }
    }
  }
}

}  // namespace

SvdResult svd(const Matrix& m, const SvdOptions& options) {
  if (!m.is_square()) {
    throw Error(ErrorKind::shape_mismatch,
                "svd expects a square matrix, got " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
  for (double x : m.values()) {
    if (!std::isfinite(x)) throw Error(ErrorKind::precondition, "svd input contains NaN or Inf");
  }
  const std::size_t d = m.rows();

  // Row j of `w` is column j of the working matrix, row j of `vt` is column j of V.
  Matrix w = transpose(m);
  Matrix vt = Matrix::identity(d);

  const double fro = frobenius_norm(m);
  const double null_norm = fro * static_cast<double>(std::max<std::size_t>(d, 1)) *
                           std::numeric_limits<double>::epsilon();
  const double null_sq = null_norm * null_norm;

  bool converged = d < 2 || fro == 0.0;
  for (int sweep = 0; sweep < options.max_sweeps && !converged; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < d; ++p) {
      for (std::size_t q = p + 1; q < d; ++q) {
        auto wp = w.row(p);
        auto wq = w.row(q);
        const double alpha = dot(wp, wp);
        const double beta = dot(wq, wq);
        if (alpha <= null_sq || beta <= null_sq) continue;
        const double gamma = dot(wp, wq);
        if (std::fabs(gamma) <= options.tolerance * std::sqrt(alpha) * std::sqrt(beta)) continue;

        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        rotate_pair(wp, wq, c, s);
        rotate_pair(vt.row(p), vt.row(q), c, s);
        rotated = true;
      }
    }
    converged = !rotated;
  }
  if (!converged) {
    throw Error(ErrorKind::numerical_failure,
                "svd: no convergence after " + std::to_string(options.max_sweeps) + " Jacobi sweeps");
  }

  std::vector<double> norms(d);
  for (std::size_t j = 0; j < d; ++j) norms[j] = std::sqrt(dot(w.row(j), w.row(j)));
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return norms[a] > norms[b]; });

  SvdResult result{Matrix(d, d), std::vector<double>(d), Matrix(d, d)};
  Matrix ut(d, d);  // row k = column k of U
  std::vector<bool> missing(d, false);
  for (std::size_t k = 0; k < d; ++k) {
    const std::size_t j = order[k];
    result.sigma[k] = norms[j];
    if (norms[j] <= null_norm) {
      missing[k] = true;
    } else {
      auto src = w.row(j);
      auto dst = ut.row(k);
      for (std::size_t i = 0; i < d; ++i) dst[i] = src[i] / norms[j];
    }
    for (std::size_t i = 0; i < d; ++i) result.v(i, k) = vt(j, i);
  }
  if (std::find(missing.begin(), missing.end(), true) != missing.end()) complete_basis(ut, missing);
  result.u = transpose(ut);
  return result;
}

Matrix reconstruct(const SvdResult& s) {
  Matrix us = s.u;
  for (std::size_t i = 0; i < us.rows(); ++i)
    for (std::size_t k = 0; k < us.cols(); ++k) us(i, k) *= s.sigma[k];
  return multiply(us, transpose(s.v));
}

double orthogonality_defect(const Matrix& q) {
  if (!q.is_square()) throw Error(ErrorKind::shape_mismatch, "orthogonality_defect expects a square matrix");
  const std::size_t d = q.rows();
  double s = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      double g = 0.0;
      for (std::size_t k = 0; k < d; ++k) g += q(k, i) * q(k, j);
      const double e = g - (i == j ? 1.0 : 0.0);
      s += e * e;
    }
  }
  return std::sqrt(s);
}

}  // namespace dwe::linalg
