#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dwe/store.hpp"

/// Dense 64-bit numerics for alignment: Gram products, square SVD, orthogonality checks.
namespace dwe::linalg {

/// Row-major double matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols);
  /// Throws Error(shape_mismatch) when values.size() != rows * cols.
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> diag);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool is_square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) { return values_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {values_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {values_.data() + i * cols_, cols_}; }
  std::span<const double> values() const noexcept { return values_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

Matrix transpose(const Matrix& m);
Matrix multiply(const Matrix& a, const Matrix& b);
Matrix subtract(const Matrix& a, const Matrix& b);
double frobenius_norm(const Matrix& m);
double max_abs(const Matrix& m);

/// Widens an embedding block to 64-bit.
Matrix to_matrix(const EmbeddingMatrix& m);

/// AᵀB for two n x d blocks, accumulated in 64-bit. Throws Error(shape_mismatch).
Matrix matmul_t(const EmbeddingMatrix& a, const EmbeddingMatrix& b);
Matrix matmul_t(const Matrix& a, const Matrix& b);

/// M = U · diag(sigma) · Vᵀ with sigma descending.
struct SvdResult {
  Matrix u;
  std::vector<double> sigma;
  Matrix v;
};

struct SvdOptions {
  /// Cyclic sweeps before giving up with Error(numerical_failure).
  int max_sweeps = 80;
  /// A column pair counts as orthogonal once |<p,q>| <= tolerance * |p| * |q|.
  double tolerance = 1e-15;
};

/// One-sided Jacobi SVD of a square matrix. Deterministic: fixed row-cyclic pivot order.
/// Columns of U for (numerically) zero singular values are completed to an orthonormal basis.
SvdResult svd(const Matrix& m, const SvdOptions& options = {});

/// U · diag(sigma) · Vᵀ.
Matrix reconstruct(const SvdResult& s);

/// ‖QᵀQ − I‖_F.
double orthogonality_defect(const Matrix& q);

}  // namespace dwe::linalg
