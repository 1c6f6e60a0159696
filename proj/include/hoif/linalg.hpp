#pragma once

#include <array>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hoif {

/// Thrown when operand shapes do not conform.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a numerical routine cannot produce a finite, valid answer
/// (non-SPD pivot, rank deficiency, NaN/Inf produced).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix zeros(std::size_t rows, std::size_t cols) { return Matrix(rows, cols); }
  static Matrix column(std::span<const double> values);
  static Matrix diagonal(std::span<const double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  const std::vector<double>& values() const { return data_; }

  std::string shape_string() const;
  bool same_shape(const Matrix& other) const { return rows_ == other.rows_ && cols_ == other.cols_; }

  Matrix transpose() const;
  /// Rows [first, first + count) as a new matrix.
  Matrix row_block(std::size_t first, std::size_t count) const;
  /// Columns [first, first + count) as a new matrix.
  Matrix col_block(std::size_t first, std::size_t count) const;
  void set_col_block(std::size_t first, const Matrix& block);

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double s);

  /// this += s * other
  void add_scaled(const Matrix& other, double s);
  void fill(double value);

  double max_abs() const;
  double frobenius_norm() const;
  bool all_finite() const;

  friend bool operator==(const Matrix& a, const Matrix& b) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);
Matrix operator*(double s, Matrix a);

/// Standard matrix product a * b.
Matrix matmul(const Matrix& a, const Matrix& b);
/// aᵀ * b without materialising the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// a * bᵀ without materialising the transpose.
Matrix matmul_nt(const Matrix& a, const Matrix& b);

/// Largest elementwise |a - b|. Shapes must match.
double max_abs_diff(const Matrix& a, const Matrix& b);

/// Throws NumericalError naming `what` if any entry is NaN or Inf.
void require_finite(const Matrix& m, const std::string& what);

struct EigenDecomposition {
  std::vector<double> values;  // ascending
  Matrix vectors;              // column i pairs with values[i]
};

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
EigenDecomposition sym_eigen(const Matrix& m, double tol = 1e-12);

/// Lower-triangular Cholesky factor; throws NumericalError on a pivot below 1e-12.
Matrix cholesky(const Matrix& m);
/// Solve m * x = rhs for symmetric positive definite m.
Matrix solve_spd(const Matrix& m, const Matrix& rhs);

struct SimilarityTransform {
  Matrix rotation;                      // 3x3, det = +1
  std::array<double, 3> translation{};  // applied after rotation and scale
  double scale = 1.0;

  /// Apply s * R * p + t to each row of an N x 3 matrix.
  Matrix apply(const Matrix& points) const;
};

/// Least-squares similarity (or rigid, when with_scale is false) transform
/// mapping rows of p onto rows of q.
SimilarityTransform kabsch_align(const Matrix& p, const Matrix& q, bool with_scale);

double determinant3(const Matrix& m);

}  // namespace hoif
