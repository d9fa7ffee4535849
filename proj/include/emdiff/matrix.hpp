#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace emdiff {

// Dense row-major matrix of 64-bit reals. The only numerical container in the
// project; batches of data rows live here.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols)
      : rows_(rows), cols_(cols),
        data_(static_cast<std::size_t>(rows) * cols, 0.0) {}

  static Matrix filled(int rows, int cols, double value) {
    Matrix m(rows, cols);
    for (double& v : m.data_) v = value;
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(int i, int j) {
    return data_[static_cast<std::size_t>(i) * cols_ + j];
  }
  double operator()(int i, int j) const {
    return data_[static_cast<std::size_t>(i) * cols_ + j];
  }

  std::span<double> row(int i) {
    return {data_.data() + static_cast<std::size_t>(i) * cols_,
            static_cast<std::size_t>(cols_)};
  }
  std::span<const double> row(int i) const {
    return {data_.data() + static_cast<std::size_t>(i) * cols_,
            static_cast<std::size_t>(cols_)};
  }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool all_finite() const;

  bool operator==(const Matrix& other) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

std::string shape_str(const Matrix& m);

// Throws std::invalid_argument naming `what` and both shapes.
void require_same_shape(const Matrix& a, const Matrix& b, const char* what);

// C = A * B, (n x k)(k x m). BLAS-backed.
Matrix matmul(const Matrix& a, const Matrix& b);
// C = A^T * B, A (k x n), B (k x m).
Matrix matmul_tn(const Matrix& a, const Matrix& b);
// C = A * B^T, A (n x k), B (m x k).
Matrix matmul_nt(const Matrix& a, const Matrix& b);

// y = x * W + b applied per row. W is (in x out), b has out entries.
Matrix linear_forward(const Matrix& w, std::span<const double> b,
                      const Matrix& x);

// Elementwise x * sigmoid(x).
Matrix silu(const Matrix& x);
// Derivative of silu at the pre-activation values.
Matrix silu_grad(const Matrix& pre);

std::vector<double> col_sums(const Matrix& m);

Matrix select_rows(const Matrix& m, std::span<const int> idx);

}  // namespace emdiff
