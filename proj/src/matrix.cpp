#include "emdiff/matrix.hpp"

#include <cblas.h>

#include <cmath>
#include <mutex>
#include <stdexcept>

extern "C" void openblas_set_num_threads(int);

namespace emdiff {

namespace {

// Results must not depend on a worker-count heuristic inside BLAS, and the
// e-step already parallelises over rows, so the BLAS itself stays serial.
void ensure_blas_serial() {
  static std::once_flag flag;
  std::call_once(flag, [] { openblas_set_num_threads(1); });
}

}  // namespace

bool Matrix::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(std::string(what) + ": shape mismatch " +
                                shape_str(a) + " vs " + shape_str(b));
  }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: inner dimensions differ, " +
                                shape_str(a) + " * " + shape_str(b));
  }
  ensure_blas_serial();
  Matrix c(a.rows(), b.cols());
  if (c.empty()) return c;
  cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, a.rows(), b.cols(),
              a.cols(), 1.0, a.data(), a.cols(), b.data(), b.cols(), 0.0,
              c.data(), c.cols());
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw std::invalid_argument("matmul_tn: leading dimensions differ, " +
                                shape_str(a) + "^T * " + shape_str(b));
  }
  ensure_blas_serial();
  Matrix c(a.cols(), b.cols());
  if (c.empty()) return c;
  cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, a.cols(), b.cols(),
              a.rows(), 1.0, a.data(), a.cols(), b.data(), b.cols(), 0.0,
              c.data(), c.cols());
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw std::invalid_argument("matmul_nt: trailing dimensions differ, " +
                                shape_str(a) + " * " + shape_str(b) + "^T");
  }
  ensure_blas_serial();
  Matrix c(a.rows(), b.rows());
  if (c.empty()) return c;
  cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, a.rows(), b.rows(),
              a.cols(), 1.0, a.data(), a.cols(), b.data(), b.cols(), 0.0,
              c.data(), c.cols());
  return c;
}

Matrix linear_forward(const Matrix& w, std::span<const double> b,
                      const Matrix& x) {
  if (x.cols() != w.rows()) {
    throw std::invalid_argument(
        "linear_forward: input width " + std::to_string(x.cols()) +
        " does not match weight input dim " + std::to_string(w.rows()));
  }
  if (static_cast<int>(b.size()) != w.cols()) {
    throw std::invalid_argument(
        "linear_forward: bias size " + std::to_string(b.size()) +
        " does not match weight output dim " + std::to_string(w.cols()));
  }
  Matrix y = matmul(x, w);
  for (int i = 0; i < y.rows(); ++i) {
    auto r = y.row(i);
    for (int j = 0; j < y.cols(); ++j) r[j] += b[j];
  }
  return y;
}

Matrix silu(const Matrix& x) {
  Matrix y = x;
  for (double& v : y.values()) v = v / (1.0 + std::exp(-v));
  return y;
}

Matrix silu_grad(const Matrix& pre) {
  Matrix g = pre;
  for (double& v : g.values()) {
    const double s = 1.0 / (1.0 + std::exp(-v));
    v = s * (1.0 + v * (1.0 - s));
  }
  return g;
}

std::vector<double> col_sums(const Matrix& m) {
  std::vector<double> s(m.cols(), 0.0);
  for (int i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    for (int j = 0; j < m.cols(); ++j) s[j] += r[j];
  }
  return s;
}

Matrix select_rows(const Matrix& m, std::span<const int> idx) {
  Matrix out(static_cast<int>(idx.size()), m.cols());
  for (int i = 0; i < out.rows(); ++i) {
    auto src = m.row(idx[i]);
    auto dst = out.row(i);
    std::copy(src.begin(), src.end(), dst.begin());
  }
  return out;
}

}  // namespace emdiff
