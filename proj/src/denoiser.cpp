#include "emdiff/denoiser.hpp"

#include <cmath>
#include <stdexcept>

namespace emdiff {

namespace {

Matrix uniform_init(int rows, int cols, Rng& rng) {
  Matrix m(rows, cols);
  const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
  for (double& v : m.values()) v = (2.0 * rng.uniform() - 1.0) * bound;
  return m;
}

void check_input(const DenoiserParams& p, const Matrix& x_t) {
  if (x_t.cols() != p.data_dim) {
    throw std::invalid_argument(
        "denoiser: input width " + std::to_string(x_t.cols()) +
        " does not match data_dim " + std::to_string(p.data_dim));
  }
}

}  // namespace

const char* DenoiserParams::tensor_name(int index) {
  static const char* names[] = {"w_in", "b_in", "w1", "b1",  "w2",
                                "b2",   "w3",   "b3", "w_out", "b_out"};
  return (index >= 0 && index < 10) ? names[index] : "?";
}

DenoiserParams make_denoiser(int data_dim, int hidden_dim, Rng& rng) {
  if (data_dim < 1 || hidden_dim < 2 || hidden_dim % 2 != 0) {
    throw std::invalid_argument("make_denoiser: need data_dim >= 1 and even hidden_dim >= 2");
  }
  const int d = data_dim, h = hidden_dim;
  DenoiserParams p;
  p.data_dim = d;
  p.hidden_dim = h;
  p.w_in = uniform_init(d, h, rng);
  p.w1 = uniform_init(h, 2 * h, rng);
  p.w2 = uniform_init(2 * h, 2 * h, rng);
  p.w3 = uniform_init(2 * h, h, rng);
  p.w_out = uniform_init(h, d, rng);
  p.b_in.assign(h, 0.0);
  p.b1.assign(2 * h, 0.0);
  p.b2.assign(2 * h, 0.0);
  p.b3.assign(h, 0.0);
  p.b_out.assign(d, 0.0);
  return p;
}

DenoiserParams zeros_like(const DenoiserParams& p) {
  DenoiserParams z;
  z.data_dim = p.data_dim;
  z.hidden_dim = p.hidden_dim;
  z.w_in = Matrix(p.w_in.rows(), p.w_in.cols());
  z.w1 = Matrix(p.w1.rows(), p.w1.cols());
  z.w2 = Matrix(p.w2.rows(), p.w2.cols());
  z.w3 = Matrix(p.w3.rows(), p.w3.cols());
  z.w_out = Matrix(p.w_out.rows(), p.w_out.cols());
  z.b_in.assign(p.b_in.size(), 0.0);
  z.b1.assign(p.b1.size(), 0.0);
  z.b2.assign(p.b2.size(), 0.0);
  z.b3.assign(p.b3.size(), 0.0);
  z.b_out.assign(p.b_out.size(), 0.0);
  return z;
}

std::vector<double> sinusoidal_embed(double t, int dim) {
  if (dim < 2 || dim % 2 != 0) {
    throw std::invalid_argument("sinusoidal_embed: dim must be even and >= 2, got " +
                                std::to_string(dim));
  }
  const int half = dim / 2;
  std::vector<double> e(dim);
  for (int j = 0; j < half; ++j) {
    const double omega = std::exp(-std::log(10000.0) * j / half);
    e[j] = std::sin(t * omega);
    e[half + j] = std::cos(t * omega);
  }
  return e;
}

DenoiserTrace denoiser_forward_trace(const DenoiserParams& p, const Matrix& x_t,
                                     std::span<const double> ts) {
  check_input(p, x_t);
  if (static_cast<int>(ts.size()) != x_t.rows()) {
    throw std::invalid_argument("denoiser: got " + std::to_string(ts.size()) +
                                " timesteps for " + std::to_string(x_t.rows()) +
                                " rows");
  }
  DenoiserTrace tr;
  tr.x = x_t;
  tr.hin = linear_forward(p.w_in, p.b_in, x_t);
  for (int i = 0; i < tr.hin.rows(); ++i) {
    const std::vector<double> e = sinusoidal_embed(ts[i], p.hidden_dim);
    auto r = tr.hin.row(i);
    for (int j = 0; j < p.hidden_dim; ++j) r[j] += e[j];
  }
  tr.pre1 = linear_forward(p.w1, p.b1, tr.hin);
  tr.h1 = silu(tr.pre1);
  tr.pre2 = linear_forward(p.w2, p.b2, tr.h1);
  tr.h2 = silu(tr.pre2);
  tr.pre3 = linear_forward(p.w3, p.b3, tr.h2);
  tr.h3 = silu(tr.pre3);
  tr.out = linear_forward(p.w_out, p.b_out, tr.h3);
  return tr;
}

Matrix denoiser_forward(const DenoiserParams& p, const Matrix& x_t,
                        std::span<const double> ts) {
  return denoiser_forward_trace(p, x_t, ts).out;
}

Matrix denoiser_forward(const DenoiserParams& p, const Matrix& x_t, double t) {
  const std::vector<double> ts(x_t.rows(), t);
  return denoiser_forward(p, x_t, ts);
}

DenoiserGrads denoiser_backward(const DenoiserParams& p,
                                const DenoiserTrace& trace,
                                const Matrix& upstream) {
  require_same_shape(upstream, trace.out, "denoiser_backward upstream");
  DenoiserGrads g = zeros_like(p);

  g.w_out = matmul_tn(trace.h3, upstream);
  g.b_out = col_sums(upstream);
  Matrix d = matmul_nt(upstream, p.w_out);  // grad wrt h3

  Matrix dpre = silu_grad(trace.pre3);
  for (std::size_t i = 0; i < d.size(); ++i) dpre.values()[i] *= d.values()[i];
  g.w3 = matmul_tn(trace.h2, dpre);
  g.b3 = col_sums(dpre);
  d = matmul_nt(dpre, p.w3);  // grad wrt h2

  dpre = silu_grad(trace.pre2);
  for (std::size_t i = 0; i < d.size(); ++i) dpre.values()[i] *= d.values()[i];
  g.w2 = matmul_tn(trace.h1, dpre);
  g.b2 = col_sums(dpre);
  d = matmul_nt(dpre, p.w2);  // grad wrt h1

  dpre = silu_grad(trace.pre1);
  for (std::size_t i = 0; i < d.size(); ++i) dpre.values()[i] *= d.values()[i];
  g.w1 = matmul_tn(trace.hin, dpre);
  g.b1 = col_sums(dpre);
  d = matmul_nt(dpre, p.w1);  // grad wrt hin (= grad wrt h0, embedding has no params)

  g.w_in = matmul_tn(trace.x, d);
  g.b_in = col_sums(d);
  return g;
}

DenoiserGrads denoiser_backward(const DenoiserParams& p, const Matrix& x_t,
                                double t, const Matrix& upstream) {
  const std::vector<double> ts(x_t.rows(), t);
  return denoiser_backward(p, denoiser_forward_trace(p, x_t, ts), upstream);
}

}  // namespace emdiff
