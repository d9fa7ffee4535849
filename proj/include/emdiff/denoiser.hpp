#pragma once

#include <span>
#include <vector>

#include "emdiff/matrix.hpp"
#include "emdiff/rng.hpp"

namespace emdiff {

// Weights of the denoising network: a 5-layer MLP
//   h0  = x * W_in + b_in                  (d -> h)
//   hin = h0 + sinusoidal_embed(t, h)
//   h1  = silu(hin * W1 + b1)              (h -> 2h)
//   h2  = silu(h1  * W2 + b2)              (2h -> 2h)
//   h3  = silu(h2  * W3 + b3)              (2h -> h)
//   out = h3 * W_out + b_out               (h -> d)
// The timestep embedding has no learnable parameters; its width equals the
// hidden width.
struct DenoiserParams {
  int data_dim = 0;
  int hidden_dim = 0;

  Matrix w_in, w1, w2, w3, w_out;
  std::vector<double> b_in, b1, b2, b3, b_out;

  int embed_dim() const { return hidden_dim; }

  // Applies f(span) to every parameter tensor, in a fixed order.
  template <typename F>
  void for_each_tensor(F&& f) {
    f(w_in.values());
    f(std::span<double>(b_in));
    f(w1.values());
    f(std::span<double>(b1));
    f(w2.values());
    f(std::span<double>(b2));
    f(w3.values());
    f(std::span<double>(b3));
    f(w_out.values());
    f(std::span<double>(b_out));
  }
  template <typename F>
  void for_each_tensor(F&& f) const {
    f(w_in.values());
    f(std::span<const double>(b_in));
    f(w1.values());
    f(std::span<const double>(b1));
    f(w2.values());
    f(std::span<const double>(b2));
    f(w3.values());
    f(std::span<const double>(b3));
    f(w_out.values());
    f(std::span<const double>(b_out));
  }

  static const char* tensor_name(int index);
};

// Gradients (and optimizer moments) share the parameter layout.
using DenoiserGrads = DenoiserParams;

// Weights ~ uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)), biases zero.
DenoiserParams make_denoiser(int data_dim, int hidden_dim, Rng& rng);
DenoiserParams zeros_like(const DenoiserParams& p);

// First half sin(t * w_j), second half cos(t * w_j) with the geometric
// frequency ladder w_j = exp(-ln(10000) * j / (dim/2)). dim must be even.
std::vector<double> sinusoidal_embed(double t, int dim);

Matrix denoiser_forward(const DenoiserParams& p, const Matrix& x_t, double t);
// Per-row timesteps; ts.size() must equal x_t.rows().
Matrix denoiser_forward(const DenoiserParams& p, const Matrix& x_t,
                        std::span<const double> ts);

// Intermediate activations kept for the backward pass.
struct DenoiserTrace {
  Matrix x, hin, pre1, h1, pre2, h2, pre3, h3, out;
};

DenoiserTrace denoiser_forward_trace(const DenoiserParams& p, const Matrix& x_t,
                                     std::span<const double> ts);

// Gradients of sum(out .* upstream) with respect to every parameter tensor.
DenoiserGrads denoiser_backward(const DenoiserParams& p,
                                const DenoiserTrace& trace,
                                const Matrix& upstream);
// Convenience form that recomputes the forward trace.
DenoiserGrads denoiser_backward(const DenoiserParams& p, const Matrix& x_t,
                                double t, const Matrix& upstream);

}  // namespace emdiff
