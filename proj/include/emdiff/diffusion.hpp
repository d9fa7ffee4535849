#pragma once

#include <functional>
#include <vector>

#include "emdiff/adam.hpp"
#include "emdiff/denoiser.hpp"
#include "emdiff/matrix.hpp"
#include "emdiff/rng.hpp"

namespace emdiff {

// Variance-exploding schedule with sigma(t) = t. t_min caps the score-target
// magnitude during training and sampling; the target -eps/sigma(t) is
// unbounded at t = 0.
struct NoiseSchedule {
  double t_max = 80.0;
  double t_min = 0.002;

  double sigma(double t) const { return t; }
  void validate() const;
};

// Reverse-process discretization. `steps` is the number M of intervals; the
// ladder has M + 1 descending times with t_M = t_max, t_1 = t_min, t_0 = 0.
// rho warps the interior points toward small noise levels (rho = 1 is the
// linear ladder). `resample` re-noises and redoes each merge step during
// inpainting; 1 reproduces the plain single-pass loop (see emloop.hpp).
struct SamplerConfig {
  int steps = 50;        // M
  int repetitions = 10;  // N, draws averaged per E-step
  double rho = 7.0;
  int resample = 4;
  double resample_below = 2.0;  // only resample levels with t <= this

  void validate() const;
};

// x_t = x0 + sigma(t) * eps.
Matrix perturb(const Matrix& x0, double t, const Matrix& eps,
               const NoiseSchedule& sched);

// -eps / sigma(t); requires t >= t_min.
Matrix score_target(const Matrix& eps, double t, const NoiseSchedule& sched);

// One training draw: per-row t ~ log-uniform[t_min, t_max], eps ~ N(0, I).
struct SmDraw {
  std::vector<double> ts;
  Matrix eps;
};

SmDraw draw_sm_batch(int rows, int cols, const NoiseSchedule& sched, Rng& rng);

// Any map from a perturbed batch and a shared noise level to score estimates.
using ScoreFn = std::function<Matrix(const Matrix& x_t, double t)>;
// Same with per-row noise levels (training-time form).
using RowScoreFn =
    std::function<Matrix(const Matrix& x_t, std::span<const double> ts)>;

ScoreFn denoiser_score(const DenoiserParams& params);

// Mean squared error between model output and score_target over a frozen
// draw. The model is pluggable so tests can substitute exact scores.
double sm_loss_value(const RowScoreFn& model, const Matrix& x0,
                     const SmDraw& draw, const NoiseSchedule& sched);

struct SmLossResult {
  double loss = 0.0;
  DenoiserGrads grads;
  SmDraw draw;
};

// Loss plus parameter gradients for the denoiser on a frozen draw.
SmLossResult sm_loss_given(const DenoiserParams& params, const Matrix& x0,
                           SmDraw draw, const NoiseSchedule& sched);
// Draws (t, eps) internally.
SmLossResult sm_loss(const DenoiserParams& params, const Matrix& x0,
                     const NoiseSchedule& sched, Rng& rng);

// Descending times t_M .. t_1, t_0 with t_M = t_max, t_1 = t_min, t_0 = 0.
std::vector<double> timestep_schedule(const SamplerConfig& cfg,
                                      const NoiseSchedule& sched);

// One Euler-Maruyama step of the reverse SDE from t to t_next:
//   x' = x + 2 t (t - t_next) score + sqrt(2 t (t - t_next)) z.
Matrix reverse_step(const Matrix& x_t, double t, double t_next,
                    const Matrix& score, const Matrix& z);

// n samples of width d: x_T ~ N(0, sigma(t_max)^2 I) integrated down the
// ladder with the given score estimate.
Matrix sample_unconditional(const ScoreFn& score, const NoiseSchedule& sched,
                            const SamplerConfig& cfg, int n, int d, Rng& rng);
Matrix sample_unconditional(const DenoiserParams& params,
                            const NoiseSchedule& sched,
                            const SamplerConfig& cfg, int n, int d, Rng& rng);

}  // namespace emdiff
