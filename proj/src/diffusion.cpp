#include "emdiff/diffusion.hpp"

#include <cmath>
#include <stdexcept>

namespace emdiff {

void NoiseSchedule::validate() const {
  if (!(t_min > 0.0) || !(t_min < t_max)) {
    throw std::invalid_argument("NoiseSchedule: need 0 < t_min < t_max, got t_min=" +
                                std::to_string(t_min) + " t_max=" + std::to_string(t_max));
  }
}

void SamplerConfig::validate() const {
  if (steps < 1) throw std::invalid_argument("SamplerConfig: steps must be >= 1");
  if (repetitions < 1) throw std::invalid_argument("SamplerConfig: repetitions must be >= 1");
  if (rho < 1.0) throw std::invalid_argument("SamplerConfig: rho must be >= 1");
  if (resample < 1) throw std::invalid_argument("SamplerConfig: resample must be >= 1");
}

Matrix perturb(const Matrix& x0, double t, const Matrix& eps,
               const NoiseSchedule& sched) {
  require_same_shape(x0, eps, "perturb");
  if (t < 0.0 || t > sched.t_max) {
    throw std::invalid_argument("perturb: t=" + std::to_string(t) +
                                " outside [0, " + std::to_string(sched.t_max) + "]");
  }
  const double s = sched.sigma(t);
  Matrix out = x0;
  for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] += s * eps.values()[i];
  return out;
}

Matrix score_target(const Matrix& eps, double t, const NoiseSchedule& sched) {
  if (t < sched.t_min) {
    throw std::invalid_argument("score_target: t=" + std::to_string(t) +
                                " below t_min=" + std::to_string(sched.t_min) +
                                " (target unbounded as t -> 0)");
  }
  const double inv = -1.0 / sched.sigma(t);
  Matrix out = eps;
  for (double& v : out.values()) v *= inv;
  return out;
}

SmDraw draw_sm_batch(int rows, int cols, const NoiseSchedule& sched, Rng& rng) {
  sched.validate();
  SmDraw d;
  d.ts.resize(rows);
  const double lo = std::log(sched.t_min), hi = std::log(sched.t_max);
  for (int i = 0; i < rows; ++i) d.ts[i] = std::exp(lo + rng.uniform() * (hi - lo));
  d.eps = Matrix(rows, cols);
  rng.fill_normal(d.eps.values());
  return d;
}

ScoreFn denoiser_score(const DenoiserParams& params) {
  return [params](const Matrix& x_t, double t) {
    return denoiser_forward(params, x_t, t);
  };
}

namespace {

// Per-row mean squared error rows; also reports the merged batch loss.
// Loss is the mean over rows and coordinates, so a batch decomposes into the
// mean of its single-row losses.
double batch_loss(const Matrix& out, const Matrix& target, const SmDraw& draw) {
  double total = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double diff = out.values()[i] - target.values()[i];
    total += diff * diff;
  }
  const double loss = total / static_cast<double>(out.size());
  if (!std::isfinite(loss)) {
    for (int i = 0; i < out.rows(); ++i) {
      double row = 0.0;
      for (int j = 0; j < out.cols(); ++j) {
        const double diff = out(i, j) - target(i, j);
        row += diff * diff;
      }
      if (!std::isfinite(row)) {
        throw std::runtime_error("sm_loss: non-finite loss at row " +
                                 std::to_string(i) + ", t=" +
                                 std::to_string(draw.ts[i]));
      }
    }
    throw std::runtime_error("sm_loss: non-finite loss");
  }
  return loss;
}

Matrix perturb_rows(const Matrix& x0, const SmDraw& draw, const NoiseSchedule& sched) {
  Matrix x_t = x0;
  for (int i = 0; i < x_t.rows(); ++i) {
    const double s = sched.sigma(draw.ts[i]);
    auto xr = x_t.row(i);
    auto er = draw.eps.row(i);
    for (int j = 0; j < x_t.cols(); ++j) xr[j] += s * er[j];
  }
  return x_t;
}

Matrix target_rows(const SmDraw& draw, const NoiseSchedule& sched) {
  Matrix tgt = draw.eps;
  for (int i = 0; i < tgt.rows(); ++i) {
    const double inv = -1.0 / sched.sigma(draw.ts[i]);
    for (double& v : tgt.row(i)) v *= inv;
  }
  return tgt;
}

}  // namespace

double sm_loss_value(const RowScoreFn& model, const Matrix& x0,
                     const SmDraw& draw, const NoiseSchedule& sched) {
  if (x0.rows() == 0) throw std::invalid_argument("sm_loss: empty batch");
  const Matrix x_t = perturb_rows(x0, draw, sched);
  const Matrix target = target_rows(draw, sched);
  const Matrix out = model(x_t, draw.ts);
  return batch_loss(out, target, draw);
}

SmLossResult sm_loss_given(const DenoiserParams& params, const Matrix& x0,
                           SmDraw draw, const NoiseSchedule& sched) {
  if (x0.rows() == 0) throw std::invalid_argument("sm_loss: empty batch");
  const Matrix x_t = perturb_rows(x0, draw, sched);
  const Matrix target = target_rows(draw, sched);
  const DenoiserTrace trace = denoiser_forward_trace(params, x_t, draw.ts);

  SmLossResult res;
  res.loss = batch_loss(trace.out, target, draw);
  Matrix upstream(trace.out.rows(), trace.out.cols());
  const double scale = 2.0 / static_cast<double>(trace.out.size());
  for (std::size_t i = 0; i < upstream.size(); ++i) {
    upstream.values()[i] = scale * (trace.out.values()[i] - target.values()[i]);
  }
  res.grads = denoiser_backward(params, trace, upstream);
  res.draw = std::move(draw);
  return res;
}

SmLossResult sm_loss(const DenoiserParams& params, const Matrix& x0,
                     const NoiseSchedule& sched, Rng& rng) {
  return sm_loss_given(params, x0, draw_sm_batch(x0.rows(), x0.cols(), sched, rng),
                       sched);
}

std::vector<double> timestep_schedule(const SamplerConfig& cfg,
                                      const NoiseSchedule& sched) {
  cfg.validate();
  sched.validate();
  const int m = cfg.steps;
  std::vector<double> ts(m + 1);
  ts[m] = 0.0;
  if (m == 1) {
    ts[0] = sched.t_max;
    return ts;
  }
  const double a = std::pow(sched.t_min, 1.0 / cfg.rho);
  const double b = std::pow(sched.t_max, 1.0 / cfg.rho);
  // i runs over ascending ladder index 1..M; stored descending.
  for (int i = 1; i <= m; ++i) {
    const double u = a + (static_cast<double>(i - 1) / (m - 1)) * (b - a);
    ts[m - i] = std::pow(u, cfg.rho);
  }
  ts[0] = sched.t_max;    // exact endpoints regardless of pow round-off
  ts[m - 1] = sched.t_min;
  return ts;
}

Matrix reverse_step(const Matrix& x_t, double t, double t_next,
                    const Matrix& score, const Matrix& z) {
  require_same_shape(x_t, score, "reverse_step score");
  require_same_shape(x_t, z, "reverse_step noise");
  if (!(t_next >= 0.0) || !(t_next < t)) {
    throw std::invalid_argument("reverse_step: need 0 <= t_next < t, got t=" +
                                std::to_string(t) + " t_next=" + std::to_string(t_next));
  }
  const double dt = t - t_next;
  const double drift = 2.0 * t * dt;
  const double diff = std::sqrt(2.0 * t * dt);
  Matrix out = x_t;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.values()[i] += drift * score.values()[i] + diff * z.values()[i];
  }
  return out;
}

Matrix sample_unconditional(const ScoreFn& score, const NoiseSchedule& sched,
                            const SamplerConfig& cfg, int n, int d, Rng& rng) {
  const std::vector<double> ts = timestep_schedule(cfg, sched);
  Matrix x(n, d);
  rng.fill_normal(x.values());
  const double prior = sched.sigma(sched.t_max);
  for (double& v : x.values()) v *= prior;

  Matrix z(n, d);
  for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
    const double t = ts[i], tn = ts[i + 1];
    const Matrix sc = score(x, t);
    rng.fill_normal(z.values());
    x = reverse_step(x, t, tn, sc, z);
  }
  return x;
}

Matrix sample_unconditional(const DenoiserParams& params,
                            const NoiseSchedule& sched,
                            const SamplerConfig& cfg, int n, int d, Rng& rng) {
  return sample_unconditional(denoiser_score(params), sched, cfg, n, d, rng);
}

}  // namespace emdiff
