#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "emdiff/checkpoint.hpp"
#include "emdiff/diffusion.hpp"
#include "emdiff/tabular.hpp"

namespace emdiff {

struct EmConfig {
  int iterations = 5;  // K
  int epochs = 500;    // per M-step, subject to early stop
  int batch_size = 256;
  double learning_rate = 1e-4;
  int hidden_dim = 1024;
  bool warm_start = true;  // each M-step continues from the previous params
  // Stop an M-step once the 50-epoch moving average of the epoch loss
  // improves by less than 0.1% against the previous window.
  int early_stop_window = 50;
  double early_stop_rel = 1e-3;
  // Training timesteps are drawn log-uniform on [train_t_min, t_max]. This
  // floor is deliberately above the sampler floor schedule.t_min: the
  // regression target -eps/sigma(t) grows as 1/t and dominates both the loss
  // and the gradients below ~0.05, destroying the fit at the noise levels the
  // sampler actually relies on (see README).
  double train_t_min = 0.05;
  SamplerConfig sampler;
  NoiseSchedule schedule;
  std::uint64_t seed = 0;
  int workers = 1;

  void validate() const;
};

struct MStepTrace {
  std::vector<double> epoch_losses;
  bool early_stopped = false;
};

// Mini-batch Adam on the score-matching loss; the mask is ignored, the
// current estimates in x_complete are trained on as if observed. epochs = 0
// returns `init` unchanged.
DenoiserParams m_step(const Matrix& x_complete, const EmConfig& cfg,
                      DenoiserParams init, Rng& rng,
                      MStepTrace* trace = nullptr);

// One conditional draw: from prior noise, walk the timestep ladder combining
// a forward perturbation of the observed entries with a reverse step of the
// current iterate, keeping the reverse branch on masked (missing) entries.
// Each ladder level is re-noised and redone cfg.sampler.resample times at
// levels <= resample_below; a single pass per level loses conditioning
// information and lands on a visibly biased conditional (see README).
// Observed entries of the result equal x_hat's exactly. Noise is drawn from
// per-row streams derived from `rng`, so results do not depend on `workers`.
Matrix inpaint_once(const Matrix& x_hat, const Matrix& mask,
                    const ScoreFn& score, const NoiseSchedule& sched,
                    const SamplerConfig& cfg, Rng& rng, int workers = 1);

// Average of cfg.sampler.repetitions inpainting draws on missing entries;
// observed entries are copied from x_hat bit-exactly.
Matrix e_step(const Matrix& x_hat, const Matrix& mask, const ScoreFn& score,
              const NoiseSchedule& sched, const SamplerConfig& cfg, Rng& rng,
              int workers = 1);
EncodedMatrix e_step(const EncodedMatrix& x_hat, const DenoiserParams& params,
                     const EmConfig& cfg, Rng& rng);

struct ImputationResult {
  EncodedMatrix final_estimate;
  DenoiserParams params;
  std::vector<Matrix> snapshots;  // x^(0) .. x^(K)
  std::vector<MStepTrace> traces; // per executed M-step
  std::vector<double> iteration_seconds;
  int resumed_from = 0;  // > 0 when checkpoints were loaded
};

using IterationCallback =
    std::function<void(int k, const EncodedMatrix& x_k, const DenoiserParams&)>;

// K alternations of m_step and e_step from the encoded initialization.
// Per-iteration RNG streams are derived from cfg.seed, so a run interrupted
// after iteration k and resumed from its checkpoint continues bit-exactly.
// When checkpoint_dir is nonempty, snapshots are written there after every
// iteration and any existing ones are loaded instead of recomputed.
ImputationResult run_em(const EncodedMatrix& encoded, const EmConfig& cfg,
                        const IterationCallback& on_iteration = {},
                        const std::string& checkpoint_dir = {});

// One e_step on test rows with frozen parameters.
EncodedMatrix impute_out_of_sample(const DenoiserParams& params,
                                   const EncodedMatrix& test_encoded,
                                   const EmConfig& cfg, Rng& rng);

}  // namespace emdiff
