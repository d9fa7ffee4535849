#pragma once

#include <cstdint>
#include <utility>

#include "emdiff/denoiser.hpp"

namespace emdiff {

// Adam with bias correction. Moment accumulators mirror the parameter layout.
struct AdamState {
  DenoiserGrads m;  // first moment
  DenoiserGrads v;  // second moment
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double lr = 1e-4;
};

AdamState make_adam_state(const DenoiserParams& params, double lr);

// Returns the updated (params, state). Rejects non-finite gradients with a
// diagnostic naming the offending tensor.
std::pair<DenoiserParams, AdamState> adam_update(DenoiserParams params,
                                                 const DenoiserGrads& grads,
                                                 AdamState state);

}  // namespace emdiff
