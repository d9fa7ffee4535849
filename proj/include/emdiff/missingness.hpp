#pragma once

#include <cstdint>
#include <vector>

#include "emdiff/matrix.hpp"
#include "emdiff/rng.hpp"

namespace emdiff {

enum class Mechanism { mcar, mar, mnar };

struct MaskSpec {
  Mechanism mechanism = Mechanism::mcar;
  double ratio = 0.3;
  std::uint64_t seed = 0;
  std::vector<int> observed_cols;  // MAR only: columns that stay observed

  void validate(int n_cols) const;
};

// Each entry Bernoulli(r), independent of the data.
Matrix mcar(int rows, int cols, double r, Rng& rng);

// observed_cols stay fully observed; every other column gets per-row missing
// probability sigmoid(w . x_obs + b) with w ~ N(0, I) per column (seeded from
// rng) and a shared intercept b calibrated by bisection so the expected
// missing fraction over maskable entries is r. Inputs are standardized
// internally so calibration is scale-free.
Matrix mar(const Matrix& data, double r, std::span<const int> observed_cols,
           Rng& rng);

// Stage 1 draws an MCAR self-mask at rate r; stage 2 zeroes the self-masked
// entries and feeds them through per-column logistic models as in mar, with
// the intercept calibrated to overall ratio r. All columns are maskable.
Matrix mnar(const Matrix& data, double r, Rng& rng);

// Any fully-masked row keeps one uniformly chosen entry observed, so every
// row retains at least one conditioning value. Returns the number of rows
// adjusted. Applied by the experiment pipeline, not by the raw mechanisms.
int ensure_row_observed(Matrix& mask, Rng& rng);

struct MaskResult {
  Matrix mask;
  int guard_adjustments = 0;
  double empirical_ratio = 0.0;
};

// Mechanism dispatch + ensure-observed guard; the entry point used by the
// experiment pipeline and the genmask command.
MaskResult generate_mask(const Matrix& data, const MaskSpec& spec);

const char* mechanism_name(Mechanism m);
Mechanism mechanism_from_name(const std::string& name);

}  // namespace emdiff
