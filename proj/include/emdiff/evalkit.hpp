#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "emdiff/diffusion.hpp"
#include "emdiff/matrix.hpp"
#include "emdiff/rng.hpp"
#include "emdiff/tabular.hpp"

namespace emdiff {

// Imputation quality over masked entries only. Continuous metrics are
// computed in standardized (encoded) space by default; accuracy compares
// decoded categories.
struct ColumnMetric {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
  double mae = 0.0;   // numeric columns
  double rmse = 0.0;  // numeric columns
  double accuracy = 0.0;  // categorical columns
  int count = 0;
};

struct MetricReport {
  std::optional<double> mae;
  std::optional<double> rmse;
  std::optional<double> accuracy;
  int evaluated_numeric = 0;
  int evaluated_categorical = 0;
  std::vector<ColumnMetric> columns;
  std::string space = "standardized";
};

// Mean |pred - truth| over entries with mask = 1, restricted to the listed
// dims. Rejects an empty selection.
double masked_mae(const Matrix& pred, const Matrix& truth, const Matrix& mask,
                  std::span<const int> dims);
double masked_rmse(const Matrix& pred, const Matrix& truth, const Matrix& mask,
                   std::span<const int> dims);

// Fraction of masked categorical cells whose decoded category matches.
// cell_mask is rows x columns (cell level, 1 = evaluate).
double accuracy(const TabularDataset& pred, const TabularDataset& truth,
                const Matrix& cell_mask);

// Full report for encoded predictions against encoded truth. cell_mask picks
// the evaluated cells; spans/specs route dims to columns. raw_space switches
// the continuous metrics to de-standardized units.
MetricReport evaluate(const EncodedMatrix& pred, const EncodedMatrix& truth,
                      const Matrix& cell_mask,
                      const std::vector<ColumnSpec>& specs,
                      bool raw_space = false);

struct SplitResult {
  TabularDataset train;
  TabularDataset test;
  std::vector<int> train_rows;  // original row indices
  std::vector<int> test_rows;
};

// Seeded shuffle then split; train gets floor(n * fraction) rows.
SplitResult split_train_test(const TabularDataset& ds, double fraction,
                             std::uint64_t seed);

// ---- synthetic benchmarks with analytic oracles ----

struct GaussianComponent {
  double weight = 1.0;
  std::vector<double> mean;
  Matrix cov;  // positive definite
};

struct SyntheticSpec {
  enum class Family { gaussian, gaussian_mixture };
  Family family = Family::gaussian;
  int dimension = 2;
  int rows = 1000;
  std::uint64_t seed = 0;
  // gaussian: single component (weight ignored); mixture: >= 2 components.
  std::vector<GaussianComponent> components;

  // Unit-marginal equicorrelated Gaussian.
  static SyntheticSpec correlated_gaussian(int dim, double rho, int rows,
                                           std::uint64_t seed);
  // Two symmetric components at +-offset per coordinate, identity covariance.
  static SyntheticSpec two_mode_mixture(int dim, double offset, int rows,
                                        std::uint64_t seed);
  void validate() const;
};

// Analytic conditionals of the generating distribution. `missing` is a 0/1
// row pattern; conditional_mean fills the missing coordinates of `row` with
// E[x_mis | x_obs] and leaves observed ones untouched.
class SyntheticOracle {
 public:
  explicit SyntheticOracle(SyntheticSpec spec);

  std::vector<double> conditional_mean(std::span<const double> row,
                                       std::span<const double> missing) const;
  // Residual std of a single missing coordinate given all others observed.
  // Exact for the gaussian family; mixtures vary by location so this is only
  // defined there for single components.
  double residual_std(int col) const;
  // s * sqrt(2/pi): the MAE attained by the exact conditional mean when the
  // conditional is Gaussian with residual std s.
  static double oracle_mae(double residual_std);

  const SyntheticSpec& spec() const { return spec_; }

 private:
  SyntheticSpec spec_;
};

struct SynthResult {
  TabularDataset data;  // all numeric, fully observed
  SyntheticOracle oracle;
};

SynthResult synth_generate(const SyntheticSpec& spec);

// Score of the spec's distribution perturbed by sigma(t), in closed form:
// for a mixture of N(mu_c, S_c), the perturbed density is the mixture of
// N(mu_c, S_c + sigma^2 I). Used as a network stand-in when validating the
// conditional sampler.
ScoreFn analytic_score(const SyntheticSpec& spec, const NoiseSchedule& sched);

// Small dense symmetric positive-definite solve (Cholesky).
std::vector<double> spd_solve(const Matrix& a, std::span<const double> b);

}  // namespace emdiff
