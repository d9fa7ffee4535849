#include "emdiff/missingness.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace emdiff {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Column-standardized copy; constant columns become all zeros.
Matrix standardized(const Matrix& data) {
  Matrix z = data;
  for (int j = 0; j < data.cols(); ++j) {
    double mean = 0.0;
    for (int i = 0; i < data.rows(); ++i) mean += data(i, j);
    mean /= data.rows();
    double var = 0.0;
    for (int i = 0; i < data.rows(); ++i) {
      const double d = data(i, j) - mean;
      var += d * d;
    }
    const double std = std::sqrt(var / data.rows());
    for (int i = 0; i < data.rows(); ++i) {
      z(i, j) = std > 0.0 ? (data(i, j) - mean) / std : 0.0;
    }
  }
  return z;
}

// Shared intercept b such that mean(sigmoid(logit + b)) = r, by bisection.
double calibrate_intercept(const Matrix& logits, double r) {
  auto frac = [&](double b) {
    double s = 0.0;
    for (double v : logits.values()) s += sigmoid(v + b);
    return s / static_cast<double>(logits.size());
  };
  double lo = -40.0, hi = 40.0;
  if (frac(lo) > r || frac(hi) < r) {
    throw std::runtime_error("mask calibration: target ratio " + std::to_string(r) +
                             " unreachable within intercept range");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (frac(mid) < r) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo < 1e-12) break;
  }
  const double b = 0.5 * (lo + hi);
  if (std::abs(frac(b) - r) > 1e-3) {
    throw std::runtime_error("mask calibration failed: expected ratio " +
                             std::to_string(frac(b)) + " vs target " + std::to_string(r));
  }
  return b;
}

// Bernoulli sample of sigmoid(logit + b) per maskable entry.
void sample_logistic(const Matrix& logits, double b, std::span<const int> cols,
                     Matrix& mask, Rng& rng) {
  for (int i = 0; i < logits.rows(); ++i) {
    for (int jj = 0; jj < logits.cols(); ++jj) {
      const double p = sigmoid(logits(i, jj) + b);
      mask(i, cols[jj]) = rng.uniform() < p ? 1.0 : 0.0;
    }
  }
}

}  // namespace

void MaskSpec::validate(int n_cols) const {
  if (!(ratio >= 0.0) || !(ratio <= 1.0)) {
    throw std::invalid_argument("MaskSpec: ratio must be in [0, 1]");
  }
  if (mechanism == Mechanism::mar) {
    if (observed_cols.empty() ||
        static_cast<int>(observed_cols.size()) >= n_cols) {
      throw std::invalid_argument(
          "MaskSpec: MAR needs a nonempty observed_cols strictly smaller than "
          "all columns");
    }
    for (int c : observed_cols) {
      if (c < 0 || c >= n_cols) {
        throw std::invalid_argument("MaskSpec: observed column " + std::to_string(c) +
                                    " out of range");
      }
    }
  }
}

Matrix mcar(int rows, int cols, double r, Rng& rng) {
  if (!(r >= 0.0) || !(r <= 1.0)) {
    throw std::invalid_argument("mcar: r must be in [0, 1]");
  }
  Matrix mask(rows, cols);
  for (double& v : mask.values()) v = rng.uniform() < r ? 1.0 : 0.0;
  return mask;
}

Matrix mar(const Matrix& data, double r, std::span<const int> observed_cols,
           Rng& rng) {
  if (observed_cols.empty() ||
      static_cast<int>(observed_cols.size()) >= data.cols()) {
    throw std::invalid_argument("mar: observed_cols must be a nonempty proper subset");
  }
  std::vector<int> maskable;
  for (int j = 0; j < data.cols(); ++j) {
    if (std::find(observed_cols.begin(), observed_cols.end(), j) == observed_cols.end()) {
      maskable.push_back(j);
    }
  }
  const Matrix z = standardized(data);

  // Per-maskable-column weights over the observed columns, each from its own
  // derived stream so column order does not couple the draws.
  Matrix logits(data.rows(), static_cast<int>(maskable.size()));
  for (std::size_t jj = 0; jj < maskable.size(); ++jj) {
    Rng wrng(rng.next_u64());
    std::vector<double> w(observed_cols.size());
    wrng.fill_normal(w);
    for (int i = 0; i < data.rows(); ++i) {
      double dot = 0.0;
      for (std::size_t k = 0; k < observed_cols.size(); ++k) {
        dot += w[k] * z(i, observed_cols[k]);
      }
      logits(i, static_cast<int>(jj)) = dot;
    }
  }
  const double b = calibrate_intercept(logits, r);

  Matrix mask(data.rows(), data.cols());
  sample_logistic(logits, b, maskable, mask, rng);
  return mask;
}

Matrix mnar(const Matrix& data, double r, Rng& rng) {
  if (!(r > 0.0) || !(r < 1.0)) {
    throw std::invalid_argument("mnar: r must be in (0, 1)");
  }
  const Matrix self_mask = mcar(data.rows(), data.cols(), r, rng);
  Matrix z = standardized(data);
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (self_mask.values()[i] != 0.0) z.values()[i] = 0.0;
  }

  std::vector<int> all_cols(data.cols());
  for (int j = 0; j < data.cols(); ++j) all_cols[j] = j;

  Matrix logits(data.rows(), data.cols());
  for (int jj = 0; jj < data.cols(); ++jj) {
    Rng wrng(rng.next_u64());
    std::vector<double> w(data.cols());
    wrng.fill_normal(w);
    for (int i = 0; i < data.rows(); ++i) {
      double dot = 0.0;
      for (int k = 0; k < data.cols(); ++k) dot += w[k] * z(i, k);
      logits(i, jj) = dot;
    }
  }
  const double b = calibrate_intercept(logits, r);

  Matrix mask(data.rows(), data.cols());
  sample_logistic(logits, b, all_cols, mask, rng);
  return mask;
}

int ensure_row_observed(Matrix& mask, Rng& rng) {
  int adjusted = 0;
  for (int i = 0; i < mask.rows(); ++i) {
    bool all_missing = true;
    for (int j = 0; j < mask.cols(); ++j) {
      if (mask(i, j) == 0.0) {
        all_missing = false;
        break;
      }
    }
    if (all_missing && mask.cols() > 0) {
      const int keep = static_cast<int>(rng.next_below(mask.cols()));
      mask(i, keep) = 0.0;
      ++adjusted;
    }
  }
  return adjusted;
}

MaskResult generate_mask(const Matrix& data, const MaskSpec& spec) {
  spec.validate(data.cols());
  Rng rng(spec.seed);
  MaskResult res;
  switch (spec.mechanism) {
    case Mechanism::mcar:
      res.mask = mcar(data.rows(), data.cols(), spec.ratio, rng);
      break;
    case Mechanism::mar:
      res.mask = mar(data, spec.ratio, spec.observed_cols, rng);
      break;
    case Mechanism::mnar:
      res.mask = mnar(data, spec.ratio, rng);
      break;
  }
  res.guard_adjustments = ensure_row_observed(res.mask, rng);
  double ones = 0.0;
  for (double v : res.mask.values()) ones += v;
  res.empirical_ratio = res.mask.empty() ? 0.0 : ones / static_cast<double>(res.mask.size());
  return res;
}

const char* mechanism_name(Mechanism m) {
  switch (m) {
    case Mechanism::mcar: return "mcar";
    case Mechanism::mar: return "mar";
    case Mechanism::mnar: return "mnar";
  }
  return "?";
}

Mechanism mechanism_from_name(const std::string& name) {
  if (name == "mcar") return Mechanism::mcar;
  if (name == "mar") return Mechanism::mar;
  if (name == "mnar") return Mechanism::mnar;
  throw std::invalid_argument("unknown missingness mechanism '" + name + "'");
}

}  // namespace emdiff
