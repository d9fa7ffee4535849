#include "emdiff/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace emdiff {

namespace {

// Cholesky factor (lower) of a symmetric positive-definite matrix.
Matrix cholesky(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw std::invalid_argument("cholesky: matrix not square, " + shape_str(a));
  }
  const int n = a.rows();
  Matrix l(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = a(i, j);
      for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      if (i == j) {
        if (s <= 0.0) {
          throw std::invalid_argument("cholesky: matrix not positive definite (pivot " +
                                      std::to_string(s) + " at " + std::to_string(i) + ")");
        }
        l(i, i) = std::sqrt(s);
      } else {
        l(i, j) = s / l(j, j);
      }
    }
  }
  return l;
}

std::vector<double> chol_solve(const Matrix& l, std::span<const double> b) {
  const int n = l.rows();
  std::vector<double> y(n);
  for (int i = 0; i < n; ++i) {
    double s = b[i];
    for (int k = 0; k < i; ++k) s -= l(i, k) * y[k];
    y[i] = s / l(i, i);
  }
  std::vector<double> x(n);
  for (int i = n - 1; i >= 0; --i) {
    double s = y[i];
    for (int k = i + 1; k < n; ++k) s -= l(k, i) * x[k];
    x[i] = s / l(i, i);
  }
  return x;
}

double chol_logdet(const Matrix& l) {
  double s = 0.0;
  for (int i = 0; i < l.rows(); ++i) s += std::log(l(i, i));
  return 2.0 * s;
}

Matrix submatrix(const Matrix& a, std::span<const int> rows,
                 std::span<const int> cols) {
  Matrix s(static_cast<int>(rows.size()), static_cast<int>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      s(static_cast<int>(i), static_cast<int>(j)) = a(rows[i], cols[j]);
    }
  }
  return s;
}

}  // namespace

std::vector<double> spd_solve(const Matrix& a, std::span<const double> b) {
  return chol_solve(cholesky(a), b);
}

double masked_mae(const Matrix& pred, const Matrix& truth, const Matrix& mask,
                  std::span<const int> dims) {
  require_same_shape(pred, truth, "masked_mae");
  require_same_shape(pred, mask, "masked_mae mask");
  double total = 0.0;
  long count = 0;
  for (int i = 0; i < pred.rows(); ++i) {
    for (int d : dims) {
      if (mask(i, d) != 0.0) {
        total += std::abs(pred(i, d) - truth(i, d));
        ++count;
      }
    }
  }
  if (count == 0) throw std::invalid_argument("masked_mae: no masked entries to evaluate");
  return total / static_cast<double>(count);
}

double masked_rmse(const Matrix& pred, const Matrix& truth, const Matrix& mask,
                   std::span<const int> dims) {
  require_same_shape(pred, truth, "masked_rmse");
  require_same_shape(pred, mask, "masked_rmse mask");
  double total = 0.0;
  long count = 0;
  for (int i = 0; i < pred.rows(); ++i) {
    for (int d : dims) {
      if (mask(i, d) != 0.0) {
        const double diff = pred(i, d) - truth(i, d);
        total += diff * diff;
        ++count;
      }
    }
  }
  if (count == 0) throw std::invalid_argument("masked_rmse: no masked entries to evaluate");
  return std::sqrt(total / static_cast<double>(count));
}

double accuracy(const TabularDataset& pred, const TabularDataset& truth,
                const Matrix& cell_mask) {
  require_same_shape(pred.cells, truth.cells, "accuracy");
  require_same_shape(pred.cells, cell_mask, "accuracy mask");
  long hit = 0, count = 0;
  for (int j = 0; j < truth.cols(); ++j) {
    if (truth.specs[j].kind != ColumnKind::categorical) continue;
    for (int i = 0; i < truth.rows(); ++i) {
      if (cell_mask(i, j) == 0.0) continue;
      ++count;
      if (pred.cells(i, j) == truth.cells(i, j)) ++hit;
    }
  }
  if (count == 0) {
    throw std::invalid_argument("accuracy: no masked categorical cells to evaluate");
  }
  return static_cast<double>(hit) / static_cast<double>(count);
}

MetricReport evaluate(const EncodedMatrix& pred, const EncodedMatrix& truth,
                      const Matrix& cell_mask,
                      const std::vector<ColumnSpec>& specs, bool raw_space) {
  require_same_shape(pred.values, truth.values, "evaluate");
  if (cell_mask.rows() != pred.rows() ||
      cell_mask.cols() != static_cast<int>(specs.size())) {
    throw std::invalid_argument("evaluate: cell mask is " + shape_str(cell_mask) +
                                ", expected " + std::to_string(pred.rows()) + "x" +
                                std::to_string(specs.size()));
  }

  MetricReport rep;
  rep.space = raw_space ? "raw" : "standardized";

  double num_abs = 0.0, num_sq = 0.0;
  long num_count = 0;
  long cat_hit = 0, cat_count = 0;
  std::vector<double> span_pred, span_truth;

  for (std::size_t j = 0; j < specs.size(); ++j) {
    const auto& span = pred.spans[j];
    ColumnMetric cm;
    cm.name = specs[j].name;
    cm.kind = specs[j].kind;

    if (specs[j].kind == ColumnKind::numeric) {
      const int d = span.begin;
      const double scale = raw_space ? truth.col_stds[d] : 1.0;
      double col_abs = 0.0, col_sq = 0.0;
      int col_count = 0;
      for (int i = 0; i < pred.rows(); ++i) {
        if (cell_mask(i, static_cast<int>(j)) == 0.0) continue;
        const double diff = (pred.values(i, d) - truth.values(i, d)) * scale;
        col_abs += std::abs(diff);
        col_sq += diff * diff;
        ++col_count;
      }
      if (col_count > 0) {
        cm.mae = col_abs / col_count;
        cm.rmse = std::sqrt(col_sq / col_count);
        cm.count = col_count;
        rep.columns.push_back(cm);
        num_abs += col_abs;
        num_sq += col_sq;
        num_count += col_count;
      }
    } else {
      const int cats = static_cast<int>(specs[j].categories.size());
      int col_hit = 0, col_count = 0;
      for (int i = 0; i < pred.rows(); ++i) {
        if (cell_mask(i, static_cast<int>(j)) == 0.0) continue;
        span_pred.resize(span.width);
        span_truth.resize(span.width);
        for (int b = 0; b < span.width; ++b) {
          const int c = span.begin + b;
          span_pred[b] = pred.values(i, c) * pred.col_stds[c] + pred.col_means[c];
          span_truth[b] = truth.values(i, c) * truth.col_stds[c] + truth.col_means[c];
        }
        const int pi = analog_bits_decode(span_pred, cats);
        const int ti = analog_bits_decode(span_truth, cats);
        ++col_count;
        if (pi == ti) ++col_hit;
      }
      if (col_count > 0) {
        cm.accuracy = static_cast<double>(col_hit) / col_count;
        cm.count = col_count;
        rep.columns.push_back(cm);
        cat_hit += col_hit;
        cat_count += col_count;
      }
    }
  }

  if (num_count > 0) {
    rep.mae = num_abs / static_cast<double>(num_count);
    rep.rmse = std::sqrt(num_sq / static_cast<double>(num_count));
    rep.evaluated_numeric = static_cast<int>(num_count);
  }
  if (cat_count > 0) {
    rep.accuracy = static_cast<double>(cat_hit) / static_cast<double>(cat_count);
    rep.evaluated_categorical = static_cast<int>(cat_count);
  }
  return rep;
}

SplitResult split_train_test(const TabularDataset& ds, double fraction,
                             std::uint64_t seed) {
  if (!(fraction > 0.0) || !(fraction < 1.0)) {
    throw std::invalid_argument("split_train_test: fraction must be in (0, 1)");
  }
  const int n = ds.rows();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(i) + 1));
    std::swap(order[i], order[j]);
  }
  const int n_train = static_cast<int>(std::floor(n * fraction));
  if (n_train == 0 || n_train == n) {
    throw std::invalid_argument("split_train_test: split would leave an empty side (" +
                                std::to_string(n_train) + " of " + std::to_string(n) + ")");
  }
  SplitResult res;
  res.train_rows.assign(order.begin(), order.begin() + n_train);
  res.test_rows.assign(order.begin() + n_train, order.end());
  auto take = [&](std::span<const int> rows) {
    TabularDataset out;
    out.specs = ds.specs;
    out.cells = select_rows(ds.cells, rows);
    out.missing = select_rows(ds.missing, rows);
    return out;
  };
  res.train = take(res.train_rows);
  res.test = take(res.test_rows);
  return res;
}

SyntheticSpec SyntheticSpec::correlated_gaussian(int dim, double rho, int rows,
                                                 std::uint64_t seed) {
  SyntheticSpec s;
  s.family = Family::gaussian;
  s.dimension = dim;
  s.rows = rows;
  s.seed = seed;
  GaussianComponent c;
  c.weight = 1.0;
  c.mean.assign(dim, 0.0);
  c.cov = Matrix(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) c.cov(i, j) = i == j ? 1.0 : rho;
  }
  s.components.push_back(std::move(c));
  return s;
}

SyntheticSpec SyntheticSpec::two_mode_mixture(int dim, double offset, int rows,
                                              std::uint64_t seed) {
  SyntheticSpec s;
  s.family = Family::gaussian_mixture;
  s.dimension = dim;
  s.rows = rows;
  s.seed = seed;
  for (int sign : {-1, 1}) {
    GaussianComponent c;
    c.weight = 0.5;
    c.mean.assign(dim, sign * offset);
    c.cov = Matrix(dim, dim);
    for (int i = 0; i < dim; ++i) c.cov(i, i) = 1.0;
    s.components.push_back(std::move(c));
  }
  return s;
}

void SyntheticSpec::validate() const {
  if (dimension < 1) throw std::invalid_argument("SyntheticSpec: dimension must be >= 1");
  if (rows < 1) throw std::invalid_argument("SyntheticSpec: rows must be >= 1");
  if (components.empty()) throw std::invalid_argument("SyntheticSpec: no components");
  if (family == Family::gaussian && components.size() != 1) {
    throw std::invalid_argument("SyntheticSpec: gaussian family needs exactly one component");
  }
  double wsum = 0.0;
  for (const auto& c : components) {
    if (static_cast<int>(c.mean.size()) != dimension ||
        c.cov.rows() != dimension || c.cov.cols() != dimension) {
      throw std::invalid_argument("SyntheticSpec: component shape mismatch");
    }
    if (!(c.weight > 0.0)) {
      throw std::invalid_argument("SyntheticSpec: component weights must be positive");
    }
    cholesky(c.cov);  // rejects non-positive-definite covariances
    wsum += c.weight;
  }
  if (family == Family::gaussian_mixture && std::abs(wsum - 1.0) > 1e-9) {
    throw std::invalid_argument("SyntheticSpec: mixture weights sum to " +
                                std::to_string(wsum) + ", expected 1");
  }
}

SyntheticOracle::SyntheticOracle(SyntheticSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
}

std::vector<double> SyntheticOracle::conditional_mean(
    std::span<const double> row, std::span<const double> missing) const {
  const int d = spec_.dimension;
  if (static_cast<int>(row.size()) != d || static_cast<int>(missing.size()) != d) {
    throw std::invalid_argument("oracle: row width mismatch");
  }
  std::vector<int> obs, mis;
  for (int j = 0; j < d; ++j) {
    (missing[j] != 0.0 ? mis : obs).push_back(j);
  }
  std::vector<double> out(row.begin(), row.end());
  if (mis.empty()) return out;

  // Responsibility-weighted component conditional means. With no observed
  // coordinates the responsibilities are the prior weights.
  std::vector<double> log_resp(spec_.components.size(), 0.0);
  std::vector<std::vector<double>> cond(spec_.components.size());
  for (std::size_t c = 0; c < spec_.components.size(); ++c) {
    const auto& comp = spec_.components[c];
    if (obs.empty()) {
      log_resp[c] = std::log(comp.weight);
      cond[c].assign(mis.size(), 0.0);
      for (std::size_t m = 0; m < mis.size(); ++m) cond[c][m] = comp.mean[mis[m]];
      continue;
    }
    const Matrix soo = submatrix(comp.cov, obs, obs);
    const Matrix l = cholesky(soo);
    std::vector<double> delta(obs.size());
    for (std::size_t k = 0; k < obs.size(); ++k) {
      delta[k] = row[obs[k]] - comp.mean[obs[k]];
    }
    const std::vector<double> alpha = chol_solve(l, delta);
    double quad = 0.0;
    for (std::size_t k = 0; k < obs.size(); ++k) quad += delta[k] * alpha[k];
    log_resp[c] = std::log(comp.weight) - 0.5 * quad - 0.5 * chol_logdet(l);

    cond[c].assign(mis.size(), 0.0);
    const Matrix smo = submatrix(comp.cov, mis, obs);
    for (std::size_t m = 0; m < mis.size(); ++m) {
      double v = comp.mean[mis[m]];
      for (std::size_t k = 0; k < obs.size(); ++k) v += smo(static_cast<int>(m), static_cast<int>(k)) * alpha[k];
      cond[c][m] = v;
    }
  }

  const double mx = *std::max_element(log_resp.begin(), log_resp.end());
  double denom = 0.0;
  std::vector<double> resp(log_resp.size());
  for (std::size_t c = 0; c < log_resp.size(); ++c) {
    resp[c] = std::exp(log_resp[c] - mx);
    denom += resp[c];
  }
  for (std::size_t m = 0; m < mis.size(); ++m) {
    double v = 0.0;
    for (std::size_t c = 0; c < resp.size(); ++c) v += resp[c] * cond[c][m];
    out[mis[m]] = v / denom;
  }
  return out;
}

double SyntheticOracle::residual_std(int col) const {
  if (spec_.family != SyntheticSpec::Family::gaussian) {
    throw std::invalid_argument("oracle: residual_std is defined for the gaussian family only");
  }
  const auto& comp = spec_.components[0];
  const int d = spec_.dimension;
  if (col < 0 || col >= d) throw std::invalid_argument("oracle: column out of range");
  std::vector<int> obs;
  for (int j = 0; j < d; ++j) {
    if (j != col) obs.push_back(j);
  }
  if (obs.empty()) return std::sqrt(comp.cov(col, col));
  const Matrix soo = submatrix(comp.cov, obs, obs);
  std::vector<double> som(obs.size());
  for (std::size_t k = 0; k < obs.size(); ++k) som[k] = comp.cov(obs[k], col);
  const std::vector<double> alpha = spd_solve(soo, som);
  double var = comp.cov(col, col);
  for (std::size_t k = 0; k < obs.size(); ++k) var -= som[k] * alpha[k];
  return std::sqrt(var);
}

double SyntheticOracle::oracle_mae(double residual_std) {
  return residual_std * std::sqrt(2.0 / 3.14159265358979323846);
}

SynthResult synth_generate(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const int d = spec.dimension;

  std::vector<Matrix> factors;
  factors.reserve(spec.components.size());
  for (const auto& c : spec.components) factors.push_back(cholesky(c.cov));

  TabularDataset ds;
  ds.specs.resize(d);
  for (int j = 0; j < d; ++j) {
    ds.specs[j].name = "x" + std::to_string(j + 1);
    ds.specs[j].kind = ColumnKind::numeric;
  }
  ds.cells = Matrix(spec.rows, d);
  ds.missing = Matrix(spec.rows, d);

  std::vector<double> z(d);
  for (int i = 0; i < spec.rows; ++i) {
    std::size_t c = 0;
    if (spec.components.size() > 1) {
      double u = rng.uniform();
      for (; c + 1 < spec.components.size(); ++c) {
        u -= spec.components[c].weight;
        if (u < 0.0) break;
      }
    }
    rng.fill_normal(z);
    const auto& comp = spec.components[c];
    const auto& l = factors[c];
    for (int r = 0; r < d; ++r) {
      double v = comp.mean[r];
      for (int k = 0; k <= r; ++k) v += l(r, k) * z[k];
      ds.cells(i, r) = v;
    }
  }
  return {std::move(ds), SyntheticOracle(spec)};
}

ScoreFn analytic_score(const SyntheticSpec& spec, const NoiseSchedule& sched) {
  spec.validate();
  return [spec, sched](const Matrix& x, double t) {
    const double s2 = sched.sigma(t) * sched.sigma(t);
    const int d = spec.dimension;
    if (x.cols() != d) {
      throw std::invalid_argument("analytic_score: input width " + std::to_string(x.cols()) +
                                  ", expected " + std::to_string(d));
    }
    // Perturbed components N(mu_c, S_c + sigma^2 I).
    std::vector<Matrix> chols;
    chols.reserve(spec.components.size());
    for (const auto& c : spec.components) {
      Matrix cov = c.cov;
      for (int j = 0; j < d; ++j) cov(j, j) += s2;
      chols.push_back(cholesky(cov));
    }
    Matrix out(x.rows(), d);
    std::vector<double> delta(d);
    std::vector<double> logw(spec.components.size());
    std::vector<std::vector<double>> alphas(spec.components.size());
    for (int i = 0; i < x.rows(); ++i) {
      for (std::size_t c = 0; c < spec.components.size(); ++c) {
        const auto& comp = spec.components[c];
        for (int j = 0; j < d; ++j) delta[j] = x(i, j) - comp.mean[j];
        alphas[c] = chol_solve(chols[c], delta);
        double quad = 0.0;
        for (int j = 0; j < d; ++j) quad += delta[j] * alphas[c][j];
        logw[c] = std::log(comp.weight) - 0.5 * quad - 0.5 * chol_logdet(chols[c]);
      }
      const double mx = *std::max_element(logw.begin(), logw.end());
      double denom = 0.0;
      for (std::size_t c = 0; c < logw.size(); ++c) {
        logw[c] = std::exp(logw[c] - mx);
        denom += logw[c];
      }
      for (int j = 0; j < d; ++j) {
        double v = 0.0;
        for (std::size_t c = 0; c < logw.size(); ++c) v -= logw[c] * alphas[c][j];
        out(i, j) = v / denom;
      }
    }
    return out;
  };
}

}  // namespace emdiff
