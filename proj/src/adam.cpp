#include "emdiff/adam.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace emdiff {

namespace {

std::vector<std::span<double>> tensor_spans(DenoiserParams& p) {
  std::vector<std::span<double>> out;
  out.reserve(10);
  p.for_each_tensor([&](std::span<double> s) { out.push_back(s); });
  return out;
}

std::vector<std::span<const double>> tensor_spans(const DenoiserParams& p) {
  std::vector<std::span<const double>> out;
  out.reserve(10);
  p.for_each_tensor([&](std::span<const double> s) { out.push_back(s); });
  return out;
}

}  // namespace

AdamState make_adam_state(const DenoiserParams& params, double lr) {
  AdamState s;
  s.m = zeros_like(params);
  s.v = zeros_like(params);
  s.lr = lr;
  return s;
}

std::pair<DenoiserParams, AdamState> adam_update(DenoiserParams params,
                                                 const DenoiserGrads& grads,
                                                 AdamState state) {
  auto ps = tensor_spans(params);
  auto gs = tensor_spans(grads);
  auto ms = tensor_spans(state.m);
  auto vs = tensor_spans(state.v);

  for (int k = 0; k < 10; ++k) {
    if (gs[k].size() != ps[k].size()) {
      throw std::invalid_argument(std::string("adam_update: gradient tensor ") +
                                  DenoiserParams::tensor_name(k) +
                                  " has size " + std::to_string(gs[k].size()) +
                                  ", expected " + std::to_string(ps[k].size()));
    }
    for (std::size_t i = 0; i < gs[k].size(); ++i) {
      if (!std::isfinite(gs[k][i])) {
        throw std::runtime_error(
            std::string("adam_update: non-finite gradient in ") +
            DenoiserParams::tensor_name(k) + "[" + std::to_string(i) +
            "] = " + std::to_string(gs[k][i]) + " at step " +
            std::to_string(state.step + 1));
      }
    }
  }

  state.step += 1;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (int k = 0; k < 10; ++k) {
    for (std::size_t i = 0; i < ps[k].size(); ++i) {
      const double g = gs[k][i];
      ms[k][i] = state.beta1 * ms[k][i] + (1.0 - state.beta1) * g;
      vs[k][i] = state.beta2 * vs[k][i] + (1.0 - state.beta2) * g * g;
      const double mhat = ms[k][i] / c1;
      const double vhat = vs[k][i] / c2;
      ps[k][i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
  return {std::move(params), std::move(state)};
}

}  // namespace emdiff
