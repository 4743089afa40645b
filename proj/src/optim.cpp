#include "tpgnn/optim.hpp"

#include <cmath>
#include <random>

#include "tpgnn/errors.hpp"

namespace tpgnn {

double xavier_bound(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

Tensor xavier_init(std::span<const std::size_t> shape, std::uint64_t seed) {
  if (shape.empty()) throw UsageError("xavier_init: shape must have at least one dimension");
  if (shape.size() > 2) throw UsageError("xavier_init: only 1-D and 2-D shapes are supported");
  for (std::size_t s : shape)
    if (s == 0) throw UsageError("xavier_init: zero-sized dimension");
  const std::size_t rows = shape.size() == 2 ? shape[0] : 1;
  const std::size_t cols = shape.size() == 2 ? shape[1] : shape[0];
  const double bound = shape.size() == 2 ? xavier_bound(rows, cols) : xavier_bound(cols, cols);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t(rows, cols);
  for (double& v : t.data()) v = dist(rng);
  return t;
}

Tensor xavier_init(std::initializer_list<std::size_t> shape, std::uint64_t seed) {
  return xavier_init(std::span<const std::size_t>(shape.begin(), shape.size()), seed);
}

AdamState::AdamState(const ParamStore& params, double learning_rate) : lr(learning_rate) {
  first_moment = zero_grads(params);
  second_moment = zero_grads(params);
}

namespace {

void update_one(Tensor& p, const Tensor& g, Tensor& m, Tensor& v, const AdamState& s, double bc1, double bc2) {
  if (!p.same_shape(g) || !p.same_shape(m) || !p.same_shape(v)) {
    throw ConfigError("adam_step: parameter " + p.shape_string() + " vs gradient " + g.shape_string());
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g[i];
    v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * g[i] * g[i];
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    p[i] -= s.lr * mhat / (std::sqrt(vhat) + s.eps);
  }
}

}  // namespace

void adam_step(ParamStore& params, const GradMap& grads, AdamState& state, std::span<const ParamId> active) {
  if (grads.size() != params.size() || state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    throw ConfigError("adam_step: " + std::to_string(params.size()) + " parameters but " +
                      std::to_string(grads.size()) + " gradients");
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  if (active.empty()) {
    for (ParamId i = 0; i < params.size(); ++i)
      update_one(params[i], grads[i], state.first_moment[i], state.second_moment[i], state, bc1, bc2);
  } else {
    for (ParamId i : active)
      update_one(params[i], grads[i], state.first_moment[i], state.second_moment[i], state, bc1, bc2);
  }
}

}  // namespace tpgnn
