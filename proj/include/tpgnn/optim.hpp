#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tpgnn/params.hpp"

namespace tpgnn {

/// Xavier/Glorot uniform initialisation. `shape` has one or two dimensions;
/// entries are drawn from U[-a, a] with a = sqrt(6 / (fan_in + fan_out)).
/// A 1-D shape (n) uses fan_in = fan_out = n.
Tensor xavier_init(std::span<const std::size_t> shape, std::uint64_t seed);
Tensor xavier_init(std::initializer_list<std::size_t> shape, std::uint64_t seed);
double xavier_bound(std::size_t fan_in, std::size_t fan_out);

struct AdamState {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;

  AdamState() = default;
  AdamState(const ParamStore& params, double learning_rate);

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// One bias-corrected Adam update. When `active` is non-empty only those
/// parameters move; moments of the others are untouched.
void adam_step(ParamStore& params, const GradMap& grads, AdamState& state,
               std::span<const ParamId> active = {});

}  // namespace tpgnn
