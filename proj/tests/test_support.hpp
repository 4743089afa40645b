#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "tpgnn/decoder.hpp"
#include "tpgnn/encoder.hpp"
#include "tpgnn/model.hpp"
#include "tpgnn/ops.hpp"
#include "tpgnn/params.hpp"
#include "tpgnn/propagator.hpp"
#include "tpgnn/tape.hpp"
#include "tpgnn/tensor.hpp"

namespace tpgnn::testing {

inline Tensor random_tensor(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double lo = -1.0,
                            double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(rows, cols);
  for (double& v : t.data()) v = u(rng);
  return t;
}

inline std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

/// Builds a scalar loss on the given tape from the parameters in `store`.
using LossBuilder = std::function<Var(Tape&, const ParamStore&)>;

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::string worst;
};

// Relative error with a small absolute floor so that vanishing gradients do
// not turn rounding noise into large ratios.
inline double relative_error(double a, double b, double floor = 1e-4) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Central differences over every entry of the selected parameters (all of
/// them when `only` is empty). Each evaluation uses a fresh tape with the
/// same seed, so dropout masks repeat.
inline GradCheck check_param_gradients(ParamStore& store, const LossBuilder& build, bool train = false,
                                       std::uint64_t seed = 7, double h = 1e-5,
                                       const std::vector<ParamId>& only = {}) {
  GradMap analytic;
  {
    Tape tape(true, train, seed);
    const Var loss = build(tape, store);
    tape.backward(loss);
    analytic = tape.param_grads(store);
  }
  auto eval = [&]() {
    Tape tape(false, train, seed);
    return build(tape, store).value()[0];
  };
  GradCheck out;
  std::vector<ParamId> ids = only;
  if (ids.empty())
    for (ParamId i = 0; i < store.size(); ++i) ids.push_back(i);
  for (ParamId id : ids) {
    Tensor& p = store[id];
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double keep = p[k];
      p[k] = keep + h;
      const double up = eval();
      p[k] = keep - h;
      const double down = eval();
      p[k] = keep;
      const double numeric = (up - down) / (2.0 * h);
      const double err = relative_error(analytic[id][k], numeric);
      ++out.checked;
      if (err > out.max_rel_error) {
        out.max_rel_error = err;
        out.worst = store.name(id) + "[" + std::to_string(k) + "]";
      }
    }
  }
  return out;
}

/// Gradient of a scalar function of one input tensor, checked against
/// central differences. `f` maps a leaf Var to a scalar Var.
inline double check_input_gradient(const Tensor& x, const std::function<Var(Tape&, Var)>& f, double h = 1e-5,
                                   bool train = false, std::uint64_t seed = 3) {
  Tensor analytic;
  {
    Tape tape(true, train, seed);
    const Var v = tape.variable(x);
    tape.backward(f(tape, v));
    analytic = tape.grad(v);
  }
  auto eval = [&](const Tensor& at) {
    Tape tape(false, train, seed);
    return f(tape, tape.constant(at)).value()[0];
  };
  double worst = 0.0;
  Tensor probe = x;
  for (std::size_t k = 0; k < x.size(); ++k) {
    probe[k] = x[k] + h;
    const double up = eval(probe);
    probe[k] = x[k] - h;
    const double down = eval(probe);
    probe[k] = x[k];
    worst = std::max(worst, relative_error(analytic[k], (up - down) / (2.0 * h)));
  }
  return worst;
}

/// Overwrites every parameter with fresh random values; biases and gains
/// become nonzero so that every path carries gradient.
inline void randomize(ParamStore& store, std::uint64_t seed, double scale = 0.5) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (ParamId i = 0; i < store.size(); ++i)
    for (double& v : store[i].data()) v = u(rng);
}

/// Whole-model scalar objective on fixed random inputs: per-layer GRU
/// updates of random memories, the encoder over the updated tokens, the link
/// loss on (node pairs, random features) and the node cross-entropy.
struct ModelObjective {
  const Model* model;
  std::size_t nodes = 4;
  Tensor base_tokens;                  // nodes*(k+1) x d
  std::vector<Tensor> layer_messages;  // per layer, nodes x (2d+d_e)
  Tensor edge_features;                // pairs x d_e
  std::vector<std::uint32_t> src, dst, neg;
  std::vector<int> labels;

  ModelObjective(const Model& m, std::uint64_t seed) : model(&m) {
    std::mt19937_64 rng(seed);
    const auto& d = m.dims;
    base_tokens = random_tensor(nodes * d.tokens(), d.dim, rng);
    for (int n = 0; n < d.layers; ++n) layer_messages.push_back(random_tensor(nodes, d.message_dim(), rng));
    src = {0, 1, 2};
    dst = {3, 2, 0};
    neg = {1, 3, 3};
    edge_features = random_tensor(src.size(), d.edge_dim, rng);
    labels = {0, 1, 1, 0};
  }

  // The model's own store is the one perturbed by the checker.
  Var operator()(Tape& tape, const ParamStore&) const {
    const auto& d = model->dims;
    const std::size_t tk = d.tokens();
    std::vector<Var> sources{tape.constant(base_tokens)};
    std::vector<std::pair<std::uint32_t, std::uint32_t>> refs(nodes * tk);
    for (std::size_t r = 0; r < refs.size(); ++r) refs[r] = {0, static_cast<std::uint32_t>(r)};
    for (int n = 1; n <= d.layers; ++n) {
      Tensor prev(nodes, d.dim);
      for (std::size_t m = 0; m < nodes; ++m)
        for (std::size_t c = 0; c < d.dim; ++c) prev(m, c) = base_tokens(m * tk + n, c);
      sources.push_back(gru_update(tape, *model, n, tape.constant(prev), tape.constant(layer_messages[n - 1])));
      for (std::size_t m = 0; m < nodes; ++m)
        refs[m * tk + n] = {static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(m)};
    }
    const Var tokens = ops::gather_rows_multi(sources, refs);
    const Var z = encode(tape, *model, tokens);
    const Var zs = ops::gather_rows(z, src);
    const Var feats = tape.constant(edge_features);
    const std::array<Var, 3> pos{zs, feats, ops::gather_rows(z, dst)};
    const std::array<Var, 3> negs{zs, feats, ops::gather_rows(z, neg)};
    const Var pp = ops::sigmoid(link_logits(tape, *model, ops::concat_cols(pos)));
    const Var pn = ops::sigmoid(link_logits(tape, *model, ops::concat_cols(negs)));
    const Var link = ops::link_loss(pp, pn);
    const Var node = ops::softmax_cross_entropy(node_logits(tape, *model, z), labels);
    return ops::add(link, node);
  }
};

}  // namespace tpgnn::testing
