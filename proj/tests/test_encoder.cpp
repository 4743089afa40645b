#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "test_support.hpp"
#include "tpgnn/encoder.hpp"
#include "tpgnn/errors.hpp"
#include "tpgnn/memory_store.hpp"
#include "tpgnn/model.hpp"

using namespace tpgnn;
using namespace tpgnn::testing;

namespace {

ModelDims dims_of(std::size_t d, int k, bool layer_attention = true) {
  ModelDims dims;
  dims.dim = d;
  dims.edge_dim = 2;
  dims.layers = k;
  dims.heads = 2;
  dims.layer_attention = layer_attention;
  return dims;
}

NodeState random_state(std::size_t d, int k, std::mt19937_64& rng) {
  NodeState s;
  s.prev_repr = random_vector(d, rng);
  for (int n = 0; n < k; ++n) s.memories.push_back(random_vector(d, rng));
  return s;
}

void zero_bias_mlp(Model& m) {
  for (const auto& b : m.blocks)
    for (ParamId id : {b.bias_w1, b.bias_b1, b.bias_w2, b.bias_b2}) m.params[id].fill(0.0);
}

void zero_qk(Model& m) {
  for (const auto& b : m.blocks)
    for (int h = 0; h < m.dims.heads; ++h) {
      m.params[b.query[static_cast<std::size_t>(h)]].fill(0.0);
      m.params[b.key[static_cast<std::size_t>(h)]].fill(0.0);
    }
}

// Scalar two-layer MLP on a one-hot position code.
double bias_oracle(const Model& m, std::size_t position) {
  const auto& b = m.blocks[0];
  const Tensor &w1 = m.params[b.bias_w1], &b1 = m.params[b.bias_b1], &w2 = m.params[b.bias_w2];
  double out = m.params[b.bias_b2][0];
  for (std::size_t h = 0; h < w1.cols(); ++h) {
    const double pre = w1(position, h) + b1[h];
    out += std::max(pre, 0.0) * w2(h, 0);
  }
  return out;
}

}  // namespace

TEST_CASE("token sequence copies prev_repr then memories") {
  NodeState s;
  s.prev_repr = {1, 0};
  s.memories = {{0, 1}, {2, 2}};
  const TokenSequence seq = build_token_sequence(s);
  CHECK(seq.tokens == Tensor(3, 2, {1, 0, 0, 1, 2, 2}));
  CHECK(seq.position_codes == Tensor::identity(3));
}

TEST_CASE("fresh node gives k+1 zero tokens regardless of traffic") {
  MemoryStore store(2, 4, 3, 8);
  CHECK(build_token_sequence(store.init_node(0)).tokens == Tensor(5, 3, 0.0));
  for (int i = 0; i < 100; ++i) store.stage_message(1, 1 + i % 4, std::vector<double>(8, 1.0), i);
  CHECK(build_token_sequence(store.state(1)).tokens.rows() == 5);
}

TEST_CASE("layer bias examples") {
  Model m = Model::create(dims_of(4, 3), 3);
  std::vector<double> onehot(4, 0.0);
  onehot[2] = 1.0;
  CHECK_THROWS_AS(layer_bias(std::vector<double>(3, 0.0), m), ConfigError);

  randomize(m.params, 44);
  for (std::size_t j = 0; j < 4; ++j) {
    std::vector<double> code(4, 0.0);
    code[j] = 1.0;
    CHECK(std::abs(layer_bias(code, m) - bias_oracle(m, j)) < 1e-12);
  }
  Tape tape(false);
  const Tensor row = layer_biases(tape, m, 0).value();
  REQUIRE(row.rows() == 1);
  REQUIRE(row.cols() == 4);
  for (std::size_t j = 0; j < 4; ++j) CHECK(std::abs(row[j] - bias_oracle(m, j)) < 1e-12);

  // Identical first-layer rows give identical biases.
  Tensor& w1 = m.params[m.blocks[0].bias_w1];
  for (std::size_t h = 0; h < w1.cols(); ++h) w1(3, h) = w1(1, h);
  std::vector<double> a(4, 0.0), b(4, 0.0);
  a[1] = b[3] = 1.0;
  CHECK(layer_bias(a, m) == layer_bias(b, m));

  zero_bias_mlp(m);
  CHECK(layer_bias(onehot, m) == 0.0);
}

TEST_CASE("zero query and key maps give uniform attention") {
  Model m = Model::create(dims_of(4, 2), 5);
  zero_qk(m);
  std::mt19937_64 rng(6);
  Tape tape(false);
  const Var tokens = tape.constant(random_tensor(3, 4, rng));
  AttentionTrace trace;
  const Var out = attend(tape, m, 0, tokens, tape.constant(Tensor(1, 3)), &trace);
  for (const Var& w : trace.weights)
    for (double v : w.value().data()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-14));

  // Each output = token + out_proj(concat over heads of mean value vector).
  const auto& b = m.blocks[0];
  const Tensor& x = tokens.value();
  std::vector<double> mean_tok(4, 0.0);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 4; ++c) mean_tok[c] += x(r, c) / 3.0;
  std::vector<double> merged;
  for (int h = 0; h < 2; ++h) {
    const Tensor& wv = m.params[b.value[static_cast<std::size_t>(h)]];
    for (std::size_t c = 0; c < wv.cols(); ++c) {
      double s = 0.0;
      for (std::size_t i = 0; i < 4; ++i) s += mean_tok[i] * wv(i, c);
      merged.push_back(s);
    }
  }
  const Tensor& wo = m.params[b.out_w];
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 4; ++c) {
      double proj = m.params[b.out_b][c];
      for (std::size_t i = 0; i < 4; ++i) proj += merged[i] * wo(i, c);
      CHECK(out.value()(r, c) == doctest::Approx(x(r, c) + proj).epsilon(1e-12));
    }
}

TEST_CASE("a dominant bias pulls all attention to its token") {
  Model m = Model::create(dims_of(4, 3), 5);
  zero_qk(m);
  std::mt19937_64 rng(7);
  Tape tape(false);
  AttentionTrace trace;
  attend(tape, m, 0, tape.constant(random_tensor(8, 4, rng)), tape.constant(Tensor::row({0, 1e6, 0, 0})), &trace);
  for (const Var& w : trace.weights)
    for (std::size_t r = 0; r < w.value().rows(); ++r) CHECK(w.value()(r, 1) == doctest::Approx(1.0));
}

TEST_CASE("shifting all biases leaves attention unchanged") {
  const Model m = Model::create(dims_of(4, 3), 8);
  std::mt19937_64 rng(9);
  const Tensor toks = random_tensor(8, 4, rng);
  auto weights = [&](std::vector<double> bias) {
    Tape tape(false);
    AttentionTrace trace;
    attend(tape, m, 0, tape.constant(toks), tape.constant(Tensor::row(bias)), &trace);
    return trace.weights[0].value();
  };
  const Tensor a = weights({0.3, -1.0, 2.0, 0.5});
  const Tensor b = weights({5.3, 4.0, 7.0, 5.5});
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
}

TEST_CASE("attention rows sum to one") {
  Model m = Model::create(dims_of(6, 4), 10);
  randomize(m.params, 10, 1.5);
  std::mt19937_64 rng(11);
  Tape tape(false);
  AttentionTrace trace;
  attend(tape, m, 0, tape.constant(random_tensor(15, 6, rng, -3, 3)), layer_biases(tape, m, 0), &trace);
  for (const Var& w : trace.weights)
    for (std::size_t r = 0; r < w.value().rows(); ++r) {
      double s = 0.0;
      for (double v : w.value().row_span(r)) s += v;
      CHECK(std::abs(s - 1.0) < 1e-12);
    }
}

TEST_CASE("fresh nodes encode to the same finite vector") {
  const Model m = Model::create(dims_of(8, 3), 12);
  MemoryStore store(3, 3, 8, 18);
  const auto a = encode_node(store.init_node(0), m);
  const auto b = encode_node(store.init_node(2), m);
  for (double v : a) CHECK(std::isfinite(v));
  CHECK(a == b);
}

TEST_CASE("identical tokens pool to the per-token output") {
  Model m = Model::create(dims_of(4, 1), 13);
  randomize(m.params, 13);
  std::mt19937_64 rng(14);
  NodeState s;
  s.prev_repr = random_vector(4, rng);
  s.memories = {s.prev_repr};
  const auto z = encode_node(s, m);

  // Rebuild the block without pooling and read each row.
  Tape tape(false);
  const auto& b = m.blocks[0];
  auto p = [&](ParamId id) { return tape.param(m.params, id); };
  const Var toks = tape.constant(build_token_sequence(s).tokens);
  const Var att = attend(tape, m, 0, toks, layer_biases(tape, m, 0));
  const Var h = ops::add_rowvec(ops::mul_rowvec(ops::layernorm_rows(att), p(b.norm1_gain)), p(b.norm1_bias));
  const Var inner = ops::relu(ops::add_rowvec(ops::matmul(h, p(b.ffn_w1)), p(b.ffn_b1)));
  const Var ffn = ops::add_rowvec(ops::matmul(inner, p(b.ffn_w2)), p(b.ffn_b2));
  const Var y = ops::add_rowvec(ops::mul_rowvec(ops::layernorm_rows(ops::add(h, ffn)), p(b.norm2_gain)),
                                p(b.norm2_bias));
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < 4; ++c) CHECK(y.value()(r, c) == doctest::Approx(z[c]).epsilon(1e-12));
}

TEST_CASE("batched encode equals per-node encode") {
  Model m = Model::create(dims_of(8, 3), 15);
  randomize(m.params, 15);
  std::mt19937_64 rng(16);
  std::vector<NodeState> states;
  Tensor stacked(0, 0);
  std::vector<double> all;
  for (int i = 0; i < 5; ++i) {
    states.push_back(random_state(8, 3, rng));
    const auto t = build_token_sequence(states.back()).tokens;
    all.insert(all.end(), t.data().begin(), t.data().end());
  }
  Tape tape(false);
  const Tensor z = encode(tape, m, tape.constant(Tensor(20, 8, all))).value();
  for (std::size_t i = 0; i < 5; ++i) {
    const auto single = encode_node(states[i], m);
    for (std::size_t c = 0; c < 8; ++c) CHECK(z(i, c) == single[c]);
  }
}

TEST_CASE("ablation short-circuits the bias MLP") {
  Model full = Model::create(dims_of(8, 3, true), 17);
  randomize(full.params, 17);
  Model ablated = full;
  ablated.dims.layer_attention = false;
  Model zeroed = full;
  zero_bias_mlp(zeroed);
  std::mt19937_64 rng(18);
  const NodeState s = random_state(8, 3, rng);
  const auto za = encode_node(s, ablated);
  const auto zz = encode_node(s, zeroed);
  for (std::size_t c = 0; c < 8; ++c) CHECK(za[c] == doctest::Approx(zz[c]).epsilon(1e-14));
  CHECK(encode_node(s, full) != za);

  Tape tape(false);
  CHECK(layer_biases(tape, ablated, 0).value() == Tensor(1, 4, 0.0));
}

TEST_CASE("with ablation, permuting memory tokens leaves z unchanged") {
  Model m = Model::create(dims_of(8, 3, false), 19);
  randomize(m.params, 19);
  std::mt19937_64 rng(20);
  NodeState s = random_state(8, 3, rng);
  const auto z = encode_node(s, m);
  std::swap(s.memories[0], s.memories[2]);
  const auto zp = encode_node(s, m);
  for (std::size_t c = 0; c < 8; ++c) CHECK(zp[c] == doctest::Approx(z[c]).epsilon(1e-12));
}

TEST_CASE("encoder gradients match finite differences at d=8, k=3") {
  Model m = Model::create(dims_of(8, 3), 21);
  randomize(m.params, 21);
  std::mt19937_64 rng(22);
  const Tensor toks = random_tensor(3 * 4, 8, rng);
  const Tensor w = random_tensor(3, 8, rng);
  std::vector<ParamId> ids;
  for (ParamId i = 0; i < m.params.size(); ++i)
    if (m.params.name(i).rfind("enc", 0) == 0) ids.push_back(i);
  REQUIRE(!ids.empty());
  for (bool train : {false, true}) {
    const auto r = check_param_gradients(
        m.params,
        [&](Tape& t, const ParamStore&) {
          return ops::mean_all(ops::mul(encode(t, m, t.constant(toks)), t.constant(w)));
        },
        train, 23, 1e-5, ids);
    CAPTURE(r.worst);
    CHECK(r.max_rel_error < 1e-4);
  }
  CHECK(check_input_gradient(toks, [&](Tape& t, Var x) {
          return ops::mean_all(ops::mul(encode(t, m, x), t.constant(w)));
        }) < 1e-4);
}
