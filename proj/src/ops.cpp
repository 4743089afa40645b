#include "tpgnn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "tpgnn/errors.hpp"

namespace tpgnn::ops {
namespace {

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw ConfigError(std::string(op) + ": incompatible shapes " + a.shape_string() + " and " + b.shape_string());
}

Tape& tape_of(Var v) {
  if (!v.valid()) throw UsageError("op on an unbound Var");
  return *v.tape();
}

// out += a * b
void gemm_nn(const Tensor& a, const Tensor& b, Tensor& out) {
  const std::size_t m = a.rows(), n = a.cols(), p = b.cols();
  const double* ad = a.data().data();
  const double* bd = b.data().data();
  double* od = out.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    double* orow = od + i * p;
    for (std::size_t l = 0; l < n; ++l) {
      const double av = ad[i * n + l];
      if (av == 0.0) continue;
      const double* brow = bd + l * p;
      for (std::size_t j = 0; j < p; ++j) orow[j] += av * brow[j];
    }
  }
}

// out += a * b^T
void gemm_nt(const Tensor& a, const Tensor& b, Tensor& out) {
  const std::size_t m = a.rows(), n = a.cols(), p = b.rows();
  const double* ad = a.data().data();
  const double* bd = b.data().data();
  double* od = out.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = ad + i * n;
    for (std::size_t j = 0; j < p; ++j) {
      const double* brow = bd + j * n;
      double acc = 0.0;
      for (std::size_t l = 0; l < n; ++l) acc += arow[l] * brow[l];
      od[i * p + j] += acc;
    }
  }
}

// out += a^T * b
void gemm_tn(const Tensor& a, const Tensor& b, Tensor& out) {
  const std::size_t m = a.rows(), n = a.cols(), p = b.cols();
  const double* ad = a.data().data();
  const double* bd = b.data().data();
  double* od = out.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* brow = bd + i * p;
    for (std::size_t l = 0; l < n; ++l) {
      const double av = ad[i * n + l];
      if (av == 0.0) continue;
      double* orow = od + l * p;
      for (std::size_t j = 0; j < p; ++j) orow[j] += av * brow[j];
    }
  }
}

template <typename F, typename D>
Var unary(Var a, F f, D dfdy_from_xy) {
  Tape& t = tape_of(a);
  const Tensor& x = a.value();
  Tensor y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  return t.record(std::move(y), {a}, [a, dfdy_from_xy](Tape& tp, const Tensor& out, const Tensor& g) {
    Tensor* ga = tp.grad_buffer(a);
    if (!ga) return;
    const Tensor& x = a.value();
    for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * dfdy_from_xy(x[i], out[i]);
  });
}

void require_same(const char* op, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) shape_error(op, a, b);
}

}  // namespace

Var matmul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols() != bv.rows()) shape_error("matmul", av, bv);
  Tensor out(av.rows(), bv.cols());
  gemm_nn(av, bv, out);
  return tape_of(a).record(std::move(out), {a, b}, [a, b](Tape& tp, const Tensor&, const Tensor& g) {
    if (Tensor* ga = tp.grad_buffer(a)) gemm_nt(g, b.value(), *ga);
    if (Tensor* gb = tp.grad_buffer(b)) gemm_tn(a.value(), g, *gb);
  });
}

Var matmul_bt(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols() != bv.cols()) shape_error("matmul_bt", av, bv);
  Tensor out(av.rows(), bv.rows());
  gemm_nt(av, bv, out);
  return tape_of(a).record(std::move(out), {a, b}, [a, b](Tape& tp, const Tensor&, const Tensor& g) {
    if (Tensor* ga = tp.grad_buffer(a)) gemm_nn(g, b.value(), *ga);
    if (Tensor* gb = tp.grad_buffer(b)) gemm_tn(g, a.value(), *gb);
  });
}

Var transpose(Var a) {
  const Tensor& x = a.value();
  Tensor out(x.cols(), x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) out(c, r) = x(r, c);
  return tape_of(a).record(std::move(out), {a}, [a](Tape& tp, const Tensor&, const Tensor& g) {
    Tensor* ga = tp.grad_buffer(a);
    if (!ga) return;
    for (std::size_t r = 0; r < ga->rows(); ++r)
      for (std::size_t c = 0; c < ga->cols(); ++c) (*ga)(r, c) += g(c, r);
  });
}

Var add(Var a, Var b) {
  require_same("add", a.value(), b.value());
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return tape_of(a).record(std::move(out), {a, b}, [a, b](Tape& tp, const Tensor&, const Tensor& g) {
    tp.accumulate(a, g);
    tp.accumulate(b, g);
  });
}

Var sub(Var a, Var b) {
  require_same("sub", a.value(), b.value());
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return tape_of(a).record(std::move(out), {a, b}, [a, b](Tape& tp, const Tensor&, const Tensor& g) {
    tp.accumulate(a, g);
    if (Tensor* gb = tp.grad_buffer(b))
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] -= g[i];
  });
}

Var mul(Var a, Var b) {
  require_same("mul", a.value(), b.value());
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return tape_of(a).record(std::move(out), {a, b}, [a, b](Tape& tp, const Tensor&, const Tensor& g) {
    if (Tensor* ga = tp.grad_buffer(a))
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * b.value()[i];
    if (Tensor* gb = tp.grad_buffer(b))
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i] * a.value()[i];
  });
}

Var add_rowvec(Var a, Var row) {
  const Tensor& av = a.value();
  const Tensor& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != av.cols()) shape_error("add_rowvec", av, rv);
  Tensor out = av;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += rv[c];
  return tape_of(a).record(std::move(out), {a, row}, [a, row](Tape& tp, const Tensor&, const Tensor& g) {
    tp.accumulate(a, g);
    if (Tensor* gr = tp.grad_buffer(row))
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) (*gr)[c] += g(r, c);
  });
}

Var mul_rowvec(Var a, Var row) {
  const Tensor& av = a.value();
  const Tensor& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != av.cols()) shape_error("mul_rowvec", av, rv);
  Tensor out = av;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) *= rv[c];
  return tape_of(a).record(std::move(out), {a, row}, [a, row](Tape& tp, const Tensor&, const Tensor& g) {
    const Tensor& av = a.value();
    const Tensor& rv = row.value();
    if (Tensor* ga = tp.grad_buffer(a))
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) (*ga)(r, c) += g(r, c) * rv[c];
    if (Tensor* gr = tp.grad_buffer(row))
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) (*gr)[c] += g(r, c) * av(r, c);
  });
}

Var affine(Var a, double scale, double shift) {
  return unary(
      a, [scale, shift](double x) { return scale * x + shift; }, [scale](double, double) { return scale; });
}

Var sigmoid(Var a) {
  return unary(
      a,
      [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var a) {
  return unary(
      a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var relu(Var a) {
  return unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw UsageError("concat_cols: no inputs");
  const std::size_t rows = parts.front().value().rows();
  std::size_t cols = 0;
  for (const Var& p : parts) {
    if (p.value().rows() != rows) shape_error("concat_cols", parts.front().value(), p.value());
    cols += p.value().cols();
  }
  Tensor out(rows, cols);
  std::size_t off = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    for (std::size_t r = 0; r < rows; ++r)
      std::copy(v.row_span(r).begin(), v.row_span(r).end(), out.row_span(r).begin() + off);
    off += v.cols();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return tape_of(parts.front())
      .record(std::move(out), parts, [inputs](Tape& tp, const Tensor&, const Tensor& g) {
        std::size_t off = 0;
        for (const Var& p : inputs) {
          const std::size_t w = p.value().cols();
          if (Tensor* gp = tp.grad_buffer(p))
            for (std::size_t r = 0; r < g.rows(); ++r)
              for (std::size_t c = 0; c < w; ++c) (*gp)(r, c) += g(r, off + c);
          off += w;
        }
      });
}

Var stack_rows(std::span<const Var> parts) {
  if (parts.empty()) throw UsageError("stack_rows: no inputs");
  const std::size_t cols = parts.front().value().cols();
  std::size_t rows = 0;
  for (const Var& p : parts) {
    if (p.value().cols() != cols) shape_error("stack_rows", parts.front().value(), p.value());
    rows += p.value().rows();
  }
  Tensor out(rows, cols);
  auto dst = out.data().begin();
  for (const Var& p : parts) dst = std::copy(p.value().data().begin(), p.value().data().end(), dst);
  std::vector<Var> inputs(parts.begin(), parts.end());
  return tape_of(parts.front())
      .record(std::move(out), parts, [inputs](Tape& tp, const Tensor&, const Tensor& g) {
        std::size_t off = 0;
        for (const Var& p : inputs) {
          const std::size_t n = p.value().size();
          if (Tensor* gp = tp.grad_buffer(p))
            for (std::size_t i = 0; i < n; ++i) (*gp)[i] += g[off + i];
          off += n;
        }
      });
}

Var gather_rows(Var a, std::span<const std::uint32_t> rows) {
  const Tensor& av = a.value();
  Tensor out(rows.size(), av.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= av.rows()) throw UsageError("gather_rows: row index out of range");
    std::copy(av.row_span(rows[i]).begin(), av.row_span(rows[i]).end(), out.row_span(i).begin());
  }
  std::vector<std::uint32_t> idx(rows.begin(), rows.end());
  return tape_of(a).record(std::move(out), {a}, [a, idx](Tape& tp, const Tensor&, const Tensor& g) {
    Tensor* ga = tp.grad_buffer(a);
    if (!ga) return;
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t c = 0; c < g.cols(); ++c) (*ga)(idx[i], c) += g(i, c);
  });
}

Var gather_rows_multi(std::span<const Var> sources,
                      std::span<const std::pair<std::uint32_t, std::uint32_t>> refs) {
  if (sources.empty()) throw UsageError("gather_rows_multi: no sources");
  const std::size_t cols = sources.front().value().cols();
  for (const Var& s : sources)
    if (s.value().cols() != cols) shape_error("gather_rows_multi", sources.front().value(), s.value());
  Tensor out(refs.size(), cols);
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const auto [src, row] = refs[i];
    if (src >= sources.size() || row >= sources[src].value().rows()) {
      throw UsageError("gather_rows_multi: reference out of range");
    }
    const auto r = sources[src].value().row_span(row);
    std::copy(r.begin(), r.end(), out.row_span(i).begin());
  }
  std::vector<Var> inputs(sources.begin(), sources.end());
  std::vector<std::pair<std::uint32_t, std::uint32_t>> idx(refs.begin(), refs.end());
  return tape_of(sources.front())
      .record(std::move(out), sources, [inputs, idx](Tape& tp, const Tensor&, const Tensor& g) {
        for (std::size_t i = 0; i < idx.size(); ++i) {
          Tensor* gs = tp.grad_buffer(inputs[idx[i].first]);
          if (!gs) continue;
          for (std::size_t c = 0; c < g.cols(); ++c) (*gs)(idx[i].second, c) += g(i, c);
        }
      });
}

Var softmax_rows(Var a) {
  const Tensor& x = a.value();
  Tensor out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto in = x.row_span(r);
    auto o = out.row_span(r);
    const double mx = *std::max_element(in.begin(), in.end());
    double sum = 0.0;
    for (std::size_t c = 0; c < in.size(); ++c) {
      o[c] = std::exp(in[c] - mx);
      sum += o[c];
    }
    for (double& v : o) v /= sum;
  }
  return tape_of(a).record(std::move(out), {a}, [a](Tape& tp, const Tensor& y, const Tensor& g) {
    Tensor* ga = tp.grad_buffer(a);
    if (!ga) return;
    for (std::size_t r = 0; r < y.rows(); ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < y.cols(); ++c) dot += g(r, c) * y(r, c);
      for (std::size_t c = 0; c < y.cols(); ++c) (*ga)(r, c) += y(r, c) * (g(r, c) - dot);
    }
  });
}

Var mean_rows(Var a) {
  const Tensor& x = a.value();
  if (x.rows() == 0) throw UsageError("mean_rows: empty input");
  Tensor out(1, x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) out[c] += x(r, c);
  for (double& v : out.data()) v /= static_cast<double>(x.rows());
  return tape_of(a).record(std::move(out), {a}, [a](Tape& tp, const Tensor&, const Tensor& g) {
    Tensor* ga = tp.grad_buffer(a);
    if (!ga) return;
    const double inv = 1.0 / static_cast<double>(ga->rows());
    for (std::size_t r = 0; r < ga->rows(); ++r)
      for (std::size_t c = 0; c < ga->cols(); ++c) (*ga)(r, c) += g[c] * inv;
  });
}

Var mean_all(Var a) {
  const Tensor& x = a.value();
  if (x.size() == 0) throw UsageError("mean_all: empty input");
  double sum = 0.0;
  for (double v : x.data()) sum += v;
  Tensor out(1, 1, sum / static_cast<double>(x.size()));
  return tape_of(a).record(std::move(out), {a}, [a](Tape& tp, const Tensor&, const Tensor& g) {
    Tensor* ga = tp.grad_buffer(a);
    if (!ga) return;
    const double share = g[0] / static_cast<double>(ga->size());
    for (double& v : ga->data()) v += share;
  });
}

Var layernorm_rows(Var a, double eps) {
  const Tensor& x = a.value();
  const std::size_t n = x.cols();
  Tensor out(x.rows(), n);
  std::vector<double> inv_std(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto in = x.row_span(r);
    double mu = 0.0;
    for (double v : in) mu += v;
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (double v : in) var += (v - mu) * (v - mu);
    var /= static_cast<double>(n);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < n; ++c) out(r, c) = (in[c] - mu) * inv_std[r];
  }
  return tape_of(a).record(std::move(out), {a},
                           [a, inv_std = std::move(inv_std)](Tape& tp, const Tensor& y, const Tensor& g) {
                             Tensor* ga = tp.grad_buffer(a);
                             if (!ga) return;
                             const double n = static_cast<double>(y.cols());
                             for (std::size_t r = 0; r < y.rows(); ++r) {
                               double gmean = 0.0, gy = 0.0;
                               for (std::size_t c = 0; c < y.cols(); ++c) {
                                 gmean += g(r, c);
                                 gy += g(r, c) * y(r, c);
                               }
                               gmean /= n;
                               gy /= n;
                               for (std::size_t c = 0; c < y.cols(); ++c)
                                 (*ga)(r, c) += inv_std[r] * (g(r, c) - gmean - y(r, c) * gy);
                             }
                           });
}

Var dropout(Var a, double p) {
  if (!(p >= 0.0 && p < 1.0)) throw UsageError("dropout rate must lie in [0,1), got " + std::to_string(p));
  Tape& t = tape_of(a);
  if (!t.training() || p == 0.0) return a;
  const Tensor& x = a.value();
  Tensor mask(x.rows(), x.cols());
  std::bernoulli_distribution keep(1.0 - p);
  const double scale = 1.0 / (1.0 - p);
  for (double& m : mask.data()) m = keep(t.rng()) ? scale : 0.0;
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  return t.record(std::move(out), {a}, [a, mask = std::move(mask)](Tape& tp, const Tensor&, const Tensor& g) {
    Tensor* ga = tp.grad_buffer(a);
    if (!ga) return;
    for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * mask[i];
  });
}

Var block_matmul_bt(Var a, Var b, std::size_t block) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (!av.same_shape(bv) || block == 0 || av.rows() % block != 0) shape_error("block_matmul_bt", av, bv);
  const std::size_t blocks = av.rows() / block, n = av.cols();
  Tensor out(av.rows(), block);
  for (std::size_t m = 0; m < blocks; ++m)
    for (std::size_t i = 0; i < block; ++i)
      for (std::size_t j = 0; j < block; ++j) {
        double acc = 0.0;
        const auto ar = av.row_span(m * block + i);
        const auto br = bv.row_span(m * block + j);
        for (std::size_t l = 0; l < n; ++l) acc += ar[l] * br[l];
        out(m * block + i, j) = acc;
      }
  return tape_of(a).record(std::move(out), {a, b}, [a, b, block](Tape& tp, const Tensor&, const Tensor& g) {
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    Tensor* ga = tp.grad_buffer(a);
    Tensor* gb = tp.grad_buffer(b);
    const std::size_t blocks = av.rows() / block, n = av.cols();
    for (std::size_t m = 0; m < blocks; ++m)
      for (std::size_t i = 0; i < block; ++i)
        for (std::size_t j = 0; j < block; ++j) {
          const double gij = g(m * block + i, j);
          if (gij == 0.0) continue;
          const std::size_t ri = m * block + i, rj = m * block + j;
          for (std::size_t l = 0; l < n; ++l) {
            if (ga) (*ga)(ri, l) += gij * bv(rj, l);
            if (gb) (*gb)(rj, l) += gij * av(ri, l);
          }
        }
  });
}

Var block_matmul(Var p, Var v, std::size_t block) {
  const Tensor& pv = p.value();
  const Tensor& vv = v.value();
  if (block == 0 || pv.cols() != block || pv.rows() != vv.rows() || pv.rows() % block != 0)
    shape_error("block_matmul", pv, vv);
  const std::size_t blocks = pv.rows() / block, n = vv.cols();
  Tensor out(pv.rows(), n);
  for (std::size_t m = 0; m < blocks; ++m)
    for (std::size_t i = 0; i < block; ++i) {
      auto o = out.row_span(m * block + i);
      for (std::size_t j = 0; j < block; ++j) {
        const double w = pv(m * block + i, j);
        const auto vr = vv.row_span(m * block + j);
        for (std::size_t l = 0; l < n; ++l) o[l] += w * vr[l];
      }
    }
  return tape_of(p).record(std::move(out), {p, v}, [p, v, block](Tape& tp, const Tensor&, const Tensor& g) {
    const Tensor& pv = p.value();
    const Tensor& vv = v.value();
    Tensor* gp = tp.grad_buffer(p);
    Tensor* gv = tp.grad_buffer(v);
    const std::size_t blocks = pv.rows() / block, n = vv.cols();
    for (std::size_t m = 0; m < blocks; ++m)
      for (std::size_t i = 0; i < block; ++i) {
        const auto gr = g.row_span(m * block + i);
        for (std::size_t j = 0; j < block; ++j) {
          const std::size_t rj = m * block + j;
          if (gp) {
            double acc = 0.0;
            for (std::size_t l = 0; l < n; ++l) acc += gr[l] * vv(rj, l);
            (*gp)(m * block + i, j) += acc;
          }
          if (gv) {
            const double w = pv(m * block + i, j);
            for (std::size_t l = 0; l < n; ++l) (*gv)(rj, l) += w * gr[l];
          }
        }
      }
  });
}

Var block_mean_rows(Var a, std::size_t block) {
  const Tensor& x = a.value();
  if (block == 0 || x.rows() % block != 0) shape_error("block_mean_rows", x, Tensor(block, x.cols()));
  const std::size_t blocks = x.rows() / block;
  Tensor out(blocks, x.cols());
  const double inv = 1.0 / static_cast<double>(block);
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) out(r / block, c) += x(r, c);
  for (double& v : out.data()) v *= inv;
  return tape_of(a).record(std::move(out), {a}, [a, block](Tape& tp, const Tensor&, const Tensor& g) {
    Tensor* ga = tp.grad_buffer(a);
    if (!ga) return;
    const double inv = 1.0 / static_cast<double>(block);
    for (std::size_t r = 0; r < ga->rows(); ++r)
      for (std::size_t c = 0; c < ga->cols(); ++c) (*ga)(r, c) += g(r / block, c) * inv;
  });
}

Var link_loss(Var pos_probs, Var neg_probs) {
  const Tensor& pp = pos_probs.value();
  const Tensor& np = neg_probs.value();
  if (pp.size() != np.size() || pp.size() == 0) shape_error("link_loss", pp, np);
  constexpr double lo = kProbabilityClamp, hi = 1.0 - kProbabilityClamp;
  double total = 0.0;
  for (std::size_t i = 0; i < pp.size(); ++i) {
    total -= std::log(std::clamp(pp[i], lo, hi));
    total -= std::log(1.0 - std::clamp(np[i], lo, hi));
  }
  const double count = static_cast<double>(pp.size());
  Tensor out(1, 1, total / count);
  return tape_of(pos_probs)
      .record(std::move(out), {pos_probs, neg_probs},
              [pos_probs, neg_probs, count](Tape& tp, const Tensor&, const Tensor& g) {
                const double s = g[0] / count;
                if (Tensor* gp = tp.grad_buffer(pos_probs)) {
                  const Tensor& v = pos_probs.value();
                  for (std::size_t i = 0; i < v.size(); ++i)
                    if (v[i] > lo && v[i] < hi) (*gp)[i] -= s / v[i];
                }
                if (Tensor* gn = tp.grad_buffer(neg_probs)) {
                  const Tensor& v = neg_probs.value();
                  for (std::size_t i = 0; i < v.size(); ++i)
                    if (v[i] > lo && v[i] < hi) (*gn)[i] += s / (1.0 - v[i]);
                }
              });
}

Var softmax_cross_entropy(Var logits, std::span<const int> labels) {
  const Tensor& x = logits.value();
  if (labels.size() != x.rows() || x.rows() == 0) {
    throw ConfigError("softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for logits " +
                      x.shape_string());
  }
  Tensor probs(x.rows(), x.cols());
  double total = 0.0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const int label = labels[r];
    if (label < 0 || static_cast<std::size_t>(label) >= x.cols()) throw UsageError("class label out of range");
    const auto in = x.row_span(r);
    const double mx = *std::max_element(in.begin(), in.end());
    double sum = 0.0;
    for (std::size_t c = 0; c < in.size(); ++c) sum += std::exp(in[c] - mx);
    const double lse = mx + std::log(sum);
    for (std::size_t c = 0; c < in.size(); ++c) probs(r, c) = std::exp(in[c] - lse);
    total += lse - in[static_cast<std::size_t>(label)];
  }
  const double count = static_cast<double>(x.rows());
  std::vector<int> lab(labels.begin(), labels.end());
  return tape_of(logits).record(
      Tensor(1, 1, total / count), {logits},
      [logits, probs = std::move(probs), lab = std::move(lab), count](Tape& tp, const Tensor&, const Tensor& g) {
        Tensor* gl = tp.grad_buffer(logits);
        if (!gl) return;
        const double s = g[0] / count;
        for (std::size_t r = 0; r < probs.rows(); ++r)
          for (std::size_t c = 0; c < probs.cols(); ++c)
            (*gl)(r, c) += s * (probs(r, c) - (static_cast<int>(c) == lab[r] ? 1.0 : 0.0));
      });
}

}  // namespace tpgnn::ops
