#include "nmt/numcore/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "nmt/numcore/kernels.hpp"

namespace nmt::num {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) fail(ErrorKind::ShapeError, what);
}

template <typename T>
void require_matrix(const Tensor<T>& t, const char* op) {
  require(t.rank() == 2, std::string(op) + ": expected a matrix, got " + shape_string(t.shape()));
}

template <typename T>
void require_same(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  require(a.same_shape(b), std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                               shape_string(b.shape()));
}

template <typename T>
void add_into(Tensor<T>& dst, const Tensor<T>& src, T factor = T{1}) {
  kernels::active<T>().axpy(factor, src.raw(), dst.raw(), src.size());
}

}  // namespace

template <typename T>
Tensor<T> matmul_values(const Tensor<T>& a, const Tensor<T>& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  require(a.cols() == b.rows(), "matmul: inner dimensions differ " + shape_string(a.shape()) + " x " +
                                    shape_string(b.shape()));
  Tensor<T> c({a.rows(), b.cols()});
  kernels::active<T>().gemm_nn(a.raw(), b.raw(), c.raw(), a.rows(), a.cols(), b.cols());
  return c;
}

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
  const Tensor<T>& av = a.value();
  const Tensor<T>& bv = b.value();
  Tensor<T> out = matmul_values(av, bv);
  const std::size_t p = av.rows(), q = av.cols(), r = bv.cols();
  return a.tape()->record(std::move(out), {a, b}, [a, b, p, q, r](BackwardContext<T>& ctx) {
    const auto& k = kernels::active<T>();
    const Tensor<T>& g = ctx.grad();
    if (ctx.needs(a)) k.gemm_nt(g.raw(), ctx.value(b).raw(), ctx.grad_of(a).raw(), p, r, q);
    if (ctx.needs(b)) k.gemm_tn(ctx.value(a).raw(), g.raw(), ctx.grad_of(b).raw(), q, p, r);
  });
}

template <typename T>
Var<T> matmul_nt(Var<T> a, Var<T> b) {
  const Tensor<T>& av = a.value();
  const Tensor<T>& bv = b.value();
  require_matrix(av, "matmul_nt");
  require_matrix(bv, "matmul_nt");
  require(av.cols() == bv.cols(), "matmul_nt: inner dimensions differ " + shape_string(av.shape()) + " x " +
                                      shape_string(bv.shape()) + "^T");
  const std::size_t p = av.rows(), q = av.cols(), r = bv.rows();
  Tensor<T> out({p, r});
  kernels::active<T>().gemm_nt(av.raw(), bv.raw(), out.raw(), p, q, r);
  return a.tape()->record(std::move(out), {a, b}, [a, b, p, q, r](BackwardContext<T>& ctx) {
    const auto& k = kernels::active<T>();
    const Tensor<T>& g = ctx.grad();
    if (ctx.needs(a)) k.gemm_nn(g.raw(), ctx.value(b).raw(), ctx.grad_of(a).raw(), p, r, q);
    if (ctx.needs(b)) k.gemm_tn(g.raw(), ctx.value(a).raw(), ctx.grad_of(b).raw(), r, p, q);
  });
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  const Tensor<T>& av = a.value();
  const Tensor<T>& bv = b.value();
  require_same(av, bv, "add");
  Tensor<T> out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return a.tape()->record(std::move(out), {a, b}, [a, b](BackwardContext<T>& ctx) {
    if (ctx.needs(a)) add_into(ctx.grad_of(a), ctx.grad());
    if (ctx.needs(b)) add_into(ctx.grad_of(b), ctx.grad());
  });
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
  const Tensor<T>& av = a.value();
  const Tensor<T>& bv = b.value();
  require_same(av, bv, "sub");
  Tensor<T> out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return a.tape()->record(std::move(out), {a, b}, [a, b](BackwardContext<T>& ctx) {
    if (ctx.needs(a)) add_into(ctx.grad_of(a), ctx.grad());
    if (ctx.needs(b)) add_into(ctx.grad_of(b), ctx.grad(), T{-1});
  });
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  const Tensor<T>& av = a.value();
  const Tensor<T>& bv = b.value();
  require_same(av, bv, "mul");
  Tensor<T> out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return a.tape()->record(std::move(out), {a, b}, [a, b](BackwardContext<T>& ctx) {
    const Tensor<T>& g = ctx.grad();
    if (ctx.needs(a)) {
      Tensor<T>& ga = ctx.grad_of(a);
      const Tensor<T>& bv = ctx.value(b);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (ctx.needs(b)) {
      Tensor<T>& gb = ctx.grad_of(b);
      const Tensor<T>& av = ctx.value(a);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

template <typename T>
Var<T> add_row(Var<T> m, Var<T> bias) {
  const Tensor<T>& mv = m.value();
  const Tensor<T>& bv = bias.value();
  require(bv.rank() == 1 && bv.size() == mv.cols(),
          "add_row: bias " + shape_string(bv.shape()) + " does not match rows of " + shape_string(mv.shape()));
  Tensor<T> out = mv;
  const std::size_t rows = mv.rows(), cols = mv.cols();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out(r, c) += bv[c];
  return m.tape()->record(std::move(out), {m, bias}, [m, bias, rows, cols](BackwardContext<T>& ctx) {
    const Tensor<T>& g = ctx.grad();
    if (ctx.needs(m)) add_into(ctx.grad_of(m), g);
    if (ctx.needs(bias)) {
      Tensor<T>& gb = ctx.grad_of(bias);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) gb[c] += g[r * cols + c];
    }
  });
}

template <typename T>
Var<T> scale(Var<T> a, T factor) {
  Tensor<T> out = a.value();
  for (T& x : out.data()) x *= factor;
  return a.tape()->record(std::move(out), {a}, [a, factor](BackwardContext<T>& ctx) {
    add_into(ctx.grad_of(a), ctx.grad(), factor);
  });
}

template <typename T>
Var<T> gelu(Var<T> a) {
  constexpr T kC = T(0.7978845608028654);  // sqrt(2 / pi)
  constexpr T kA = T(0.044715);
  Tensor<T> out = a.value();
  for (T& x : out.data()) x = T(0.5) * x * (T(1) + std::tanh(kC * (x + kA * x * x * x)));
  return a.tape()->record(std::move(out), {a}, [a](BackwardContext<T>& ctx) {
    const Tensor<T>& x = ctx.value(a);
    const Tensor<T>& g = ctx.grad();
    Tensor<T>& gx = ctx.grad_of(a);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const T v = x[i];
      const T t = std::tanh(kC * (v + kA * v * v * v));
      const T dt = (T(1) - t * t) * kC * (T(1) + T(3) * kA * v * v);
      gx[i] += g[i] * (T(0.5) * (T(1) + t) + T(0.5) * v * dt);
    }
  });
}

template <typename T>
Var<T> layer_norm_rows(Var<T> x, Var<T> gamma, Var<T> beta, T eps) {
  const Tensor<T>& xv = x.value();
  const Tensor<T>& gv = gamma.value();
  const Tensor<T>& bv = beta.value();
  require_matrix(xv, "layer_norm_rows");
  const std::size_t rows = xv.rows(), cols = xv.cols();
  require(gv.rank() == 1 && gv.size() == cols && bv.same_shape(gv), "layer_norm_rows: affine width mismatch");
  Tensor<T> normalized({rows, cols});
  std::vector<T> inv_std(rows);
  Tensor<T> out({rows, cols});
  for (std::size_t r = 0; r < rows; ++r) {
    T mean = 0;
    for (std::size_t c = 0; c < cols; ++c) mean += xv(r, c);
    mean /= T(cols);
    T var = 0;
    for (std::size_t c = 0; c < cols; ++c) var += (xv(r, c) - mean) * (xv(r, c) - mean);
    var /= T(cols);
    inv_std[r] = T(1) / std::sqrt(var + eps);
    for (std::size_t c = 0; c < cols; ++c) {
      normalized(r, c) = (xv(r, c) - mean) * inv_std[r];
      out(r, c) = gv[c] * normalized(r, c) + bv[c];
    }
  }
  return x.tape()->record(
      std::move(out), {x, gamma, beta},
      [x, gamma, beta, rows, cols, normalized = std::move(normalized), inv_std = std::move(inv_std)](
          BackwardContext<T>& ctx) {
        const Tensor<T>& g = ctx.grad();
        const Tensor<T>& gv = ctx.value(gamma);
        if (ctx.needs(gamma) || ctx.needs(beta)) {
          std::vector<T> dgamma(cols, T{0}), dbeta(cols, T{0});
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) {
              dgamma[c] += g(r, c) * normalized(r, c);
              dbeta[c] += g(r, c);
            }
          if (ctx.needs(gamma)) {
            Tensor<T>& gg = ctx.grad_of(gamma);
            for (std::size_t c = 0; c < cols; ++c) gg[c] += dgamma[c];
          }
          if (ctx.needs(beta)) {
            Tensor<T>& gb = ctx.grad_of(beta);
            for (std::size_t c = 0; c < cols; ++c) gb[c] += dbeta[c];
          }
        }
        if (ctx.needs(x)) {
          Tensor<T>& gx = ctx.grad_of(x);
          for (std::size_t r = 0; r < rows; ++r) {
            T mean_d = 0, mean_dn = 0;
            for (std::size_t c = 0; c < cols; ++c) {
              const T d = g(r, c) * gv[c];
              mean_d += d;
              mean_dn += d * normalized(r, c);
            }
            mean_d /= T(cols);
            mean_dn /= T(cols);
            for (std::size_t c = 0; c < cols; ++c) {
              const T d = g(r, c) * gv[c];
              gx(r, c) += inv_std[r] * (d - mean_d - normalized(r, c) * mean_dn);
            }
          }
        }
      });
}

template <typename T>
Tensor<T> softmax_rows_values(const Tensor<T>& m, const Mask* mask, EmptyRow empty) {
  require_matrix(m, "softmax_rows");
  const std::size_t rows = m.rows(), cols = m.cols();
  if (mask != nullptr) {
    require(mask->rows() == rows && mask->cols() == cols, "softmax_rows: mask shape does not match input");
  }
  auto valid = [mask](std::size_t r, std::size_t c) { return mask == nullptr || (*mask)(r, c); };
  Tensor<T> out({rows, cols});
  for (std::size_t r = 0; r < rows; ++r) {
    T row_max = -std::numeric_limits<T>::infinity();
    bool any = false;
    for (std::size_t c = 0; c < cols; ++c) {
      if (!valid(r, c)) continue;
      any = true;
      row_max = std::max(row_max, m(r, c));
    }
    if (!any) {
      if (empty == EmptyRow::Error) fail(ErrorKind::DegenerateRow, "softmax row " + std::to_string(r) + " is fully masked");
      continue;
    }
    T total = 0;
    for (std::size_t c = 0; c < cols; ++c) {
      if (!valid(r, c)) continue;
      out(r, c) = std::exp(m(r, c) - row_max);
      total += out(r, c);
    }
    for (std::size_t c = 0; c < cols; ++c) {
      if (valid(r, c)) out(r, c) /= total;
    }
  }
  return out;
}

template <typename T>
Var<T> softmax_rows(Var<T> m, const Mask* mask, EmptyRow empty) {
  Tensor<T> out = softmax_rows_values(m.value(), mask, empty);
  return m.tape()->record(std::move(out), {m}, [m](BackwardContext<T>& ctx) {
    const Tensor<T>& y = ctx.output();
    const Tensor<T>& g = ctx.grad();
    Tensor<T>& gx = ctx.grad_of(m);
    const std::size_t rows = y.rows(), cols = y.cols();
    for (std::size_t r = 0; r < rows; ++r) {
      T inner = 0;
      for (std::size_t c = 0; c < cols; ++c) inner += y(r, c) * g(r, c);
      for (std::size_t c = 0; c < cols; ++c) gx(r, c) += y(r, c) * (g(r, c) - inner);
    }
  });
}

template <typename T>
Var<T> mean_pool_rows(Var<T> m, const std::vector<bool>* row_valid) {
  const Tensor<T>& mv = m.value();
  require_matrix(mv, "mean_pool_rows");
  const std::size_t rows = mv.rows(), cols = mv.cols();
  if (row_valid != nullptr) require(row_valid->size() == rows, "mean_pool_rows: row mask length mismatch");
  std::vector<bool> valid = row_valid ? *row_valid : std::vector<bool>(rows, true);
  const auto count = static_cast<std::size_t>(std::count(valid.begin(), valid.end(), true));
  if (count == 0) fail(ErrorKind::DegenerateRow, "mean_pool_rows: no valid rows");
  Tensor<T> out({cols});
  for (std::size_t r = 0; r < rows; ++r) {
    if (!valid[r]) continue;
    for (std::size_t c = 0; c < cols; ++c) out[c] += mv(r, c);
  }
  const T inv = T(1) / T(count);
  for (T& x : out.data()) x *= inv;
  return m.tape()->record(std::move(out), {m}, [m, valid = std::move(valid), inv, cols](BackwardContext<T>& ctx) {
    const Tensor<T>& g = ctx.grad();
    Tensor<T>& gx = ctx.grad_of(m);
    for (std::size_t r = 0; r < valid.size(); ++r) {
      if (!valid[r]) continue;
      for (std::size_t c = 0; c < cols; ++c) gx(r, c) += g[c] * inv;
    }
  });
}

template <typename T>
Var<T> sum(Var<T> a) {
  T total = 0;
  for (T x : a.value().data()) total += x;
  return a.tape()->record(Tensor<T>({1}, total), {a}, [a](BackwardContext<T>& ctx) {
    const T g = ctx.grad()[0];
    for (T& x : ctx.grad_of(a).data()) x += g;
  });
}

template <typename T>
Var<T> mse(Var<T> a, const Tensor<T>& target, const Mask* mask) {
  const Tensor<T>& av = a.value();
  require_same(av, target, "mse");
  if (mask != nullptr) {
    require(av.rank() == 2 && mask->rows() == av.rows() && mask->cols() == av.cols(), "mse: mask shape mismatch");
  }
  const std::size_t cols = av.cols();
  auto valid = [mask, cols](std::size_t i) { return mask == nullptr || (*mask)(i / cols, i % cols); };
  std::size_t count = 0;
  T total = 0;
  for (std::size_t i = 0; i < av.size(); ++i) {
    if (!valid(i)) continue;
    const T d = av[i] - target[i];
    total += d * d;
    ++count;
  }
  if (count == 0) fail(ErrorKind::DegenerateRow, "mse: no valid entries");
  const T inv = T(1) / T(count);
  const bool masked = mask != nullptr;
  Mask saved = masked ? *mask : Mask();
  return a.tape()->record(Tensor<T>({1}, total * inv), {a},
                          [a, target, masked, saved = std::move(saved), inv, cols](BackwardContext<T>& ctx) {
                            const T g = ctx.grad()[0];
                            const Tensor<T>& av = ctx.value(a);
                            Tensor<T>& ga = ctx.grad_of(a);
                            for (std::size_t i = 0; i < av.size(); ++i) {
                              if (masked && !saved(i / cols, i % cols)) continue;
                              ga[i] += g * T(2) * (av[i] - target[i]) * inv;
                            }
                          });
}

template <typename T>
Var<T> linear(Var<T> h, Var<T> weight, Var<T> bias) {
  const Tensor<T>& hv = h.value();
  const Tensor<T>& wv = weight.value();
  const Tensor<T>& bv = bias.value();
  require(hv.rank() == 1, "linear: input must be a vector, got " + shape_string(hv.shape()));
  require_matrix(wv, "linear");
  require(wv.cols() == hv.size(), "linear: weight " + shape_string(wv.shape()) + " does not accept input width " +
                                      std::to_string(hv.size()));
  require(bv.rank() == 1 && bv.size() == wv.rows(), "linear: bias width mismatch");
  const std::size_t classes = wv.rows(), width = wv.cols();
  Tensor<T> out = bv;
  kernels::active<T>().gemm_nt(hv.raw(), wv.raw(), out.raw(), 1, width, classes);
  return h.tape()->record(std::move(out), {h, weight, bias}, [h, weight, bias, classes, width](BackwardContext<T>& ctx) {
    const auto& k = kernels::active<T>();
    const Tensor<T>& g = ctx.grad();
    if (ctx.needs(h)) k.gemm_nn(g.raw(), ctx.value(weight).raw(), ctx.grad_of(h).raw(), 1, classes, width);
    if (ctx.needs(weight)) k.gemm_tn(g.raw(), ctx.value(h).raw(), ctx.grad_of(weight).raw(), classes, 1, width);
    if (ctx.needs(bias)) add_into(ctx.grad_of(bias), g);
  });
}

template <typename T>
Var<T> cross_entropy(Var<T> logits, std::size_t label) {
  const Tensor<T>& lv = logits.value();
  require(lv.rank() == 1, "cross_entropy: logits must be a vector");
  if (label >= lv.size()) {
    fail(ErrorKind::LabelOutOfRange,
         "label " + std::to_string(label) + " outside [0, " + std::to_string(lv.size()) + ")");
  }
  const T peak = *std::max_element(lv.data().begin(), lv.data().end());
  T total = 0;
  for (T x : lv.data()) total += std::exp(x - peak);
  const T log_sum_exp = peak + std::log(total);
  return logits.tape()->record(Tensor<T>({1}, log_sum_exp - lv[label]), {logits},
                               [logits, label, log_sum_exp](BackwardContext<T>& ctx) {
                                 const T g = ctx.grad()[0];
                                 const Tensor<T>& lv = ctx.value(logits);
                                 Tensor<T>& gl = ctx.grad_of(logits);
                                 for (std::size_t i = 0; i < lv.size(); ++i) {
                                   const T p = std::exp(lv[i] - log_sum_exp);
                                   gl[i] += g * (p - (i == label ? T(1) : T(0)));
                                 }
                               });
}

template <typename T>
Var<T> concat(Var<T> a, Var<T> b) {
  const Tensor<T>& av = a.value();
  const Tensor<T>& bv = b.value();
  require(av.rank() == 1 && bv.rank() == 1, "concat: inputs must be vectors");
  std::vector<T> data(av.data().begin(), av.data().end());
  data.insert(data.end(), bv.data().begin(), bv.data().end());
  const std::size_t split = av.size();
  return a.tape()->record(Tensor<T>::vector(std::move(data)), {a, b}, [a, b, split](BackwardContext<T>& ctx) {
    const Tensor<T>& g = ctx.grad();
    if (ctx.needs(a)) {
      Tensor<T>& ga = ctx.grad_of(a);
      for (std::size_t i = 0; i < split; ++i) ga[i] += g[i];
    }
    if (ctx.needs(b)) {
      Tensor<T>& gb = ctx.grad_of(b);
      for (std::size_t i = split; i < g.size(); ++i) gb[i - split] += g[i];
    }
  });
}

template <typename T>
Var<T> gather_rows(Var<T> table, std::span<const std::size_t> indices) {
  const Tensor<T>& tv = table.value();
  require_matrix(tv, "gather_rows");
  require(!indices.empty(), "gather_rows: no indices");
  const std::size_t width = tv.cols();
  Tensor<T> out({indices.size(), width});
  for (std::size_t i = 0; i < indices.size(); ++i) {
    require(indices[i] < tv.rows(), "gather_rows: index " + std::to_string(indices[i]) + " out of range");
    std::copy_n(tv.row(indices[i]).begin(), width, out.row(i).begin());
  }
  std::vector<std::size_t> saved(indices.begin(), indices.end());
  return table.tape()->record(std::move(out), {table}, [table, saved = std::move(saved), width](BackwardContext<T>& ctx) {
    const Tensor<T>& g = ctx.grad();
    Tensor<T>& gt = ctx.grad_of(table);
    for (std::size_t i = 0; i < saved.size(); ++i)
      for (std::size_t c = 0; c < width; ++c) gt(saved[i], c) += g(i, c);
  });
}

template <typename T>
Var<T> slice_cols(Var<T> m, std::size_t begin, std::size_t count) {
  const Tensor<T>& mv = m.value();
  require_matrix(mv, "slice_cols");
  require(count > 0 && begin + count <= mv.cols(), "slice_cols: column range out of bounds");
  const std::size_t rows = mv.rows(), cols = mv.cols();
  Tensor<T> out({rows, count});
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < count; ++c) out(r, c) = mv(r, begin + c);
  return m.tape()->record(std::move(out), {m}, [m, begin, count, rows, cols](BackwardContext<T>& ctx) {
    const Tensor<T>& g = ctx.grad();
    Tensor<T>& gm = ctx.grad_of(m);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < count; ++c) gm[r * cols + begin + c] += g(r, c);
  });
}

template <typename T>
Var<T> concat_cols(std::span<const Var<T>> parts) {
  require(!parts.empty(), "concat_cols: no inputs");
  const std::size_t rows = parts.front().value().rows();
  std::vector<std::size_t> offsets;
  std::size_t total = 0;
  for (const Var<T>& p : parts) {
    require_matrix(p.value(), "concat_cols");
    require(p.value().rows() == rows, "concat_cols: row count mismatch");
    offsets.push_back(total);
    total += p.value().cols();
  }
  Tensor<T> out({rows, total});
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const Tensor<T>& pv = parts[i].value();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < pv.cols(); ++c) out(r, offsets[i] + c) = pv(r, c);
  }
  std::vector<Var<T>> inputs(parts.begin(), parts.end());
  Tape<T>* tape = parts.front().tape();
  return tape->record(std::move(out), std::span<const Var<T>>(inputs),
                      [inputs, offsets = std::move(offsets), rows, total](BackwardContext<T>& ctx) {
                        const Tensor<T>& g = ctx.grad();
                        for (std::size_t i = 0; i < inputs.size(); ++i) {
                          if (!ctx.needs(inputs[i])) continue;
                          Tensor<T>& gp = ctx.grad_of(inputs[i]);
                          const std::size_t width = gp.cols();
                          for (std::size_t r = 0; r < rows; ++r)
                            for (std::size_t c = 0; c < width; ++c) gp(r, c) += g[r * total + offsets[i] + c];
                        }
                      });
}

template <typename T>
Var<T> add_all(std::span<const Var<T>> scalars) {
  require(!scalars.empty(), "add_all: no inputs");
  T total = 0;
  for (const Var<T>& s : scalars) {
    require(s.value().size() == 1, "add_all: inputs must be scalars");
    total += s.value()[0];
  }
  std::vector<Var<T>> inputs(scalars.begin(), scalars.end());
  Tape<T>* tape = scalars.front().tape();
  return tape->record(Tensor<T>({1}, total), std::span<const Var<T>>(inputs), [inputs](BackwardContext<T>& ctx) {
    const T g = ctx.grad()[0];
    for (const Var<T>& s : inputs) {
      if (ctx.needs(s)) ctx.grad_of(s)[0] += g;
    }
  });
}

#define NMT_INSTANTIATE_OPS(T)                                                          \
  template Tensor<T> matmul_values<T>(const Tensor<T>&, const Tensor<T>&);              \
  template Tensor<T> softmax_rows_values<T>(const Tensor<T>&, const Mask*, EmptyRow);   \
  template Var<T> matmul<T>(Var<T>, Var<T>);                                            \
  template Var<T> matmul_nt<T>(Var<T>, Var<T>);                                         \
  template Var<T> add<T>(Var<T>, Var<T>);                                               \
  template Var<T> sub<T>(Var<T>, Var<T>);                                               \
  template Var<T> mul<T>(Var<T>, Var<T>);                                               \
  template Var<T> add_row<T>(Var<T>, Var<T>);                                           \
  template Var<T> scale<T>(Var<T>, T);                                                  \
  template Var<T> gelu<T>(Var<T>);                                                      \
  template Var<T> layer_norm_rows<T>(Var<T>, Var<T>, Var<T>, T);                        \
  template Var<T> softmax_rows<T>(Var<T>, const Mask*, EmptyRow);                       \
  template Var<T> mean_pool_rows<T>(Var<T>, const std::vector<bool>*);                  \
  template Var<T> sum<T>(Var<T>);                                                       \
  template Var<T> mse<T>(Var<T>, const Tensor<T>&, const Mask*);                        \
  template Var<T> linear<T>(Var<T>, Var<T>, Var<T>);                                    \
  template Var<T> cross_entropy<T>(Var<T>, std::size_t);                                \
  template Var<T> concat<T>(Var<T>, Var<T>);                                            \
  template Var<T> gather_rows<T>(Var<T>, std::span<const std::size_t>);                 \
  template Var<T> slice_cols<T>(Var<T>, std::size_t, std::size_t);                      \
  template Var<T> concat_cols<T>(std::span<const Var<T>>);                              \
  template Var<T> add_all<T>(std::span<const Var<T>>);

NMT_INSTANTIATE_OPS(float)
NMT_INSTANTIATE_OPS(double)

#undef NMT_INSTANTIATE_OPS

}  // namespace nmt::num
