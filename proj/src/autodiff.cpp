#include "mmrec/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "mmrec/kernels.hpp"

namespace mmrec {

namespace {

thread_local Tape* g_active_tape = nullptr;

using NodePtr = std::shared_ptr<VarNode>;

bool tracking(std::initializer_list<const Var*> inputs) {
  if (!g_active_tape) return false;
  for (const Var* v : inputs)
    if (v->requires_grad()) return true;
  return false;
}

void require_same_shape(const char* op, const Var& a, const Var& b) {
  if (a.shape() != b.shape())
    throw DimensionError(std::string(op) + ": shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()) +
                         " differ");
}

double sigmoid_d(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

Tensor& VarNode::grad_buffer() {
  if (grad.empty()) grad = Tensor(value.shape(), Real(0));
  return grad;
}

Var::Var(Tensor value, bool requires_grad) : node_(std::make_shared<VarNode>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

// ---------------------------------------------------------------------------
// activations

Activation parse_activation(std::string_view name) {
  if (name == "identity") return Activation::identity;
  if (name == "exp") return Activation::exp;
  if (name == "softplus") return Activation::softplus;
  if (name == "silu") return Activation::silu;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "relu") return Activation::relu;
  throw ContractError("unknown activation '" + std::string(name) + "'");
}

std::string_view activation_name(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::exp: return "exp";
    case Activation::softplus: return "softplus";
    case Activation::silu: return "silu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::relu: return "relu";
  }
  return "?";
}

Real activate(Activation a, Real xr) {
  const double x = xr;
  switch (a) {
    case Activation::identity: return xr;
    case Activation::exp: return static_cast<Real>(std::exp(x));
    case Activation::softplus: return static_cast<Real>(x > 30 ? x : std::log1p(std::exp(x)));
    case Activation::silu: return static_cast<Real>(x * sigmoid_d(x));
    case Activation::sigmoid: return static_cast<Real>(sigmoid_d(x));
    case Activation::relu: return xr > 0 ? xr : Real(0);
  }
  return xr;
}

Real activate_grad(Activation a, Real xr) {
  const double x = xr;
  switch (a) {
    case Activation::identity: return 1;
    case Activation::exp: return static_cast<Real>(std::exp(x));
    case Activation::softplus: return static_cast<Real>(sigmoid_d(x));
    case Activation::silu: {
      const double s = sigmoid_d(x);
      return static_cast<Real>(s * (1 + x * (1 - s)));
    }
    case Activation::sigmoid: {
      const double s = sigmoid_d(x);
      return static_cast<Real>(s * (1 - s));
    }
    case Activation::relu: return xr > 0 ? Real(1) : Real(0);
  }
  return 1;
}

// ---------------------------------------------------------------------------
// tape

void Tape::record(std::string_view op, std::function<void()> backward) {
  nodes_.push_back({std::string(op), std::move(backward)});
}

std::size_t Tape::backward(const Var& loss) {
  if (!loss.defined() || loss.size() != 1)
    throw ContractError("backward: loss must be a scalar, got " +
                        (loss.defined() ? shape_str(loss.shape()) : std::string("undefined")));
  if (!loss.requires_grad()) return 0;
  loss.node()->grad_buffer()[0] += 1;
  std::size_t visited = 0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    it->backward();
    ++visited;
  }
  return visited;
}

TapeScope::TapeScope(Tape& tape) : previous_(g_active_tape) { g_active_tape = &tape; }
TapeScope::~TapeScope() { g_active_tape = previous_; }

Tape* active_tape() { return g_active_tape; }

// ---------------------------------------------------------------------------
// elementwise

Var matmul(const Var& a, const Var& b) {
  const int m = a.rows(), k = a.cols(), n = b.cols();
  if (b.value().rank() != 2 || b.rows() != k)
    throw DimensionError("matmul: inner extents differ for " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  Tensor out({m, n});
  kernels::parallel::matmul(a.value().values(), b.value().values(), out.values(), m, k, n);
  const bool track = tracking({&a, &b});
  Var y(std::move(out), track);
  if (track) {
    NodePtr an = a.node(), bn = b.node(), yn = y.node();
    g_active_tape->record("matmul", [an, bn, yn, m, k, n] {
      if (yn->grad.empty()) return;
      std::vector<Real> tmp;
      if (an->requires_grad) {
        tmp.assign(static_cast<std::size_t>(m) * k, 0);
        kernels::parallel::matmul_nt(yn->grad.values(), bn->value.values(), tmp, m, k, n);
        auto& g = an->grad_buffer();
        for (std::size_t i = 0; i < tmp.size(); ++i) g[i] += tmp[i];
      }
      if (bn->requires_grad) {
        tmp.assign(static_cast<std::size_t>(k) * n, 0);
        kernels::parallel::matmul_tn(an->value.values(), yn->grad.values(), tmp, m, k, n);
        auto& g = bn->grad_buffer();
        for (std::size_t i = 0; i < tmp.size(); ++i) g[i] += tmp[i];
      }
    });
  }
  return y;
}

namespace {
template <class Fwd, class Bwd>
Var binary_elementwise(const char* op, const Var& a, const Var& b, Fwd fwd, Bwd bwd) {
  require_same_shape(op, a, b);
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(a.value()[i], b.value()[i]);
  const bool track = tracking({&a, &b});
  Var y(std::move(out), track);
  if (track) {
    NodePtr an = a.node(), bn = b.node(), yn = y.node();
    g_active_tape->record(op, [an, bn, yn, bwd] {
      if (yn->grad.empty()) return;
      Tensor* ga = an->requires_grad ? &an->grad_buffer() : nullptr;
      Tensor* gb = bn->requires_grad ? &bn->grad_buffer() : nullptr;
      for (std::size_t i = 0; i < yn->grad.size(); ++i) {
        Real da = 0, db = 0;
        bwd(an->value[i], bn->value[i], yn->grad[i], da, db);
        if (ga) (*ga)[i] += da;
        if (gb) (*gb)[i] += db;
      }
    });
  }
  return y;
}
}  // namespace

Var add(const Var& a, const Var& b) {
  return binary_elementwise(
      "add", a, b, [](Real x, Real y) { return x + y; },
      [](Real, Real, Real g, Real& da, Real& db) {
        da = g;
        db = g;
      });
}

Var sub(const Var& a, const Var& b) {
  return binary_elementwise(
      "sub", a, b, [](Real x, Real y) { return x - y; },
      [](Real, Real, Real g, Real& da, Real& db) {
        da = g;
        db = -g;
      });
}

Var mul(const Var& a, const Var& b) {
  return binary_elementwise(
      "mul", a, b, [](Real x, Real y) { return x * y; },
      [](Real x, Real y, Real g, Real& da, Real& db) {
        da = g * y;
        db = g * x;
      });
}

Var scale(const Var& x, Real s) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.value()[i] * s;
  const bool track = tracking({&x});
  Var y(std::move(out), track);
  if (track) {
    NodePtr xn = x.node(), yn = y.node();
    g_active_tape->record("scale", [xn, yn, s] {
      if (yn->grad.empty()) return;
      auto& g = xn->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += yn->grad[i] * s;
    });
  }
  return y;
}

Var add_bias(const Var& x, const Var& b) {
  const int m = x.rows(), n = x.cols();
  if (static_cast<int>(b.size()) != n)
    throw DimensionError("add_bias: bias " + shape_str(b.shape()) + " does not fit " + shape_str(x.shape()));
  Tensor out(x.shape());
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out[static_cast<std::size_t>(i) * n + j] = x.value()[static_cast<std::size_t>(i) * n + j] + b.value()[j];
  const bool track = tracking({&x, &b});
  Var y(std::move(out), track);
  if (track) {
    NodePtr xn = x.node(), bn = b.node(), yn = y.node();
    g_active_tape->record("add_bias", [xn, bn, yn, m, n] {
      if (yn->grad.empty()) return;
      if (xn->requires_grad) {
        auto& g = xn->grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += yn->grad[i];
      }
      if (bn->requires_grad) {
        auto& g = bn->grad_buffer();
        for (int j = 0; j < n; ++j) {
          double s = 0;
          for (int i = 0; i < m; ++i) s += yn->grad[static_cast<std::size_t>(i) * n + j];
          g[j] += static_cast<Real>(s);
        }
      }
    });
  }
  return y;
}

Var mul_scalar(const Var& x, const Var& s) {
  if (s.size() != 1) throw DimensionError("mul_scalar: factor must hold one element, got " + shape_str(s.shape()));
  const Real sv = s.value()[0];
  Tensor out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.value()[i] * sv;
  const bool track = tracking({&x, &s});
  Var y(std::move(out), track);
  if (track) {
    NodePtr xn = x.node(), sn = s.node(), yn = y.node();
    g_active_tape->record("mul_scalar", [xn, sn, yn] {
      if (yn->grad.empty()) return;
      const Real sv = sn->value[0];
      if (xn->requires_grad) {
        auto& g = xn->grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += yn->grad[i] * sv;
      }
      if (sn->requires_grad) {
        double acc = 0;
        for (std::size_t i = 0; i < yn->grad.size(); ++i) acc += double(yn->grad[i]) * xn->value[i];
        sn->grad_buffer()[0] += static_cast<Real>(acc);
      }
    });
  }
  return y;
}

Var row_scale(const Var& x, const Var& v) {
  const int m = x.rows(), n = x.cols();
  if (static_cast<int>(v.size()) != m)
    throw DimensionError("row_scale: scale " + shape_str(v.shape()) + " does not fit rows of " + shape_str(x.shape()));
  Tensor out(x.shape());
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      const std::size_t q = static_cast<std::size_t>(i) * n + j;
      out[q] = x.value()[q] * v.value()[i];
    }
  const bool track = tracking({&x, &v});
  Var y(std::move(out), track);
  if (track) {
    NodePtr xn = x.node(), vn = v.node(), yn = y.node();
    g_active_tape->record("row_scale", [xn, vn, yn, m, n] {
      if (yn->grad.empty()) return;
      if (xn->requires_grad) {
        auto& g = xn->grad_buffer();
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < n; ++j) {
            const std::size_t q = static_cast<std::size_t>(i) * n + j;
            g[q] += yn->grad[q] * vn->value[i];
          }
      }
      if (vn->requires_grad) {
        auto& g = vn->grad_buffer();
        for (int i = 0; i < m; ++i) {
          double acc = 0;
          for (int j = 0; j < n; ++j) {
            const std::size_t q = static_cast<std::size_t>(i) * n + j;
            acc += double(yn->grad[q]) * xn->value[q];
          }
          g[i] += static_cast<Real>(acc);
        }
      }
    });
  }
  return y;
}

Var unary(Activation op, const Var& x) {
  if (op == Activation::identity) return x;
  Tensor out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = activate(op, x.value()[i]);
  const bool track = tracking({&x});
  Var y(std::move(out), track);
  if (track) {
    NodePtr xn = x.node(), yn = y.node();
    g_active_tape->record(activation_name(op), [xn, yn, op] {
      if (yn->grad.empty()) return;
      auto& g = xn->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += yn->grad[i] * activate_grad(op, xn->value[i]);
    });
  }
  return y;
}

Var sum(const Var& x) {
  double s = 0;
  for (Real v : x.value().values()) s += v;
  const bool track = tracking({&x});
  Var y(Tensor({1}, static_cast<Real>(s)), track);
  if (track) {
    NodePtr xn = x.node(), yn = y.node();
    g_active_tape->record("sum", [xn, yn] {
      if (yn->grad.empty()) return;
      auto& g = xn->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += yn->grad[0];
    });
  }
  return y;
}

// ---------------------------------------------------------------------------
// normalisation

namespace {

// Normalises `groups` contiguous runs of `width` values. gamma/beta are
// indexed by position within the run when per_column, else by element 0.
Var normalize_groups(const char* op, const Var& x, const Var& gamma, const Var& beta, Real eps, int groups,
                     int width, bool per_column) {
  Tensor out(x.shape());
  std::vector<Real> xhat(x.size());
  std::vector<double> rstd(groups);
  const Real* xv = x.value().data();
  for (int r = 0; r < groups; ++r) {
    const std::size_t base = static_cast<std::size_t>(r) * width;
    double mean = 0;
    for (int j = 0; j < width; ++j) mean += xv[base + j];
    mean /= width;
    double var = 0;
    for (int j = 0; j < width; ++j) var += (xv[base + j] - mean) * (xv[base + j] - mean);
    var /= width;
    rstd[r] = 1.0 / std::sqrt(var + eps);
    for (int j = 0; j < width; ++j) {
      const double h = (xv[base + j] - mean) * rstd[r];
      xhat[base + j] = static_cast<Real>(h);
      const int p = per_column ? j : 0;
      out[base + j] = static_cast<Real>(gamma.value()[p] * h + beta.value()[p]);
    }
  }
  const bool track = tracking({&x, &gamma, &beta});
  Var y(std::move(out), track);
  if (track) {
    NodePtr xn = x.node(), gn = gamma.node(), bn = beta.node(), yn = y.node();
    g_active_tape->record(op, [xn, gn, bn, yn, xhat = std::move(xhat), rstd = std::move(rstd), groups, width,
                               per_column] {
      if (yn->grad.empty()) return;
      Tensor* gx = xn->requires_grad ? &xn->grad_buffer() : nullptr;
      Tensor* gg = gn->requires_grad ? &gn->grad_buffer() : nullptr;
      Tensor* gb = bn->requires_grad ? &bn->grad_buffer() : nullptr;
      std::vector<double> dh(width);
      for (int r = 0; r < groups; ++r) {
        const std::size_t base = static_cast<std::size_t>(r) * width;
        double mean_dh = 0, mean_dh_h = 0;
        for (int j = 0; j < width; ++j) {
          const int p = per_column ? j : 0;
          const double g = yn->grad[base + j];
          if (gg) (*gg)[p] += static_cast<Real>(g * xhat[base + j]);
          if (gb) (*gb)[p] += static_cast<Real>(g);
          dh[j] = g * gn->value[p];
          mean_dh += dh[j];
          mean_dh_h += dh[j] * xhat[base + j];
        }
        if (!gx) continue;
        mean_dh /= width;
        mean_dh_h /= width;
        for (int j = 0; j < width; ++j)
          (*gx)[base + j] += static_cast<Real>(rstd[r] * (dh[j] - mean_dh - xhat[base + j] * mean_dh_h));
      }
    });
  }
  return y;
}

}  // namespace

Var layer_norm(const Var& x, const Var& gamma, const Var& beta, Real eps) {
  const int n = x.cols();
  if (static_cast<int>(gamma.size()) != n || static_cast<int>(beta.size()) != n)
    throw DimensionError("layer_norm: affine " + shape_str(gamma.shape()) + " does not fit " + shape_str(x.shape()));
  return normalize_groups("layer_norm", x, gamma, beta, eps, x.rows(), n, true);
}

Var layer_norm_1d(const Var& x, const Var& gamma, const Var& beta, Real eps) {
  if (gamma.size() != 1 || beta.size() != 1) throw DimensionError("layer_norm_1d: gamma/beta must be scalars");
  return normalize_groups("layer_norm_1d", x, gamma, beta, eps, 1, static_cast<int>(x.size()), false);
}

// ---------------------------------------------------------------------------
// convolution

Var causal_conv1d(const Var& x, const Var& omega, Activation act) {
  const int L = x.rows(), C = x.cols(), K = omega.rows();
  if (K < 1 || omega.cols() != C)
    throw DimensionError("causal_conv1d: kernel " + shape_str(omega.shape()) + " does not fit " + shape_str(x.shape()));
  Tensor out(x.shape());
  kernels::parallel::causal_conv(x.value().values(), omega.value().values(), out.values(), L, C, K);
  const bool track = tracking({&x, &omega});
  Var y(std::move(out), track);
  if (track) {
    NodePtr xn = x.node(), wn = omega.node(), yn = y.node();
    g_active_tape->record("causal_conv1d", [xn, wn, yn, L, C, K] {
      if (yn->grad.empty()) return;
      std::vector<Real> gx(xn->requires_grad ? xn->value.size() : 0);
      std::vector<Real> gw(wn->requires_grad ? wn->value.size() : 0);
      kernels::parallel::causal_conv_backward(xn->value.values(), wn->value.values(), yn->grad.values(), gx, gw, L,
                                              C, K);
      if (!gx.empty()) {
        auto& g = xn->grad_buffer();
        for (std::size_t i = 0; i < gx.size(); ++i) g[i] += gx[i];
      }
      if (!gw.empty()) {
        auto& g = wn->grad_buffer();
        for (std::size_t i = 0; i < gw.size(); ++i) g[i] += gw[i];
      }
    });
  }
  return unary(act, y);
}

// ---------------------------------------------------------------------------
// reshaping and indexing

namespace {

// Generic copy op: out[dst[i]] = in[src[i]] with the transposed scatter-add
// as backward.
Var gather_copy(const char* op, const Var& x, Shape shape, std::vector<std::size_t> src) {
  Tensor out(std::move(shape));
  for (std::size_t i = 0; i < src.size(); ++i) out[i] = x.value()[src[i]];
  const bool track = tracking({&x});
  Var y(std::move(out), track);
  if (track) {
    NodePtr xn = x.node(), yn = y.node();
    g_active_tape->record(op, [xn, yn, src = std::move(src)] {
      if (yn->grad.empty()) return;
      auto& g = xn->grad_buffer();
      for (std::size_t i = 0; i < src.size(); ++i) g[src[i]] += yn->grad[i];
    });
  }
  return y;
}

}  // namespace

Var slice_cols(const Var& x, int start, int count) {
  const int m = x.rows(), n = x.cols();
  if (start < 0 || count < 1 || start + count > n)
    throw DimensionError("slice_cols: [" + std::to_string(start) + ", +" + std::to_string(count) + ") outside " +
                         shape_str(x.shape()));
  std::vector<std::size_t> src;
  src.reserve(static_cast<std::size_t>(m) * count);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < count; ++j) src.push_back(static_cast<std::size_t>(i) * n + start + j);
  return gather_copy("slice_cols", x, {m, count}, std::move(src));
}

Var slice_rows(const Var& x, int start, int count) {
  const int m = x.rows(), n = x.cols();
  if (start < 0 || count < 1 || start + count > m)
    throw DimensionError("slice_rows: [" + std::to_string(start) + ", +" + std::to_string(count) + ") outside " +
                         shape_str(x.shape()));
  std::vector<std::size_t> src(static_cast<std::size_t>(count) * n);
  for (std::size_t i = 0; i < src.size(); ++i) src[i] = static_cast<std::size_t>(start) * n + i;
  return gather_copy("slice_rows", x, {count, n}, std::move(src));
}

Var reshape(const Var& x, Shape shape) {
  if (shape_numel(shape) != x.size())
    throw DimensionError("reshape: " + shape_str(x.shape()) + " to " + shape_str(shape));
  std::vector<std::size_t> src(x.size());
  for (std::size_t i = 0; i < src.size(); ++i) src[i] = i;
  return gather_copy("reshape", x, std::move(shape), std::move(src));
}

Var pad_left(const Var& x, int total) {
  const int n = static_cast<int>(x.size());
  if (total < n) throw DimensionError("pad_left: length " + std::to_string(n) + " exceeds " + std::to_string(total));
  if (total == n) return reshape(x, {n});
  Tensor out({total}, Real(0));
  for (int i = 0; i < n; ++i) out[total - n + i] = x.value()[i];
  const bool track = tracking({&x});
  Var y(std::move(out), track);
  if (track) {
    NodePtr xn = x.node(), yn = y.node();
    g_active_tape->record("pad_left", [xn, yn, n, total] {
      if (yn->grad.empty()) return;
      auto& g = xn->grad_buffer();
      for (int i = 0; i < n; ++i) g[i] += yn->grad[total - n + i];
    });
  }
  return y;
}

Var take_last(const Var& x, int count) {
  const int n = static_cast<int>(x.size());
  if (count < 1 || count > n) throw DimensionError("take_last: " + std::to_string(count) + " of " + std::to_string(n));
  std::vector<std::size_t> src(count);
  for (int i = 0; i < count; ++i) src[i] = static_cast<std::size_t>(n - count + i);
  return gather_copy("take_last", x, {count}, std::move(src));
}

Var gather_rows(const Var& table, std::span<const int> index) {
  const int R = table.rows(), n = table.cols();
  Tensor out({static_cast<int>(index.size()), n}, Real(0));
  std::vector<int> idx(index.begin(), index.end());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= R) throw DimensionError("gather_rows: row " + std::to_string(idx[i]) + " outside " + shape_str(table.shape()));
    if (idx[i] < 0) continue;
    std::copy_n(table.value().data() + static_cast<std::size_t>(idx[i]) * n, n, out.data() + i * n);
  }
  const bool track = tracking({&table});
  Var y(std::move(out), track);
  if (track) {
    NodePtr tn = table.node(), yn = y.node();
    g_active_tape->record("gather_rows", [tn, yn, idx = std::move(idx), n] {
      if (yn->grad.empty()) return;
      auto& g = tn->grad_buffer();
      for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] < 0) continue;
        for (int j = 0; j < n; ++j) g[static_cast<std::size_t>(idx[i]) * n + j] += yn->grad[i * n + j];
      }
    });
  }
  return y;
}

Var stack_rows(const std::vector<Var>& rows) {
  if (rows.empty()) throw DimensionError("stack_rows: no rows");
  const int n = static_cast<int>(rows[0].size());
  for (const auto& r : rows)
    if (static_cast<int>(r.size()) != n) throw DimensionError("stack_rows: ragged rows");
  Tensor out({static_cast<int>(rows.size()), n});
  bool track = false;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy_n(rows[i].value().data(), n, out.data() + i * n);
    track = track || tracking({&rows[i]});
  }
  Var y(std::move(out), track);
  if (track) {
    std::vector<NodePtr> in;
    for (const auto& r : rows) in.push_back(r.node());
    NodePtr yn = y.node();
    g_active_tape->record("stack_rows", [in = std::move(in), yn, n] {
      if (yn->grad.empty()) return;
      for (std::size_t i = 0; i < in.size(); ++i) {
        if (!in[i]->requires_grad) continue;
        auto& g = in[i]->grad_buffer();
        for (int j = 0; j < n; ++j) g[j] += yn->grad[i * n + j];
      }
    });
  }
  return y;
}

Var mask_rows(const Var& x, std::span<const Real> weights) {
  const int m = x.rows(), n = x.cols();
  if (static_cast<int>(weights.size()) != m) throw DimensionError("mask_rows: weight count differs from rows");
  std::vector<Real> w(weights.begin(), weights.end());
  Tensor out(x.shape());
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out[static_cast<std::size_t>(i) * n + j] = x.value()[static_cast<std::size_t>(i) * n + j] * w[i];
  const bool track = tracking({&x});
  Var y(std::move(out), track);
  if (track) {
    NodePtr xn = x.node(), yn = y.node();
    g_active_tape->record("mask_rows", [xn, yn, w = std::move(w), n] {
      if (yn->grad.empty()) return;
      auto& g = xn->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += yn->grad[i] * w[i / n];
    });
  }
  return y;
}

Var dropout(const Var& x, Real p, std::mt19937_64& rng) {
  if (p <= 0) return x;
  if (p >= 1) throw ContractError("dropout: p must be < 1");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Real> keep(x.size());
  const Real s = Real(1) / (Real(1) - p);
  for (auto& k : keep) k = u(rng) >= p ? s : Real(0);
  Tensor out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.value()[i] * keep[i];
  const bool track = tracking({&x});
  Var y(std::move(out), track);
  if (track) {
    NodePtr xn = x.node(), yn = y.node();
    g_active_tape->record("dropout", [xn, yn, keep = std::move(keep)] {
      if (yn->grad.empty()) return;
      auto& g = xn->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += yn->grad[i] * keep[i];
    });
  }
  return y;
}

Var cross_entropy(const Var& scores, std::span<const int> target, Real tau) {
  const int B = scores.rows(), C = scores.cols();
  if (static_cast<int>(target.size()) != B) throw DimensionError("cross_entropy: one target per row required");
  if (!(tau > 0)) throw ContractError("cross_entropy: temperature must be positive");
  std::vector<double> prob(static_cast<std::size_t>(B) * C);
  double loss = 0;
  for (int b = 0; b < B; ++b) {
    if (target[b] < 0 || target[b] >= C) throw DimensionError("cross_entropy: target outside score row");
    const Real* row = scores.value().data() + static_cast<std::size_t>(b) * C;
    double mx = row[0] / double(tau);
    for (int c = 1; c < C; ++c) mx = std::max(mx, row[c] / double(tau));
    double z = 0;
    for (int c = 0; c < C; ++c) z += std::exp(row[c] / double(tau) - mx);
    for (int c = 0; c < C; ++c) prob[static_cast<std::size_t>(b) * C + c] = std::exp(row[c] / double(tau) - mx) / z;
    loss += (std::log(z) + mx) - row[target[b]] / double(tau);
  }
  loss /= B;
  const bool track = tracking({&scores});
  Var y(Tensor({1}, static_cast<Real>(loss)), track);
  if (track) {
    NodePtr sn = scores.node(), yn = y.node();
    std::vector<int> tgt(target.begin(), target.end());
    g_active_tape->record("cross_entropy", [sn, yn, prob = std::move(prob), tgt = std::move(tgt), B, C, tau] {
      if (yn->grad.empty()) return;
      auto& g = sn->grad_buffer();
      const double f = yn->grad[0] / (double(tau) * B);
      for (int b = 0; b < B; ++b)
        for (int c = 0; c < C; ++c) {
          const std::size_t q = static_cast<std::size_t>(b) * C + c;
          g[q] += static_cast<Real>(f * (prob[q] - (c == tgt[b] ? 1.0 : 0.0)));
        }
    });
  }
  return y;
}

}  // namespace mmrec

namespace mmrec {

Var matmul_bt(const Var& a, const Var& b) {
  const int m = a.rows(), k = a.cols(), n = b.rows();
  if (b.cols() != k)
    throw DimensionError("matmul_bt: inner extents differ for " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()) + "ᵀ");
  Tensor out({m, n});
  kernels::parallel::matmul_nt(a.value().values(), b.value().values(), out.values(), m, n, k);
  const bool track = tracking({&a, &b});
  Var y(std::move(out), track);
  if (track) {
    NodePtr an = a.node(), bn = b.node(), yn = y.node();
    g_active_tape->record("matmul_bt", [an, bn, yn, m, k, n] {
      if (yn->grad.empty()) return;
      std::vector<Real> tmp;
      if (an->requires_grad) {
        tmp.assign(static_cast<std::size_t>(m) * k, 0);
        kernels::parallel::matmul(yn->grad.values(), bn->value.values(), tmp, m, n, k);
        auto& g = an->grad_buffer();
        for (std::size_t i = 0; i < tmp.size(); ++i) g[i] += tmp[i];
      }
      if (bn->requires_grad) {
        tmp.assign(static_cast<std::size_t>(n) * k, 0);
        kernels::parallel::matmul_tn(yn->grad.values(), an->value.values(), tmp, m, n, k);
        auto& g = bn->grad_buffer();
        for (std::size_t i = 0; i < tmp.size(); ++i) g[i] += tmp[i];
      }
    });
  }
  return y;
}

NoTapeScope::NoTapeScope() : previous_(g_active_tape) { g_active_tape = nullptr; }
NoTapeScope::~NoTapeScope() { g_active_tape = previous_; }

}  // namespace mmrec
