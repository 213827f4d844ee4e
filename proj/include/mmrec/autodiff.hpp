#pragma once

// Tape-based reverse-mode differentiation over Tensor.
//
// A Var is a shared handle to a value and its gradient. Operations on Vars
// record a backward closure on the thread's active Tape (see TapeScope) when
// any input requires a gradient; without an active tape they only compute.

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mmrec/tensor.hpp"

namespace mmrec {

enum class Activation { identity, exp, softplus, silu, sigmoid, relu };

Activation parse_activation(std::string_view name);
std::string_view activation_name(Activation a);
Real activate(Activation a, Real x);
// Derivative of activate(a, ·) at x.
Real activate_grad(Activation a, Real x);

struct VarNode {
  Tensor value;
  Tensor grad;  // empty until something flows into it
  bool requires_grad = false;

  Tensor& grad_buffer();
};

class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);
  static Var param(Tensor value) { return Var(std::move(value), true); }

  bool defined() const { return node_ != nullptr; }
  const Tensor& value() const { return node_->value; }
  Tensor& mutable_value() { return node_->value; }
  const Tensor& grad() const { return node_->grad; }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  const Shape& shape() const { return node_->value.shape(); }
  std::size_t size() const { return node_->value.size(); }
  int rows() const { return node_->value.rows(); }
  int cols() const { return node_->value.cols(); }

  void zero_grad() { node_->grad = Tensor(); }
  bool same_storage(const Var& o) const { return node_ == o.node_; }
  const std::shared_ptr<VarNode>& node() const { return node_; }

 private:
  std::shared_ptr<VarNode> node_;
};

class Tape {
 public:
  void record(std::string_view op, std::function<void()> backward);
  std::size_t size() const { return nodes_.size(); }
  const std::string& op_name(std::size_t i) const { return nodes_[i].op; }

  // Seeds d(loss)/d(loss) = 1 and replays recorded nodes newest-first.
  // Returns the number of nodes replayed. Throws ContractError for a
  // non-scalar loss.
  std::size_t backward(const Var& loss);
  void clear() { nodes_.clear(); }

 private:
  struct Node {
    std::string op;
    std::function<void()> backward;
  };
  std::vector<Node> nodes_;
};

// Makes `tape` the active tape of the calling thread for the scope's lifetime.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

Tape* active_tape();

// ---------------------------------------------------------------------------
// operations

Var matmul(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& x, Real s);
// x[m×n] + b[n], broadcast over rows.
Var add_bias(const Var& x, const Var& b);
// Every element of x times the single element of s.
Var mul_scalar(const Var& x, const Var& s);
// diag(v)·x for x[m×n], v[m].
Var row_scale(const Var& x, const Var& v);
Var unary(Activation op, const Var& x);
Var sum(const Var& x);

// Row-wise normalisation of x[L×N] with per-column gamma/beta[N]
// (population variance).
Var layer_norm(const Var& x, const Var& gamma, const Var& beta, Real eps = Real(1e-5));
// Normalisation of a 1-D signal along its length with scalar gamma/beta.
Var layer_norm_1d(const Var& x, const Var& gamma, const Var& beta, Real eps = Real(1e-5));

// y[t][c] = act(Σ_m x[max(t-m,0)][c]·omega[m][c]) for x[L×C], omega[K×C].
Var causal_conv1d(const Var& x, const Var& omega, Activation act);

Var slice_cols(const Var& x, int start, int count);
Var slice_rows(const Var& x, int start, int count);
Var reshape(const Var& x, Shape shape);
// Zero-extends a vector on the left to `total` entries.
Var pad_left(const Var& x, int total);
// Last `count` entries of a vector.
Var take_last(const Var& x, int count);
// Rows of table[R×N] selected by index; negative indices give zero rows.
Var gather_rows(const Var& table, std::span<const int> index);
Var stack_rows(const std::vector<Var>& rows);
// Rows of x scaled by 0/1 (or any) per-row weights held fixed.
Var mask_rows(const Var& x, std::span<const Real> weights);

// Inverted dropout; identity when p == 0.
Var dropout(const Var& x, Real p, std::mt19937_64& rng);

// Mean over rows of -log softmax(scores[b]/tau)[target[b]].
Var cross_entropy(const Var& scores, std::span<const int> target, Real tau);

}  // namespace mmrec

namespace mmrec {

// a[m×k]·b[n×k]ᵀ
Var matmul_bt(const Var& a, const Var& b);

// Suspends recording on the calling thread (e.g. for evaluation).
class NoTapeScope {
 public:
  NoTapeScope();
  ~NoTapeScope();
  NoTapeScope(const NoTapeScope&) = delete;
  NoTapeScope& operator=(const NoTapeScope&) = delete;

 private:
  Tape* previous_;
};

}  // namespace mmrec
