#pragma once

// Inter-arrival time signal: difference construction, global enhancement,
// and zero-order-hold discretisation of the SSD step size.

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "mmrec/autodiff.hpp"

namespace mmrec {

struct TimeDiffSeq {
  std::vector<Real> raw;  // [0, t2-t1, ..., tL-tL-1]
  Tensor values;          // raw normalised along its length (unit affine)
};

// Throws OrderingError naming the first index whose timestamp decreases.
TimeDiffSeq compute_time_diffs(std::span<const std::int64_t> timestamps, Real eps = Real(1e-5));

struct TimeEnhanceParams {
  Var conv;     // K×1 kernel ω^D
  Var mlp_w1;   // Lmax×Lmax
  Var mlp_b1;   // Lmax
  Var mlp_w2;   // Lmax×1
  Var mlp_b2;   // 1
  Activation act = Activation::silu;
};

// Scalar gate α^D = MLP(d) over the left-zero-padded signal.
Var time_gate(const Var& d, const TimeEnhanceParams& p);
// D̂ = α^D · act(d * ω^D)
Var enhance_time(const Var& d, const TimeEnhanceParams& p);

enum class DecayMode { exp, literal };
DecayMode parse_decay_mode(std::string_view s);
std::string_view decay_mode_name(DecayMode m);

struct Discretized {
  Var delta_hat;  // softplus(Δ ⊙ D̂) + b^Δ
  Var a_hat;      // exp(A·Δ̂) (literal: A·Δ̂)
  Var log_a;      // A·Δ̂ under exp decay; undefined for literal
  Var b_bar;      // diag(Δ̂)·B
};

// delta, d_hat, b_delta: length L; A: one element; B: L×D.
Discretized discretize_zoh(const Var& delta, const Var& d_hat, const Var& A, const Var& B, const Var& b_delta,
                           DecayMode mode = DecayMode::exp);

}  // namespace mmrec
