#include "mmrec/temporal.hpp"

#include <cmath>

namespace mmrec {

TimeDiffSeq compute_time_diffs(std::span<const std::int64_t> timestamps, Real eps) {
  const int L = static_cast<int>(timestamps.size());
  if (L < 1) throw ContractError("compute_time_diffs: empty timestamp sequence");
  TimeDiffSeq out;
  out.raw.assign(L, Real(0));
  for (int l = 1; l < L; ++l) {
    if (timestamps[l] < timestamps[l - 1])
      throw OrderingError("compute_time_diffs: timestamp at index " + std::to_string(l) + " precedes index " +
                          std::to_string(l - 1));
    out.raw[l] = static_cast<Real>(timestamps[l] - timestamps[l - 1]);
  }
  double mean = 0;
  for (Real r : out.raw) mean += r;
  mean /= L;
  double var = 0;
  for (Real r : out.raw) var += (r - mean) * (r - mean);
  var /= L;
  const double rstd = 1.0 / std::sqrt(var + eps);
  out.values = Tensor({L});
  for (int l = 0; l < L; ++l) out.values[l] = static_cast<Real>((out.raw[l] - mean) * rstd);
  return out;
}

Var time_gate(const Var& d, const TimeEnhanceParams& p) {
  const int lmax = p.mlp_w1.rows();
  const Var padded = reshape(pad_left(d, lmax), {1, lmax});
  const Var hidden = unary(Activation::silu, add_bias(matmul(padded, p.mlp_w1), p.mlp_b1));
  return reshape(add_bias(matmul(hidden, p.mlp_w2), p.mlp_b2), {1});
}

Var enhance_time(const Var& d, const TimeEnhanceParams& p) {
  const int L = static_cast<int>(d.size());
  const Var conv = causal_conv1d(reshape(d, {L, 1}), p.conv, p.act);
  return mul_scalar(reshape(conv, {L}), time_gate(d, p));
}

DecayMode parse_decay_mode(std::string_view s) {
  if (s == "exp") return DecayMode::exp;
  if (s == "literal") return DecayMode::literal;
  throw ContractError("unknown decay mode '" + std::string(s) + "'");
}

std::string_view decay_mode_name(DecayMode m) { return m == DecayMode::exp ? "exp" : "literal"; }

Discretized discretize_zoh(const Var& delta, const Var& d_hat, const Var& A, const Var& B, const Var& b_delta,
                           DecayMode mode) {
  const int L = static_cast<int>(delta.size());
  if (static_cast<int>(d_hat.size()) != L || static_cast<int>(b_delta.size()) != L || B.rows() != L)
    throw DimensionError("discretize_zoh: inconsistent sequence lengths");
  Discretized out;
  out.delta_hat = add(unary(Activation::softplus, mul(reshape(delta, {L}), reshape(d_hat, {L}))), reshape(b_delta, {L}));
  const Var scaled = mul_scalar(out.delta_hat, A);
  if (mode == DecayMode::exp) {
    out.log_a = scaled;
    out.a_hat = unary(Activation::exp, scaled);
  } else {
    out.a_hat = scaled;
  }
  out.b_bar = row_scale(B, out.delta_hat);
  return out;
}

}  // namespace mmrec
