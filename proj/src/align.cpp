#include "mmrec/align.hpp"

namespace mmrec {

Var maybe_dropout(const Var& x, const ForwardContext& ctx) {
  if (!ctx.train || ctx.dropout <= 0) return x;
  if (!ctx.rng) throw ContractError("dropout in training mode needs a random generator");
  return dropout(x, ctx.dropout, *ctx.rng);
}

namespace {
Var project(const Var& x, const TiSSDParams& p) {
  if (x.cols() != p.N)
    throw DimensionError("tissd_project: input width " + std::to_string(x.cols()) + " != " + std::to_string(p.N));
  return add_bias(matmul(x, p.w1), p.b1);
}
}  // namespace

SsdInputs tissd_project(const Var& x, const TiSSDParams& p) {
  const int N = p.N, D = p.D;
  const Var proj = project(x, p);
  const int L = proj.rows();
  return {slice_cols(proj, 0, D), slice_cols(proj, D, D), slice_cols(proj, 2 * D, N),
          reshape(slice_cols(proj, 2 * D + N, 1), {L})};
}

Var scalar_a(const Var& a_log) { return scale(unary(Activation::exp, a_log), Real(-1)); }

TissdOutput time_aware_ssd(const SsdInputs& in, const Var& d, const Var& a_log, const Var& b_delta,
                           const TimeEnhanceParams& time, bool time_aware, DecayMode decay, bool scale_x,
                           SsdMode mode) {
  const int L = in.C.rows();
  const Var d_hat = time_aware ? enhance_time(d, time) : Var(Tensor({L}, Real(0)));
  const Var bias = take_last(b_delta, L);
  const Discretized z = discretize_zoh(in.delta, d_hat, scalar_a(a_log), in.B, bias, decay);
  const Var B = scale_x ? in.B : z.b_bar;
  const Var X = scale_x ? row_scale(in.X, z.delta_hat) : in.X;
  Var y;
  if (decay == DecayMode::exp)
    y = ssd_auto(in.C, B, z.log_a, X, mode);
  else
    y = ssd_recurrent(in.C, B, z.a_hat, X);
  return {y, d_hat};
}

TissdOutput tissd_forward(const Var& x, const Var& d, const TiSSDParams& p, SsdMode mode) {
  const int D = p.D, N = p.N;
  const Var proj = project(x, p);
  const int L = proj.rows();
  // C|B|X share one depthwise convolution.
  const Var cbx = causal_conv1d(slice_cols(proj, 0, 2 * D + N), p.conv, p.act);
  const SsdInputs in{slice_cols(cbx, 0, D), slice_cols(cbx, D, D), slice_cols(cbx, 2 * D, N),
                     reshape(slice_cols(proj, 2 * D + N, 1), {L})};
  return time_aware_ssd(in, d, p.a_log, p.b_delta, p.time, p.time_aware, p.decay, false, mode);
}

Var ffn_forward(const Var& h, const FFNParams& p, const ForwardContext& ctx) {
  Var hidden = unary(p.act, add_bias(matmul(h, p.w_in), p.b_in));
  hidden = maybe_dropout(hidden, ctx);
  return add_bias(matmul(hidden, p.w_out), p.b_out);
}

AlignOutput align_modalities(const Var& xv, const Var& xt, const Var& dv, const Var& dt, const AlignStageParams& p,
                             const ForwardContext& ctx) {
  if (xv.cols() != xt.cols() || xv.rows() != xt.rows())
    throw DimensionError("align_modalities: modality sequences " + shape_str(xv.shape()) + " and " +
                         shape_str(xt.shape()) + " differ");
  AlignOutput out;
  const TissdOutput tv = tissd_forward(xv, dv, p.tissd_v, ctx.ssd_mode);
  const TissdOutput tt = tissd_forward(xt, dt, p.tissd_t, ctx.ssd_mode);
  out.hv = layer_norm(add(maybe_dropout(tv.x_tilde, ctx), xv), p.ln1_v.gamma, p.ln1_v.beta);
  out.ht = layer_norm(add(maybe_dropout(tt.x_tilde, ctx), xt), p.ln1_t.gamma, p.ln1_t.beta);
  out.pv = layer_norm(add(ffn_forward(out.hv, p.ffn_v, ctx), out.hv), p.ln2_v.gamma, p.ln2_v.beta);
  out.pt = layer_norm(add(ffn_forward(out.ht, p.ffn_t, ctx), out.ht), p.ln2_t.gamma, p.ln2_t.beta);
  out.d_hat_v = tv.d_hat;
  out.d_hat_t = tt.d_hat;
  return out;
}

}  // namespace mmrec
