#include "mmrec/cross.hpp"

namespace mmrec {

namespace {
void check_streams(const Var& pv, const Var& pt, int N) {
  if (pv.cols() != N || pt.cols() != N || pv.rows() != pt.rows())
    throw DimensionError("ticossd: streams " + shape_str(pv.shape()) + " and " + shape_str(pt.shape()) +
                         " do not match width " + std::to_string(N));
}
}  // namespace

namespace {
struct CrossProjection {
  Var c;    // L×D
  Var bxd;  // L×(D+N+1)
};

CrossProjection project(const Var& pv, const Var& pt, const TiCoSSDParams& p) {
  check_streams(pv, pt, p.N);
  return {add_bias(matmul(pv, p.w2), p.b2), add_bias(matmul(pt, p.w3), p.b3)};
}
}  // namespace

SsdInputs ticossd_project(const Var& pv, const Var& pt, const TiCoSSDParams& p) {
  const auto pr = project(pv, pt, p);
  const int L = pv.rows(), D = p.D, N = p.N;
  return {pr.c, slice_cols(pr.bxd, 0, D), slice_cols(pr.bxd, D, N), reshape(slice_cols(pr.bxd, D + N, 1), {L})};
}

Var ticossd_forward(const Var& pv, const Var& pt, const Var& d_fused, const TiCoSSDParams& p,
                    const ForwardContext& ctx) {
  const auto pr = project(pv, pt, p);
  const int L = pv.rows(), D = p.D, N = p.N;
  const Var c = causal_conv1d(pr.c, p.conv_c, p.act);
  const Var bx = causal_conv1d(slice_cols(pr.bxd, 0, D + N), p.conv_bx, p.act);
  const SsdInputs in{c, slice_cols(bx, 0, D), slice_cols(bx, D, N), reshape(slice_cols(pr.bxd, D + N, 1), {L})};
  return time_aware_ssd(in, d_fused, p.a_log, p.b_delta, p.time, p.time_aware, p.decay, true, ctx.ssd_mode).x_tilde;
}

Var output_head(const Var& m, const Var& pv, const Var& pt, const TiCoSSDParams& p, const ForwardContext& ctx) {
  const Var o = layer_norm(add(add(maybe_dropout(m, ctx), pv), pt), p.ln_o.gamma, p.ln_o.beta);
  return layer_norm(add(ffn_forward(o, p.ffn, ctx), o), p.ln_y.gamma, p.ln_y.beta);
}

}  // namespace mmrec
