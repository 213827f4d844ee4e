#pragma once

// Cross-modal time-aware SSD: C from the visual stream, B/X/Δ from the text
// stream, step size driven by the fused time signal; plus the output head.

#include "mmrec/align.hpp"

namespace mmrec {

struct TiCoSSDParams {
  Var w2, b2;      // N×D, D
  Var w3, b3;      // N×(D+N+1), D+N+1
  Var conv_c;      // K×D
  Var conv_bx;     // K×(D+N)
  Var a_log;       // A = -exp(a_log)
  Var b_delta;     // Lmax
  TimeEnhanceParams time;
  FFNParams ffn;
  LayerNormParams ln_o, ln_y;
  Activation act = Activation::silu;
  bool time_aware = true;
  DecayMode decay = DecayMode::exp;
  int D = 0;
  int N = 0;
};

SsdInputs ticossd_project(const Var& pv, const Var& pt, const TiCoSSDParams& p);

// M = L ∘ C·Bᵀ·(diag(Δ̂)·X)
Var ticossd_forward(const Var& pv, const Var& pt, const Var& d_fused, const TiCoSSDParams& p,
                    const ForwardContext& ctx = {});

// O = LN(M + Pv + Pt), Y = LN(FFN(O) + O)
Var output_head(const Var& m, const Var& pv, const Var& pt, const TiCoSSDParams& p, const ForwardContext& ctx = {});

}  // namespace mmrec
