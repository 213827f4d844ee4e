#pragma once

// Time-aware SSD block and the weight-shared two-modality alignment stage.

#include <random>

#include "mmrec/autodiff.hpp"
#include "mmrec/ssd.hpp"
#include "mmrec/temporal.hpp"

namespace mmrec {

struct ForwardContext {
  bool train = false;
  Real dropout = 0;
  std::mt19937_64* rng = nullptr;  // required when train && dropout > 0
  SsdMode ssd_mode = SsdMode::automatic;
};

Var maybe_dropout(const Var& x, const ForwardContext& ctx);

struct LayerNormParams {
  Var gamma;
  Var beta;
};

struct FFNParams {
  Var w_in;   // N×4N
  Var b_in;   // 4N
  Var w_out;  // 4N×N
  Var b_out;  // N
  Activation act = Activation::silu;
};

struct TiSSDParams {
  Var w1;       // N×(2D+N+1)
  Var b1;       // 2D+N+1
  Var conv;     // K×(2D+N), depthwise over the C|B|X channels
  Var a_log;    // A = -exp(a_log)
  Var b_delta;  // Lmax, right-aligned to the valid positions
  TimeEnhanceParams time;
  Activation act = Activation::silu;
  bool time_aware = true;
  DecayMode decay = DecayMode::exp;
  int D = 0;
  int N = 0;
};

struct SsdInputs {
  Var C;      // L×D
  Var B;      // L×D
  Var X;      // L×N
  Var delta;  // L
};

// Single projection split at [0, D, 2D, 2D+N].
SsdInputs tissd_project(const Var& x, const TiSSDParams& p);

struct TissdOutput {
  Var x_tilde;  // L×N
  Var d_hat;    // L
};

// d: the time signal for the valid positions (ignored when !time_aware).
TissdOutput tissd_forward(const Var& x, const Var& d, const TiSSDParams& p, SsdMode mode = SsdMode::automatic);

// Shared tail of TiSSD/TiCoSSD: conv-activated C, B, X plus Δ and the time
// signal to the masked output. `scale_x` applies diag(Δ̂) to X and leaves B
// unscaled (cross form) instead of scaling B (ZOH form).
TissdOutput time_aware_ssd(const SsdInputs& in, const Var& d, const Var& a_log, const Var& b_delta,
                           const TimeEnhanceParams& time, bool time_aware, DecayMode decay, bool scale_x,
                           SsdMode mode);

Var scalar_a(const Var& a_log);

Var ffn_forward(const Var& h, const FFNParams& p, const ForwardContext& ctx = {});

struct AlignStageParams {
  TiSSDParams tissd_v;
  TiSSDParams tissd_t;  // same storage as tissd_v when weights are shared
  FFNParams ffn_v;
  FFNParams ffn_t;
  LayerNormParams ln1_v, ln1_t;
  LayerNormParams ln2_v, ln2_t;
};

struct AlignOutput {
  Var pv;
  Var pt;
  Var d_hat_v;
  Var d_hat_t;
  Var hv;  // post-residual LN, before the FFN
  Var ht;
};

AlignOutput align_modalities(const Var& xv, const Var& xt, const Var& dv, const Var& dt, const AlignStageParams& p,
                             const ForwardContext& ctx = {});

}  // namespace mmrec
