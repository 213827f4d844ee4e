#pragma once

// Frequency-domain fusion of the two modalities' enhanced time signals.

#include "mmrec/autodiff.hpp"
#include "mmrec/fft.hpp"

namespace mmrec {

// δ̃(z) = z·W̃ + b̃ with W̃ ∈ C^{Lmax×Lmax}, b̃ ∈ C^{Lmax}.
struct ComplexFilter {
  Var w_re, w_im;
  Var b_re, b_im;
  int length() const { return w_re.rows(); }
};

struct FusionParams {
  ComplexFilter adaptive;   // shared by both modalities
  ComplexFilter learnable;  // applied to the fused spectrum
  bool use_adaptive = true;
  bool use_learnable = true;
  int max_len = 0;
};

// K = δ̃(spec); returns K ⊙ spec.
ComplexVar adaptive_filter_apply(const ComplexVar& spec, const ComplexFilter& f);

struct FusionDiagnostics {
  double max_imag_residue = 0;  // largest |Im| discarded after the inverse transform
};

// D̂^f = Re F⁻¹(δ̃_learn(K_v ⊙ D̃_v + K_t ⊙ D̃_t)). Inputs of length n <= Lmax
// are left-padded with zeros and the last n entries of the result returned.
Var fuse_time_signals(const Var& d_hat_v, const Var& d_hat_t, const FusionParams& p,
                      FusionDiagnostics* diag = nullptr);

}  // namespace mmrec
