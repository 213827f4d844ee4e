#pragma once

// State-space duality kernels. The same causal sequence map
//
//   y_t = Σ_{j<=t} (Π_{k=j+1..t} a_k) · <C_t, B_j> · X_j
//
// is evaluated either as a masked quadratic (attention-like) product or as a
// linear recurrence over a D×N state.

#include <string_view>
#include <vector>

#include "mmrec/autodiff.hpp"
#include "mmrec/tensor.hpp"

namespace mmrec {

// Per-step decay factors â (entry 0 never enters a product).
struct DecayCoeffs {
  std::vector<Real> a_hat;
};

// Lower-triangular L×L decay mask, row-major.
struct MaskMatrix {
  int L = 0;
  std::vector<double> entries;
  double at(int i, int j) const { return entries[static_cast<std::size_t>(i) * L + j]; }
};

// entries[i][j] = Π_{k=j+1..i} â_k for j <= i, computed from prefix sums of
// ln â. Throws DomainError for non-positive â.
MaskMatrix build_decay_mask(const DecayCoeffs& a);

// Y = (mask ∘ C·B̄ᵀ)·X
Tensor ssd_quadratic(const Tensor& C, const Tensor& Bbar, const Tensor& X, const MaskMatrix& mask);
// h_t = â_t h_{t-1} + B̄_tᵀ X_t, y_t = C_t h_t, h_0 = 0.
Tensor ssd_recurrent(const Tensor& C, const Tensor& Bbar, const DecayCoeffs& a, const Tensor& X);

enum class SsdMode { automatic, quadratic, recurrent };
SsdMode parse_ssd_mode(std::string_view s);
std::string_view ssd_mode_name(SsdMode m);

// Cost model: quadratic ~L²/2·(D+N) plus an exp per mask entry, recurrent
// ~L·D·N, with constants measured on the kernels in kernels.cpp.
SsdMode select_ssd_form(int L, int D, int N);
// Plain flop count: quadratic iff L²·max(D,N) < L·D·N.
SsdMode flop_heuristic_form(int L, int D, int N);

Tensor ssd_auto(const Tensor& C, const Tensor& Bbar, const DecayCoeffs& a, const Tensor& X,
                SsdMode mode = SsdMode::automatic);

// Differentiable forms. The quadratic form takes ln â so the mask never
// divides by an underflowed decay; the recurrent form takes â directly and
// therefore also accepts non-positive decays.
Var ssd_quadratic(const Var& C, const Var& Bbar, const Var& log_a, const Var& X);
Var ssd_recurrent(const Var& C, const Var& Bbar, const Var& a, const Var& X);
Var ssd_auto(const Var& C, const Var& Bbar, const Var& log_a, const Var& X, SsdMode mode = SsdMode::automatic);

}  // namespace mmrec
