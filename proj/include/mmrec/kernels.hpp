#pragma once

// Raw loop kernels behind the tensor ops. `serial` is the plain reference
// used by tests and the benchmark; `parallel` is the OpenMP version the
// library dispatches to. Both accumulate in double.

#include <span>
#include <vector>

#include "mmrec/tensor.hpp"

namespace mmrec::kernels {

struct SsdDims {
  int L = 0;  // sequence length
  int D = 0;  // state width (C, B)
  int N = 0;  // value width (X)
};

namespace serial {

// c[m×n] = a[m×k] · b[k×n]
void matmul(std::span<const Real> a, std::span<const Real> b, std::span<Real> c, int m, int k, int n);
// c[k×n] = a[m×k]ᵀ · g[m×n]
void matmul_tn(std::span<const Real> a, std::span<const Real> g, std::span<Real> c, int m, int k, int n);
// c[m×k] = g[m×n] · b[k×n]ᵀ
void matmul_nt(std::span<const Real> g, std::span<const Real> b, std::span<Real> c, int m, int k, int n);

// y[t][c] = Σ_m x[max(t-m,0)][c]·w[m][c]
void causal_conv(std::span<const Real> x, std::span<const Real> w, std::span<Real> y, int L, int C, int K);

// Y = (M ∘ C·Bᵀ)·X with M[i][j] = exp(cum_i - cum_j), cum = prefix sums of log_a.
void ssd_quadratic(std::span<const Real> C, std::span<const Real> B, std::span<const Real> log_a,
                   std::span<const Real> X, std::span<Real> Y, SsdDims d);
// h_t = a_t·h_{t-1} + B_tᵀ X_t ; y_t = C_t·h_t
void ssd_recurrent(std::span<const Real> C, std::span<const Real> B, std::span<const Real> a,
                   std::span<const Real> X, std::span<Real> Y, SsdDims d);

}  // namespace serial

namespace parallel {

void matmul(std::span<const Real> a, std::span<const Real> b, std::span<Real> c, int m, int k, int n);
void matmul_tn(std::span<const Real> a, std::span<const Real> g, std::span<Real> c, int m, int k, int n);
void matmul_nt(std::span<const Real> g, std::span<const Real> b, std::span<Real> c, int m, int k, int n);

void causal_conv(std::span<const Real> x, std::span<const Real> w, std::span<Real> y, int L, int C, int K);
void causal_conv_backward(std::span<const Real> x, std::span<const Real> w, std::span<const Real> gy,
                          std::span<Real> gx, std::span<Real> gw, int L, int C, int K);

// Forward of the masked quadratic form. `score` receives S = M ∘ C·Bᵀ (L×L)
// and `mask` receives M when non-empty; backward needs both.
void ssd_quadratic(std::span<const Real> C, std::span<const Real> B, std::span<const Real> log_a,
                   std::span<const Real> X, std::span<Real> Y, SsdDims d, std::vector<double>* mask = nullptr,
                   std::vector<double>* score = nullptr);
void ssd_quadratic_backward(std::span<const Real> C, std::span<const Real> B, std::span<const Real> X,
                            const std::vector<double>& mask, const std::vector<double>& score,
                            std::span<const Real> gY, std::span<Real> gC, std::span<Real> gB,
                            std::span<Real> glog_a, std::span<Real> gX, SsdDims d);

// Forward of the recurrence. `states` receives h_1..h_L (L×D×N) when given.
void ssd_recurrent(std::span<const Real> C, std::span<const Real> B, std::span<const Real> a,
                   std::span<const Real> X, std::span<Real> Y, SsdDims d, std::vector<double>* states = nullptr);
void ssd_recurrent_backward(std::span<const Real> C, std::span<const Real> B, std::span<const Real> a,
                            std::span<const Real> X, const std::vector<double>& states, std::span<const Real> gY,
                            std::span<Real> gC, std::span<Real> gB, std::span<Real> ga, std::span<Real> gX,
                            SsdDims d);

}  // namespace parallel

// Number of OpenMP threads the parallel kernels may use (1 without OpenMP).
int max_threads();

}  // namespace mmrec::kernels
