#include "mmrec/kernels.hpp"

#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mmrec::kernels {

namespace {
// Below this many multiply-adds a parallel region costs more than it saves.
constexpr long kParallelWork = 1L << 15;

using std::size_t;
inline size_t ix(int r, int c, int cols) { return static_cast<size_t>(r) * cols + c; }
}  // namespace

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// ---------------------------------------------------------------------------
// serial reference

namespace serial {

void matmul(std::span<const Real> a, std::span<const Real> b, std::span<Real> c, int m, int k, int n) {
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0;
      for (int p = 0; p < k; ++p) s += double(a[ix(i, p, k)]) * b[ix(p, j, n)];
      c[ix(i, j, n)] = static_cast<Real>(s);
    }
}

void matmul_tn(std::span<const Real> a, std::span<const Real> g, std::span<Real> c, int m, int k, int n) {
  for (int p = 0; p < k; ++p)
    for (int j = 0; j < n; ++j) {
      double s = 0;
      for (int i = 0; i < m; ++i) s += double(a[ix(i, p, k)]) * g[ix(i, j, n)];
      c[ix(p, j, n)] = static_cast<Real>(s);
    }
}

void matmul_nt(std::span<const Real> g, std::span<const Real> b, std::span<Real> c, int m, int k, int n) {
  for (int i = 0; i < m; ++i)
    for (int p = 0; p < k; ++p) {
      double s = 0;
      for (int j = 0; j < n; ++j) s += double(g[ix(i, j, n)]) * b[ix(p, j, n)];
      c[ix(i, p, k)] = static_cast<Real>(s);
    }
}

void causal_conv(std::span<const Real> x, std::span<const Real> w, std::span<Real> y, int L, int C, int K) {
  for (int t = 0; t < L; ++t)
    for (int c = 0; c < C; ++c) {
      double s = 0;
      for (int m = 0; m < K; ++m) s += double(x[ix(t - m > 0 ? t - m : 0, c, C)]) * w[ix(m, c, C)];
      y[ix(t, c, C)] = static_cast<Real>(s);
    }
}

void ssd_quadratic(std::span<const Real> C, std::span<const Real> B, std::span<const Real> log_a,
                   std::span<const Real> X, std::span<Real> Y, SsdDims d) {
  for (int i = 0; i < d.L; ++i)
    for (int n = 0; n < d.N; ++n) {
      double y = 0;
      for (int j = 0; j <= i; ++j) {
        double decay = 0;
        for (int k = j + 1; k <= i; ++k) decay += log_a[k];
        double cb = 0;
        for (int s = 0; s < d.D; ++s) cb += double(C[ix(i, s, d.D)]) * B[ix(j, s, d.D)];
        y += std::exp(decay) * cb * X[ix(j, n, d.N)];
      }
      Y[ix(i, n, d.N)] = static_cast<Real>(y);
    }
}

void ssd_recurrent(std::span<const Real> C, std::span<const Real> B, std::span<const Real> a,
                   std::span<const Real> X, std::span<Real> Y, SsdDims d) {
  std::vector<double> h(static_cast<size_t>(d.D) * d.N, 0.0);
  for (int t = 0; t < d.L; ++t) {
    for (int s = 0; s < d.D; ++s)
      for (int n = 0; n < d.N; ++n)
        h[ix(s, n, d.N)] = a[t] * h[ix(s, n, d.N)] + double(B[ix(t, s, d.D)]) * X[ix(t, n, d.N)];
    for (int n = 0; n < d.N; ++n) {
      double y = 0;
      for (int s = 0; s < d.D; ++s) y += double(C[ix(t, s, d.D)]) * h[ix(s, n, d.N)];
      Y[ix(t, n, d.N)] = static_cast<Real>(y);
    }
  }
}

}  // namespace serial

// ---------------------------------------------------------------------------
// OpenMP

namespace parallel {

void matmul(std::span<const Real> a, std::span<const Real> b, std::span<Real> c, int m, int k, int n) {
  const bool par = long(m) * k * n > kParallelWork;
#pragma omp parallel for schedule(static) if (par)
  for (int i = 0; i < m; ++i) {
    std::vector<double> acc(n, 0.0);
    for (int p = 0; p < k; ++p) {
      const double av = a[ix(i, p, k)];
      if (av == 0.0) continue;
      const Real* brow = b.data() + ix(p, 0, n);
      for (int j = 0; j < n; ++j) acc[j] += av * brow[j];
    }
    for (int j = 0; j < n; ++j) c[ix(i, j, n)] = static_cast<Real>(acc[j]);
  }
}

void matmul_tn(std::span<const Real> a, std::span<const Real> g, std::span<Real> c, int m, int k, int n) {
  const bool par = long(m) * k * n > kParallelWork;
#pragma omp parallel for schedule(static) if (par)
  for (int p = 0; p < k; ++p) {
    std::vector<double> acc(n, 0.0);
    for (int i = 0; i < m; ++i) {
      const double av = a[ix(i, p, k)];
      if (av == 0.0) continue;
      const Real* grow = g.data() + ix(i, 0, n);
      for (int j = 0; j < n; ++j) acc[j] += av * grow[j];
    }
    for (int j = 0; j < n; ++j) c[ix(p, j, n)] = static_cast<Real>(acc[j]);
  }
}

void matmul_nt(std::span<const Real> g, std::span<const Real> b, std::span<Real> c, int m, int k, int n) {
  const bool par = long(m) * k * n > kParallelWork;
#pragma omp parallel for schedule(static) if (par)
  for (int i = 0; i < m; ++i) {
    const Real* grow = g.data() + ix(i, 0, n);
    for (int p = 0; p < k; ++p) {
      const Real* brow = b.data() + ix(p, 0, n);
      double s = 0;
      for (int j = 0; j < n; ++j) s += double(grow[j]) * brow[j];
      c[ix(i, p, k)] = static_cast<Real>(s);
    }
  }
}

void causal_conv(std::span<const Real> x, std::span<const Real> w, std::span<Real> y, int L, int C, int K) {
  const bool par = long(L) * C * K > kParallelWork;
#pragma omp parallel for schedule(static) if (par)
  for (int t = 0; t < L; ++t)
    for (int c = 0; c < C; ++c) {
      double s = 0;
      for (int m = 0; m < K; ++m) s += double(x[ix(t - m > 0 ? t - m : 0, c, C)]) * w[ix(m, c, C)];
      y[ix(t, c, C)] = static_cast<Real>(s);
    }
}

void causal_conv_backward(std::span<const Real> x, std::span<const Real> w, std::span<const Real> gy,
                          std::span<Real> gx, std::span<Real> gw, int L, int C, int K) {
  const bool par = long(L) * C * K > kParallelWork;
  // Each channel is independent; splitting by channel keeps accumulation order fixed.
#pragma omp parallel for schedule(static) if (par)
  for (int c = 0; c < C; ++c) {
    std::vector<double> dx(L, 0.0);
    for (int m = 0; m < K; ++m) {
      double dw = 0;
      for (int t = 0; t < L; ++t) {
        const int src = t - m > 0 ? t - m : 0;
        const double g = gy[ix(t, c, C)];
        dx[src] += g * w[ix(m, c, C)];
        dw += g * x[ix(src, c, C)];
      }
      if (!gw.empty()) gw[ix(m, c, C)] = static_cast<Real>(dw);
    }
    if (!gx.empty())
      for (int t = 0; t < L; ++t) gx[ix(t, c, C)] = static_cast<Real>(dx[t]);
  }
}

static std::vector<double> prefix_log(std::span<const Real> log_a, int L) {
  std::vector<double> cum(L, 0.0);
  for (int i = 1; i < L; ++i) cum[i] = cum[i - 1] + double(log_a[i]);
  return cum;
}

void ssd_quadratic(std::span<const Real> C, std::span<const Real> B, std::span<const Real> log_a,
                   std::span<const Real> X, std::span<Real> Y, SsdDims d, std::vector<double>* mask,
                   std::vector<double>* score) {
  const int L = d.L, D = d.D, N = d.N;
  const auto cum = prefix_log(log_a, L);
  std::vector<double> local;
  std::vector<double>& S = score ? *score : local;
  S.assign(static_cast<size_t>(L) * L, 0.0);
  if (mask) mask->assign(static_cast<size_t>(L) * L, 0.0);
  const bool par = long(L) * L * (D + N) > kParallelWork;
#pragma omp parallel for schedule(dynamic, 4) if (par)
  for (int i = 0; i < L; ++i) {
    std::vector<double> acc(N, 0.0);
    for (int j = 0; j <= i; ++j) {
      const double m = std::exp(cum[i] - cum[j]);
      double cb = 0;
      for (int s = 0; s < D; ++s) cb += double(C[ix(i, s, D)]) * B[ix(j, s, D)];
      const double sij = m * cb;
      S[ix(i, j, L)] = sij;
      if (mask) (*mask)[ix(i, j, L)] = m;
      if (sij == 0.0) continue;
      for (int n = 0; n < N; ++n) acc[n] += sij * X[ix(j, n, N)];
    }
    for (int n = 0; n < N; ++n) Y[ix(i, n, N)] = static_cast<Real>(acc[n]);
  }
}

void ssd_quadratic_backward(std::span<const Real> C, std::span<const Real> B, std::span<const Real> X,
                            const std::vector<double>& mask, const std::vector<double>& score,
                            std::span<const Real> gY, std::span<Real> gC, std::span<Real> gB,
                            std::span<Real> glog_a, std::span<Real> gX, SsdDims d) {
  const int L = d.L, D = d.D, N = d.N;
  const bool par = long(L) * L * (D + N) > kParallelWork;
  // dS[i][j] = <gY_i, X_j>, lower triangle only.
  std::vector<double> dS(static_cast<size_t>(L) * L, 0.0);
#pragma omp parallel for schedule(dynamic, 4) if (par)
  for (int i = 0; i < L; ++i)
    for (int j = 0; j <= i; ++j) {
      double s = 0;
      for (int n = 0; n < N; ++n) s += double(gY[ix(i, n, N)]) * X[ix(j, n, N)];
      dS[ix(i, j, L)] = s;
    }

  if (!gX.empty()) {
#pragma omp parallel for schedule(dynamic, 4) if (par)
    for (int j = 0; j < L; ++j) {
      std::vector<double> acc(N, 0.0);
      for (int i = j; i < L; ++i) {
        const double s = score[ix(i, j, L)];
        if (s == 0.0) continue;
        for (int n = 0; n < N; ++n) acc[n] += s * gY[ix(i, n, N)];
      }
      for (int n = 0; n < N; ++n) gX[ix(j, n, N)] = static_cast<Real>(acc[n]);
    }
  }

  if (!gC.empty()) {
#pragma omp parallel for schedule(dynamic, 4) if (par)
    for (int i = 0; i < L; ++i) {
      std::vector<double> acc(D, 0.0);
      for (int j = 0; j <= i; ++j) {
        const double dp = dS[ix(i, j, L)] * mask[ix(i, j, L)];
        for (int s = 0; s < D; ++s) acc[s] += dp * B[ix(j, s, D)];
      }
      for (int s = 0; s < D; ++s) gC[ix(i, s, D)] = static_cast<Real>(acc[s]);
    }
  }

  if (!gB.empty()) {
#pragma omp parallel for schedule(dynamic, 4) if (par)
    for (int j = 0; j < L; ++j) {
      std::vector<double> acc(D, 0.0);
      for (int i = j; i < L; ++i) {
        const double dp = dS[ix(i, j, L)] * mask[ix(i, j, L)];
        for (int s = 0; s < D; ++s) acc[s] += dp * C[ix(i, s, D)];
      }
      for (int s = 0; s < D; ++s) gB[ix(j, s, D)] = static_cast<Real>(acc[s]);
    }
  }

  if (!glog_a.empty()) {
    // M[i][j] = exp(cum_i - cum_j): d/dcum_i += G[i][j], d/dcum_j -= G[i][j],
    // with G = dS ∘ S.
    std::vector<double> gcum(L, 0.0);
    for (int i = 0; i < L; ++i)
      for (int j = 0; j < i; ++j) {
        const double g = dS[ix(i, j, L)] * score[ix(i, j, L)];
        gcum[i] += g;
        gcum[j] -= g;
      }
    double run = 0;
    for (int k = L - 1; k >= 1; --k) {
      run += gcum[k];
      glog_a[k] = static_cast<Real>(run);
    }
    glog_a[0] = 0;
  }
}

void ssd_recurrent(std::span<const Real> C, std::span<const Real> B, std::span<const Real> a,
                   std::span<const Real> X, std::span<Real> Y, SsdDims d, std::vector<double>* states) {
  const int L = d.L, D = d.D, N = d.N;
  const size_t DN = static_cast<size_t>(D) * N;
  if (states) states->assign(static_cast<size_t>(L) * DN, 0.0);
  const bool par = long(L) * D * N > kParallelWork;
  // Columns of the state evolve independently; each thread owns a slab of N.
#pragma omp parallel if (par)
  {
    int tid = 0, nth = 1;
#ifdef _OPENMP
    tid = omp_get_thread_num();
    nth = omp_get_num_threads();
#endif
    const int n0 = static_cast<int>(long(N) * tid / nth);
    const int n1 = static_cast<int>(long(N) * (tid + 1) / nth);
    const int w = n1 - n0;
    std::vector<double> h(static_cast<size_t>(D) * (w > 0 ? w : 1), 0.0);
    for (int t = 0; t < L && w > 0; ++t) {
      const double at = a[t];
      for (int s = 0; s < D; ++s) {
        const double bs = B[ix(t, s, D)];
        double* hrow = h.data() + static_cast<size_t>(s) * w;
        for (int n = 0; n < w; ++n) hrow[n] = at * hrow[n] + bs * X[ix(t, n0 + n, N)];
      }
      for (int n = 0; n < w; ++n) {
        double y = 0;
        for (int s = 0; s < D; ++s) y += double(C[ix(t, s, D)]) * h[static_cast<size_t>(s) * w + n];
        Y[ix(t, n0 + n, N)] = static_cast<Real>(y);
      }
      if (states) {
        double* st = states->data() + t * DN;
        for (int s = 0; s < D; ++s)
          for (int n = 0; n < w; ++n) st[ix(s, n0 + n, N)] = h[static_cast<size_t>(s) * w + n];
      }
    }
  }
}

void ssd_recurrent_backward(std::span<const Real> C, std::span<const Real> B, std::span<const Real> a,
                            std::span<const Real> X, const std::vector<double>& states, std::span<const Real> gY,
                            std::span<Real> gC, std::span<Real> gB, std::span<Real> ga, std::span<Real> gX,
                            SsdDims d) {
  const int L = d.L, D = d.D, N = d.N;
  const size_t DN = static_cast<size_t>(D) * N;
  const bool par = long(L) * D * N > kParallelWork;
  // dh_t = C_t ⊗ gy_t + a_{t+1}·dh_{t+1}, independent per (s, n).
  std::vector<double> dh(static_cast<size_t>(L) * DN, 0.0);
#pragma omp parallel for schedule(static) if (par)
  for (int n = 0; n < N; ++n)
    for (int s = 0; s < D; ++s) {
      double carry = 0;
      for (int t = L - 1; t >= 0; --t) {
        carry = double(C[ix(t, s, D)]) * gY[ix(t, n, N)] + (t + 1 < L ? double(a[t + 1]) * carry : 0.0);
        dh[t * DN + ix(s, n, N)] = carry;
      }
    }

#pragma omp parallel for schedule(static) if (par)
  for (int t = 0; t < L; ++t) {
    const double* h = states.data() + t * DN;
    const double* g = dh.data() + t * DN;
    if (!gC.empty())
      for (int s = 0; s < D; ++s) {
        double acc = 0;
        for (int n = 0; n < N; ++n) acc += h[ix(s, n, N)] * gY[ix(t, n, N)];
        gC[ix(t, s, D)] = static_cast<Real>(acc);
      }
    if (!gB.empty())
      for (int s = 0; s < D; ++s) {
        double acc = 0;
        for (int n = 0; n < N; ++n) acc += g[ix(s, n, N)] * X[ix(t, n, N)];
        gB[ix(t, s, D)] = static_cast<Real>(acc);
      }
    if (!gX.empty())
      for (int n = 0; n < N; ++n) {
        double acc = 0;
        for (int s = 0; s < D; ++s) acc += g[ix(s, n, N)] * B[ix(t, s, D)];
        gX[ix(t, n, N)] = static_cast<Real>(acc);
      }
    if (!ga.empty()) {
      double acc = 0;
      if (t > 0) {
        const double* hp = states.data() + (t - 1) * DN;
        for (size_t q = 0; q < DN; ++q) acc += g[q] * hp[q];
      }
      ga[t] = static_cast<Real>(acc);
    }
  }
}

}  // namespace parallel

}  // namespace mmrec::kernels
