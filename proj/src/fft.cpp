#include "mmrec/fft.hpp"

#include <cmath>
#include <complex>
#include <numbers>

namespace mmrec {

namespace {

using cd = std::complex<double>;

int smallest_factor(int n) {
  for (int p = 2; p * p <= n; ++p)
    if (n % p == 0) return p;
  return n;
}

int largest_factor(int n) {
  int largest = 1;
  for (int p = 2; p * p <= n; ++p)
    while (n % p == 0) {
      largest = p;
      n /= p;
    }
  return n > 1 ? n : largest;
}

// Decimation in time: split into p interleaved subsequences, transform each,
// then recombine with a radix-p butterfly.
void mixed_radix(const cd* in, std::size_t stride, cd* out, int n, int sign) {
  if (n == 1) {
    out[0] = in[0];
    return;
  }
  const int p = smallest_factor(n);
  const int m = n / p;
  for (int q = 0; q < p; ++q) mixed_radix(in + q * stride, stride * p, out + q * m, m, sign);

  const double base = sign * 2.0 * std::numbers::pi / n;
  std::vector<cd> tmp(p);
  for (int k = 0; k < m; ++k) {
    for (int r = 0; r < p; ++r) {
      cd acc = 0;
      const int f = k + r * m;
      for (int q = 0; q < p; ++q) {
        const long e = (long(q) * f) % n;
        acc += out[q * m + k] * std::polar(1.0, base * double(e));
      }
      tmp[r] = acc;
    }
    for (int r = 0; r < p; ++r) out[k + r * m] = tmp[r];
  }
}

std::vector<cd> transform_pow2_or_smooth(const std::vector<cd>& x, int sign) {
  std::vector<cd> out(x.size());
  mixed_radix(x.data(), 1, out.data(), static_cast<int>(x.size()), sign);
  return out;
}

std::vector<cd> bluestein(const std::vector<cd>& x, int sign) {
  const int n = static_cast<int>(x.size());
  int M = 1;
  while (M < 2 * n - 1) M <<= 1;
  // chirp[k] = exp(sign·iπ k²/n); k² reduced mod 2n keeps the angle exact.
  std::vector<cd> chirp(n);
  for (int k = 0; k < n; ++k) {
    const long k2 = (long(k) * k) % (2L * n);
    chirp[k] = std::polar(1.0, sign * std::numbers::pi * double(k2) / n);
  }
  std::vector<cd> a(M, 0.0), b(M, 0.0);
  for (int k = 0; k < n; ++k) a[k] = x[k] * chirp[k];
  b[0] = std::conj(chirp[0]);
  for (int k = 1; k < n; ++k) b[k] = b[M - k] = std::conj(chirp[k]);
  auto fa = transform_pow2_or_smooth(a, -1);
  auto fb = transform_pow2_or_smooth(b, -1);
  for (int i = 0; i < M; ++i) fa[i] *= fb[i];
  // inverse via conjugation
  for (auto& v : fa) v = std::conj(v);
  auto conv = transform_pow2_or_smooth(fa, -1);
  std::vector<cd> out(n);
  for (int k = 0; k < n; ++k) out[k] = std::conj(conv[k]) / double(M) * chirp[k];
  return out;
}

std::vector<cd> transform(const std::vector<cd>& x, int sign) {
  if (x.empty()) return {};
  if (uses_bluestein(static_cast<int>(x.size()))) return bluestein(x, sign);
  return transform_pow2_or_smooth(x, sign);
}

std::vector<cd> to_cd(const ComplexVec& z) {
  std::vector<cd> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = cd(z.re[i], z.im[i]);
  return out;
}

ComplexVec from_cd(const std::vector<cd>& v, double factor = 1.0) {
  ComplexVec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.re[i] = v[i].real() * factor;
    out.im[i] = v[i].imag() * factor;
  }
  return out;
}

}  // namespace

bool uses_bluestein(int n) { return n > 1 && largest_factor(n) > kMaxDirectRadix; }

ComplexVec fft(const ComplexVec& x) { return from_cd(transform(to_cd(x), -1)); }

ComplexVec fft(const std::vector<double>& x) { return fft(ComplexVec::from_real(x)); }

ComplexVec ifft(const ComplexVec& z) {
  if (z.size() == 0) return {};
  return from_cd(transform(to_cd(z), +1), 1.0 / double(z.size()));
}

ComplexVec complex_linear(const ComplexVec& z, const Tensor& w_re, const Tensor& w_im, const ComplexVec& b) {
  const int L = static_cast<int>(z.size());
  if (w_re.rank() != 2 || w_re.rows() != L || w_re.cols() != L || w_im.shape() != w_re.shape() ||
      static_cast<int>(b.size()) != L)
    throw DimensionError("complex_linear: filter " + shape_str(w_re.shape()) + " does not fit length " +
                         std::to_string(L));
  // Stacked operand [Re z, Im z] against the 2L×2L real block.
  std::vector<double> stacked(2 * L);
  for (int i = 0; i < L; ++i) {
    stacked[i] = z.re[i];
    stacked[L + i] = z.im[i];
  }
  auto block = [&](int r, int c) -> double {
    const bool top = r < L, left = c < L;
    const int i = r % L, j = c % L;
    if (top && left) return w_re.at(i, j);
    if (top && !left) return w_im.at(i, j);
    if (!top && left) return -w_im.at(i, j);
    return w_re.at(i, j);
  };
  ComplexVec out(L);
  for (int c = 0; c < 2 * L; ++c) {
    double acc = 0;
    for (int r = 0; r < 2 * L; ++r) acc += stacked[r] * block(r, c);
    if (c < L)
      out.re[c] = acc + b.re[c];
    else
      out.im[c - L] = acc + b.im[c - L];
  }
  return out;
}

// ---------------------------------------------------------------------------
// differentiable

ComplexVar make_complex(const Var& re) {
  return {re, Var(Tensor(re.shape(), Real(0)), false)};
}

namespace {

// Shared body of the forward/inverse ops. For y = F x (unnormalised) the
// adjoint is Fᴴ g = conj(F conj g); for the inverse it is F g / L.
ComplexVar fft_op(const ComplexVar& x, bool inverse) {
  const std::size_t L = x.size();
  if (x.im.size() != L) throw DimensionError("fft: re/im length mismatch");
  ComplexVec in(L);
  for (std::size_t i = 0; i < L; ++i) {
    in.re[i] = x.re.value()[i];
    in.im[i] = x.im.value()[i];
  }
  const ComplexVec out = inverse ? ifft(in) : fft(in);
  Tensor yr({static_cast<int>(L)}), yi({static_cast<int>(L)});
  for (std::size_t i = 0; i < L; ++i) {
    yr[i] = static_cast<Real>(out.re[i]);
    yi[i] = static_cast<Real>(out.im[i]);
  }
  Tape* tape = active_tape();
  const bool track = tape && (x.re.requires_grad() || x.im.requires_grad());
  ComplexVar y{Var(std::move(yr), track), Var(std::move(yi), track)};
  if (track) {
    auto xr = x.re.node(), xi = x.im.node(), outr = y.re.node(), outi = y.im.node();
    tape->record(inverse ? "ifft" : "fft", [xr, xi, outr, outi, L, inverse] {
      if (outr->grad.empty() && outi->grad.empty()) return;
      ComplexVec g(L);
      for (std::size_t i = 0; i < L; ++i) {
        g.re[i] = outr->grad.empty() ? 0.0 : double(outr->grad[i]);
        g.im[i] = outi->grad.empty() ? 0.0 : double(outi->grad[i]);
      }
      ComplexVec back;
      if (inverse) {
        back = fft(g);
        for (std::size_t i = 0; i < L; ++i) {
          back.re[i] /= double(L);
          back.im[i] /= double(L);
        }
      } else {
        back = ifft(g);
        for (std::size_t i = 0; i < L; ++i) {
          back.re[i] *= double(L);
          back.im[i] *= double(L);
        }
      }
      if (xr->requires_grad) {
        auto& gr = xr->grad_buffer();
        for (std::size_t i = 0; i < L; ++i) gr[i] += static_cast<Real>(back.re[i]);
      }
      if (xi->requires_grad) {
        auto& gi = xi->grad_buffer();
        for (std::size_t i = 0; i < L; ++i) gi[i] += static_cast<Real>(back.im[i]);
      }
    });
  }
  return y;
}

}  // namespace

ComplexVar fft(const ComplexVar& x) { return fft_op(x, false); }
ComplexVar ifft(const ComplexVar& z) { return fft_op(z, true); }

ComplexVar complex_add(const ComplexVar& a, const ComplexVar& b) { return {add(a.re, b.re), add(a.im, b.im)}; }

ComplexVar complex_mul(const ComplexVar& a, const ComplexVar& b) {
  return {sub(mul(a.re, b.re), mul(a.im, b.im)), add(mul(a.re, b.im), mul(a.im, b.re))};
}

ComplexVar complex_linear(const ComplexVar& z, const Var& w_re, const Var& w_im, const Var& b_re, const Var& b_im) {
  const int L = static_cast<int>(z.size());
  if (w_re.rows() != L || w_re.cols() != L || w_im.shape() != w_re.shape() || static_cast<int>(b_re.size()) != L ||
      static_cast<int>(b_im.size()) != L)
    throw DimensionError("complex_linear: filter " + shape_str(w_re.shape()) + " does not fit length " +
                         std::to_string(L));
  const Var zr = reshape(z.re, {1, L});
  const Var zi = reshape(z.im, {1, L});
  // Rows of the real block product: [zr, zi]·[[Wr, Wi], [-Wi, Wr]].
  Var re = sub(matmul(zr, w_re), matmul(zi, w_im));
  Var im = add(matmul(zr, w_im), matmul(zi, w_re));
  re = add(reshape(re, {L}), reshape(b_re, {L}));
  im = add(reshape(im, {L}), reshape(b_im, {L}));
  return {re, im};
}

}  // namespace mmrec
