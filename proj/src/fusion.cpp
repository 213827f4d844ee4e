#include "mmrec/fusion.hpp"

#include <algorithm>
#include <cmath>

namespace mmrec {

ComplexVar adaptive_filter_apply(const ComplexVar& spec, const ComplexFilter& f) {
  if (static_cast<int>(spec.size()) != f.length())
    throw DimensionError("adaptive_filter_apply: spectrum length " + std::to_string(spec.size()) +
                         " does not match filter " + std::to_string(f.length()));
  const ComplexVar kernel = complex_linear(spec, f.w_re, f.w_im, f.b_re, f.b_im);
  return complex_mul(kernel, spec);
}

Var fuse_time_signals(const Var& d_hat_v, const Var& d_hat_t, const FusionParams& p, FusionDiagnostics* diag) {
  const int n = static_cast<int>(d_hat_v.size());
  if (static_cast<int>(d_hat_t.size()) != n) throw DimensionError("fuse_time_signals: signal lengths differ");
  if (n > p.max_len)
    throw DimensionError("fuse_time_signals: length " + std::to_string(n) + " exceeds " + std::to_string(p.max_len));
  ComplexVar sv = fft(make_complex(pad_left(d_hat_v, p.max_len)));
  ComplexVar st = fft(make_complex(pad_left(d_hat_t, p.max_len)));
  if (p.use_adaptive) {
    sv = adaptive_filter_apply(sv, p.adaptive);
    st = adaptive_filter_apply(st, p.adaptive);
  }
  ComplexVar fused = complex_add(sv, st);
  if (p.use_learnable)
    fused = complex_linear(fused, p.learnable.w_re, p.learnable.w_im, p.learnable.b_re, p.learnable.b_im);
  const ComplexVar back = ifft(fused);
  if (diag) {
    double m = 0;
    for (Real v : back.im.value().values()) m = std::max(m, std::abs(double(v)));
    diag->max_imag_residue = m;
  }
  return take_last(back.re, n);
}

}  // namespace mmrec
