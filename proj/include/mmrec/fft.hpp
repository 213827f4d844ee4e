#pragma once

// Discrete Fourier transform for arbitrary lengths: mixed radix for lengths
// whose prime factors are all <= 7, Bluestein's chirp-z otherwise.
// Forward uses e^{-2πi kn/L} and is unnormalised; the inverse carries 1/L.

#include <vector>

#include "mmrec/autodiff.hpp"
#include "mmrec/tensor.hpp"

namespace mmrec {

ComplexVec fft(const ComplexVec& x);
ComplexVec fft(const std::vector<double>& x);
ComplexVec ifft(const ComplexVec& z);

// Largest prime factor handled by the direct mixed-radix butterflies.
inline constexpr int kMaxDirectRadix = 7;
bool uses_bluestein(int n);

// z[1×L]·W + b for complex W given as real and imaginary L×L parts,
// evaluated as the stacked real block product
//   [Re z, Im z] · [[Re W, Im W], [-Im W, Re W]] + [Re b, Im b].
ComplexVec complex_linear(const ComplexVec& z, const Tensor& w_re, const Tensor& w_im, const ComplexVec& b);

// Differentiable complex vector as two real vectors of equal length.
struct ComplexVar {
  Var re;
  Var im;
  std::size_t size() const { return re.size(); }
};

ComplexVar make_complex(const Var& re);
ComplexVar fft(const ComplexVar& x);
ComplexVar ifft(const ComplexVar& z);
ComplexVar complex_add(const ComplexVar& a, const ComplexVar& b);
ComplexVar complex_mul(const ComplexVar& a, const ComplexVar& b);
ComplexVar complex_linear(const ComplexVar& z, const Var& w_re, const Var& w_im, const Var& b_re, const Var& b_im);

}  // namespace mmrec
