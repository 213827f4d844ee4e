#pragma once

// Oracles and helpers shared by the test binaries.

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include "mmrec/autodiff.hpp"
#include "mmrec/data.hpp"
#include "mmrec/tensor.hpp"

namespace testing_support {

using mmrec::Real;
using mmrec::Tensor;
using mmrec::Var;

inline Tensor random_tensor(mmrec::Shape shape, std::mt19937_64& rng, double lo = -1, double hi = 1) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> u(lo, hi);
  for (auto& v : t.values()) v = static_cast<Real>(u(rng));
  return t;
}

inline Tensor naive_matmul(const Tensor& a, const Tensor& b) {
  Tensor c({a.rows(), b.cols()});
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < b.cols(); ++j) {
      double s = 0;
      for (int k = 0; k < a.cols(); ++k) s += double(a.at(i, k)) * b.at(k, j);
      c.at(i, j) = static_cast<Real>(s);
    }
  return c;
}

inline std::vector<std::complex<double>> naive_dft(const std::vector<std::complex<double>>& x, bool inverse = false) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> s = 0;
    for (std::size_t t = 0; t < n; ++t)
      s += x[t] * std::polar(1.0, sign * 2.0 * std::numbers::pi * double(k * t % n) / double(n));
    out[k] = inverse ? s / double(n) : s;
  }
  return out;
}

// Norm-wise relative error ||a - b|| / max(||a||, ||b||).
inline double rel_error(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double den = std::max(std::sqrt(std::max(na, nb)), 1e-12);
  return std::sqrt(num) / den;
}

struct GradCheck {
  double worst = 0;  // worst norm-wise relative error over the checked tensors
  std::size_t worst_index = 0;
  std::vector<double> per_tensor;
};

// Compares tape gradients of `loss_fn` with central differences (step h) for
// every tensor in `params`. Tensors whose analytic and numeric gradients are
// both below `floor` in norm count as agreeing.
inline GradCheck finite_difference_check(const std::function<Var()>& loss_fn, const std::vector<Var>& params,
                                         double h = 1e-3, double floor = 1e-6) {
  for (const auto& p : params) Var(p).zero_grad();
  {
    mmrec::Tape tape;
    mmrec::TapeScope scope(tape);
    const Var loss = loss_fn();
    tape.backward(loss);
  }
  GradCheck out;
  mmrec::NoTapeScope no_tape;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Var p = params[pi];
    const Tensor analytic = p.grad().empty() ? Tensor(p.shape(), Real(0)) : p.grad();
    std::vector<double> a(analytic.values().begin(), analytic.values().end()), n(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      const Real orig = p.value()[i];
      p.mutable_value()[i] = static_cast<Real>(orig + h);
      const double fp = loss_fn().value()[0];
      p.mutable_value()[i] = static_cast<Real>(orig - h);
      const double fm = loss_fn().value()[0];
      p.mutable_value()[i] = orig;
      n[i] = (fp - fm) / (2 * h);
    }
    double na = 0, nn = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      na += a[i] * a[i];
      nn += n[i] * n[i];
    }
    const double err = std::sqrt(std::max(na, nn)) < floor ? 0.0 : rel_error(a, n);
    out.per_tensor.push_back(err);
    if (err > out.worst) {
      out.worst = err;
      out.worst_index = pi;
    }
  }
  return out;
}

// Catalog of `items` random items (row 0 is the pad item); every third item
// lacks an image.
inline mmrec::ItemCatalog toy_catalog(int items, int dim_v, int dim_t, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  mmrec::ItemCatalog c;
  c.item_ids.push_back("<pad>");
  for (int i = 1; i <= items; ++i) c.item_ids.push_back("item" + std::to_string(i));
  c.feat_v = Tensor({items + 1, dim_v});
  c.feat_t = Tensor({items + 1, dim_t});
  c.present_v.assign(items + 1, 0);
  std::normal_distribution<double> n(0, 1);
  for (int i = 1; i <= items; ++i) {
    c.present_v[i] = i % 3 != 0;
    for (int j = 0; j < dim_v; ++j) c.feat_v.at(i, j) = c.present_v[i] ? static_cast<Real>(n(rng)) : Real(0);
    for (int j = 0; j < dim_t; ++j) c.feat_t.at(i, j) = static_cast<Real>(n(rng));
  }
  return c;
}

inline mmrec::UserSequence toy_sequence(int length, int items, std::mt19937_64& rng) {
  mmrec::UserSequence s;
  std::int64_t t = 1'600'000'000;
  for (int i = 0; i < length; ++i) {
    s.items.push_back(1 + static_cast<int>(rng() % items));
    t += 1 + static_cast<std::int64_t>(rng() % 86'400);
    s.timestamps.push_back(t);
  }
  return s;
}

}  // namespace testing_support
