#include "mmrec/ssd.hpp"

#include <algorithm>
#include <cmath>

#include "mmrec/kernels.hpp"

namespace mmrec {

namespace {

kernels::SsdDims check_dims(const Shape& c, const Shape& b, const Shape& x, std::size_t decay_len) {
  if (c.size() != 2 || b.size() != 2 || x.size() != 2)
    throw DimensionError("ssd: C, B̄ and X must be matrices");
  const int L = c[0], D = c[1], N = x[1];
  if (b[0] != L || b[1] != D || x[0] != L || decay_len != static_cast<std::size_t>(L))
    throw DimensionError("ssd: inconsistent shapes C" + shape_str(c) + " B" + shape_str(b) + " X" + shape_str(x) +
                         " decay[" + std::to_string(decay_len) + "]");
  return {L, D, N};
}

}  // namespace

MaskMatrix build_decay_mask(const DecayCoeffs& a) {
  const int L = static_cast<int>(a.a_hat.size());
  std::vector<double> cum(L, 0.0);
  for (int i = 1; i < L; ++i) {
    if (!(a.a_hat[i] > 0)) throw DomainError("build_decay_mask: â[" + std::to_string(i) + "] is not positive");
    cum[i] = cum[i - 1] + std::log(double(a.a_hat[i]));
  }
  MaskMatrix m{L, std::vector<double>(static_cast<std::size_t>(L) * L, 0.0)};
  for (int i = 0; i < L; ++i)
    for (int j = 0; j <= i; ++j) m.entries[static_cast<std::size_t>(i) * L + j] = std::exp(cum[i] - cum[j]);
  return m;
}

Tensor ssd_quadratic(const Tensor& C, const Tensor& Bbar, const Tensor& X, const MaskMatrix& mask) {
  const auto d = check_dims(C.shape(), Bbar.shape(), X.shape(), static_cast<std::size_t>(mask.L));
  Tensor Y({d.L, d.N});
  for (int i = 0; i < d.L; ++i) {
    std::vector<double> acc(d.N, 0.0);
    for (int j = 0; j <= i; ++j) {
      double cb = 0;
      for (int s = 0; s < d.D; ++s) cb += double(C.at(i, s)) * Bbar.at(j, s);
      const double w = mask.at(i, j) * cb;
      for (int n = 0; n < d.N; ++n) acc[n] += w * X.at(j, n);
    }
    for (int n = 0; n < d.N; ++n) Y.at(i, n) = static_cast<Real>(acc[n]);
  }
  return Y;
}

Tensor ssd_recurrent(const Tensor& C, const Tensor& Bbar, const DecayCoeffs& a, const Tensor& X) {
  const auto d = check_dims(C.shape(), Bbar.shape(), X.shape(), a.a_hat.size());
  Tensor Y({d.L, d.N});
  kernels::parallel::ssd_recurrent(C.values(), Bbar.values(), a.a_hat, X.values(), Y.values(), d);
  return Y;
}

SsdMode parse_ssd_mode(std::string_view s) {
  if (s == "auto") return SsdMode::automatic;
  if (s == "quadratic") return SsdMode::quadratic;
  if (s == "recurrent") return SsdMode::recurrent;
  throw ContractError("unknown ssd mode '" + std::string(s) + "'");
}

std::string_view ssd_mode_name(SsdMode m) {
  switch (m) {
    case SsdMode::automatic: return "auto";
    case SsdMode::quadratic: return "quadratic";
    case SsdMode::recurrent: return "recurrent";
  }
  return "?";
}

SsdMode flop_heuristic_form(int L, int D, int N) {
  return long(L) * L * std::max(D, N) < long(L) * D * N ? SsdMode::quadratic : SsdMode::recurrent;
}

// Per-element costs (ns) of the two OpenMP kernels, fitted to single-thread
// timings: the quadratic form pays a reduction over D, an axpy over N and an
// exp per lower-triangle entry; the recurrence pays D·N per step.
SsdMode select_ssd_form(int L, int D, int N) {
  const double pairs = 0.5 * L * (L + 1.0);
  const double quad = pairs * (1.33 * D + 0.44 * N + 20.0) + 1.1 * L * N;
  const double rec = L * (1.27 * D * N + 3.2 * N + 3.6 * D);
  return quad < rec ? SsdMode::quadratic : SsdMode::recurrent;
}

Tensor ssd_auto(const Tensor& C, const Tensor& Bbar, const DecayCoeffs& a, const Tensor& X, SsdMode mode) {
  if (mode == SsdMode::automatic) mode = select_ssd_form(C.rows(), C.cols(), X.cols());
  if (mode == SsdMode::quadratic) return ssd_quadratic(C, Bbar, X, build_decay_mask(a));
  return ssd_recurrent(C, Bbar, a, X);
}

// ---------------------------------------------------------------------------
// differentiable

Var ssd_quadratic(const Var& C, const Var& Bbar, const Var& log_a, const Var& X) {
  const auto d = check_dims(C.shape(), Bbar.shape(), X.shape(), log_a.size());
  Tensor Y({d.L, d.N});
  auto mask = std::make_shared<std::vector<double>>();
  auto score = std::make_shared<std::vector<double>>();
  kernels::parallel::ssd_quadratic(C.value().values(), Bbar.value().values(), log_a.value().values(),
                                   X.value().values(), Y.values(), d, mask.get(), score.get());
  Tape* tape = active_tape();
  const bool track =
      tape && (C.requires_grad() || Bbar.requires_grad() || log_a.requires_grad() || X.requires_grad());
  Var y(std::move(Y), track);
  if (track) {
    auto cn = C.node(), bn = Bbar.node(), an = log_a.node(), xn = X.node(), yn = y.node();
    tape->record("ssd_quadratic", [cn, bn, an, xn, yn, mask, score, d] {
      if (yn->grad.empty()) return;
      std::vector<Real> gC(cn->requires_grad ? cn->value.size() : 0), gB(bn->requires_grad ? bn->value.size() : 0),
          gA(an->requires_grad ? an->value.size() : 0), gX(xn->requires_grad ? xn->value.size() : 0);
      kernels::parallel::ssd_quadratic_backward(cn->value.values(), bn->value.values(), xn->value.values(), *mask,
                                                *score, yn->grad.values(), gC, gB, gA, gX, d);
      auto acc = [](VarNode& n, const std::vector<Real>& g) {
        if (g.empty()) return;
        auto& buf = n.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) buf[i] += g[i];
      };
      acc(*cn, gC);
      acc(*bn, gB);
      acc(*an, gA);
      acc(*xn, gX);
    });
  }
  return y;
}

Var ssd_recurrent(const Var& C, const Var& Bbar, const Var& a, const Var& X) {
  const auto d = check_dims(C.shape(), Bbar.shape(), X.shape(), a.size());
  Tensor Y({d.L, d.N});
  Tape* tape = active_tape();
  const bool track = tape && (C.requires_grad() || Bbar.requires_grad() || a.requires_grad() || X.requires_grad());
  auto states = std::make_shared<std::vector<double>>();
  kernels::parallel::ssd_recurrent(C.value().values(), Bbar.value().values(), a.value().values(), X.value().values(),
                                   Y.values(), d, track ? states.get() : nullptr);
  Var y(std::move(Y), track);
  if (track) {
    auto cn = C.node(), bn = Bbar.node(), an = a.node(), xn = X.node(), yn = y.node();
    tape->record("ssd_recurrent", [cn, bn, an, xn, yn, states, d] {
      if (yn->grad.empty()) return;
      std::vector<Real> gC(cn->requires_grad ? cn->value.size() : 0), gB(bn->requires_grad ? bn->value.size() : 0),
          gA(an->requires_grad ? an->value.size() : 0), gX(xn->requires_grad ? xn->value.size() : 0);
      kernels::parallel::ssd_recurrent_backward(cn->value.values(), bn->value.values(), an->value.values(),
                                                xn->value.values(), *states, yn->grad.values(), gC, gB, gA, gX, d);
      auto acc = [](VarNode& n, const std::vector<Real>& g) {
        if (g.empty()) return;
        auto& buf = n.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) buf[i] += g[i];
      };
      acc(*cn, gC);
      acc(*bn, gB);
      acc(*an, gA);
      acc(*xn, gX);
    });
  }
  return y;
}

Var ssd_auto(const Var& C, const Var& Bbar, const Var& log_a, const Var& X, SsdMode mode) {
  if (mode == SsdMode::automatic) mode = select_ssd_form(C.rows(), C.cols(), X.cols());
  if (mode == SsdMode::quadratic) return ssd_quadratic(C, Bbar, log_a, X);
  return ssd_recurrent(C, Bbar, unary(Activation::exp, log_a), X);
}

}  // namespace mmrec
