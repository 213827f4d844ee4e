#include <cmath>
#include <complex>

#include "doctest.h"
#include "mmrec/model.hpp"
#include "support.hpp"

using namespace mmrec;
using namespace testing_support;

namespace {

ModelConfig small_config() {
  ModelConfig cfg;
  cfg.N = 8;
  cfg.D = 4;
  cfg.K = 4;
  cfg.L_max = 8;
  cfg.dropout = 0;
  return cfg;
}

const FeatureDims kDims{6, 5, 10};

Model small_model(ModelConfig cfg = small_config(), std::uint64_t seed = 3) { return make_model(cfg, seed, kDims); }

double max_abs(const Tensor& t) {
  double m = 0;
  for (Real v : t.values()) m = std::max(m, std::abs(double(v)));
  return m;
}

Var normalised_diffs(int L, std::mt19937_64& rng) {
  std::vector<std::int64_t> ts{1000};
  for (int i = 1; i < L; ++i) ts.push_back(ts.back() + 1 + static_cast<std::int64_t>(rng() % 900));
  return Var(compute_time_diffs(ts).values);
}

ComplexVec naive_spectrum(const std::vector<double>& x) {
  const int n = static_cast<int>(x.size());
  std::vector<std::complex<double>> xc(x.begin(), x.end());
  const auto z = naive_dft(xc);
  ComplexVec out(n);
  for (int k = 0; k < n; ++k) {
    out.re[k] = z[k].real();
    out.im[k] = z[k].imag();
  }
  return out;
}

Var real_vec(const std::vector<double>& v) {
  Tensor t({static_cast<int>(v.size())});
  for (std::size_t i = 0; i < v.size(); ++i) t[i] = static_cast<Real>(v[i]);
  return Var(t);
}

std::vector<std::complex<double>> to_complex(const ComplexVec& z) {
  std::vector<std::complex<double>> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = {z.re[i], z.im[i]};
  return out;
}

std::vector<std::complex<double>> apply_filter(const std::vector<std::complex<double>>& z, const ComplexFilter& f) {
  const int n = static_cast<int>(z.size());
  std::vector<std::complex<double>> y(n);
  for (int j = 0; j < n; ++j) {
    std::complex<double> s(f.b_re.value()[j], f.b_im.value()[j]);
    for (int k = 0; k < n; ++k) s += z[k] * std::complex<double>(f.w_re.value().at(k, j), f.w_im.value().at(k, j));
    y[j] = s;
  }
  return y;
}

// Step-by-step fusion with naive DFTs.
std::vector<double> fusion_oracle(const Tensor& a, const Tensor& b, const FusionParams& p) {
  const int n = static_cast<int>(a.size()), L = p.max_len;
  std::vector<double> pa(L, 0.0), pb(L, 0.0);
  for (int i = 0; i < n; ++i) {
    pa[L - n + i] = a[i];
    pb[L - n + i] = b[i];
  }
  auto sa = to_complex(naive_spectrum(pa)), sb = to_complex(naive_spectrum(pb));
  if (p.use_adaptive) {
    const auto ka = apply_filter(sa, p.adaptive), kb = apply_filter(sb, p.adaptive);
    for (int k = 0; k < L; ++k) {
      sa[k] *= ka[k];
      sb[k] *= kb[k];
    }
  }
  std::vector<std::complex<double>> f(L);
  for (int k = 0; k < L; ++k) f[k] = sa[k] + sb[k];
  if (p.use_learnable) f = apply_filter(f, p.learnable);
  const auto back = naive_dft(f, true);
  std::vector<double> out;
  for (int i = L - n; i < L; ++i) out.push_back(back[i].real());
  return out;
}

}  // namespace

TEST_SUITE("align") {

TEST_CASE("projection split") {
  Model m = small_model();
  TiSSDParams p = m.layers[0].align.tissd_v;
  const int N = 8, D = 4, W = 2 * D + N + 1;
  std::mt19937_64 rng(30);
  const Tensor x = random_tensor({5, N}, rng);

  p.w1 = Var(Tensor({N, W}));
  p.b1 = Var(Tensor({W}));
  SsdInputs z = tissd_project(Var(x), p);
  for (const Var* v : {&z.C, &z.B, &z.X, &z.delta})
    for (Real e : v->value().values()) CHECK(e == 0);
  Tensor hot({W});
  hot[W - 1] = 1;
  p.b1 = Var(hot);
  z = tissd_project(Var(x), p);
  for (Real e : z.delta.value().values()) CHECK(e == 1);
  for (Real e : z.X.value().values()) CHECK(e == 0);

  p = m.layers[0].align.tissd_v;
  z = tissd_project(Var(x), p);
  const Tensor full = add_bias(matmul(Var(x), p.w1), p.b1).value();
  for (int t = 0; t < 5; ++t) {
    for (int c = 0; c < D; ++c) {
      CHECK(z.C.value().at(t, c) == full.at(t, c));
      CHECK(z.B.value().at(t, c) == full.at(t, D + c));
    }
    for (int c = 0; c < N; ++c) CHECK(z.X.value().at(t, c) == full.at(t, 2 * D + c));
    CHECK(z.delta.value()[t] == full.at(t, 2 * D + N));
  }
  CHECK_THROWS_AS(tissd_project(Var(Tensor({5, N + 1})), p), DimensionError);
}

TEST_CASE("tissd reduces to unmasked linear attention") {
  ModelConfig cfg = small_config();
  cfg.flags.time_aware = false;
  Model m = small_model(cfg);
  TiSSDParams p = m.layers[0].align.tissd_v;
  const int N = 8, D = 4, L = 3;
  Tensor delta_kernel({cfg.K, 2 * D + N});
  for (int c = 0; c < 2 * D + N; ++c) delta_kernel.at(0, c) = 1;
  p.conv = Var(delta_kernel);
  p.act = Activation::identity;
  p.a_log = Var(Tensor::vec({-40}));  // A -> 0, so â -> 1
  std::mt19937_64 rng(31);
  const Tensor x = random_tensor({L, N}, rng);
  const Tensor y = tissd_forward(Var(x), Var(Tensor({L})), p).x_tilde.value();
  const SsdInputs in = tissd_project(Var(x), p);
  const Tensor bd = p.b_delta.value();
  for (int t = 0; t < L; ++t)
    for (int n = 0; n < N; ++n) {
      double s = 0;
      for (int j = 0; j <= t; ++j) {
        const double dhat = std::log1p(std::exp(0.0)) + bd[cfg.L_max - L + j];
        double cb = 0;
        for (int k = 0; k < D; ++k) cb += double(in.C.value().at(t, k)) * in.B.value().at(j, k);
        s += cb * dhat * in.X.value().at(j, n);
      }
      CHECK(y.at(t, n) == doctest::Approx(s).epsilon(1e-4));
    }
}

TEST_CASE("zero input gives zero tissd output without projection bias") {
  Model m = small_model();
  TiSSDParams p = m.layers[0].align.tissd_v;
  p.b1 = Var(Tensor({2 * 4 + 8 + 1}));
  std::mt19937_64 rng(32);
  const Tensor y = tissd_forward(Var(Tensor({6, 8})), normalised_diffs(6, rng), p).x_tilde.value();
  for (Real v : y.values()) CHECK(v == 0);
}

TEST_CASE("ffn examples") {
  Model m = small_model();
  FFNParams p = m.layers[0].align.ffn_v;
  std::mt19937_64 rng(33);
  const Tensor h = random_tensor({4, 8}, rng, 0, 1);
  FFNParams z = p;
  z.w_in = Var(Tensor({8, 32}));
  z.b_in = Var(Tensor({32}));
  z.w_out = Var(Tensor({32, 8}));
  z.b_out = Var(Tensor({8}));
  const Tensor null_out = ffn_forward(Var(h), z).value();
  for (Real v : null_out.values()) CHECK(v == 0);

  FFNParams id = z;
  Tensor win({8, 32}), wout({32, 8});
  for (int i = 0; i < 8; ++i) win.at(i, i) = wout.at(i, i) = 1;
  id.w_in = Var(win);
  id.w_out = Var(wout);
  id.act = Activation::relu;
  CHECK(max_abs_diff(ffn_forward(Var(h), id).value(), h) < 1e-7);

  const Tensor y = ffn_forward(Var(h), p).value();
  const Tensor hidden = naive_matmul(h, p.w_in.value());
  Tensor act({4, 32});
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 32; ++c) {
      const double a = hidden.at(r, c) + p.b_in.value()[c];
      act.at(r, c) = static_cast<Real>(a / (1 + std::exp(-a)));
    }
  const Tensor out = naive_matmul(act, p.w_out.value());
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 8; ++c) CHECK(y.at(r, c) == doctest::Approx(out.at(r, c) + p.b_out.value()[c]).epsilon(1e-4));
}

TEST_CASE("shared weights give identical paths, unshared do not") {
  std::mt19937_64 rng(34);
  const Tensor x = random_tensor({6, 8}, rng);
  const Var d = normalised_diffs(6, rng);
  Model shared = small_model();
  CHECK(shared.layers[0].align.tissd_v.w1.node() == shared.layers[0].align.tissd_t.w1.node());
  const AlignOutput a = align_modalities(Var(x), Var(x), d, d, shared.layers[0].align);
  CHECK(a.hv.value() == a.ht.value());
  CHECK(a.d_hat_v.value() == a.d_hat_t.value());

  ModelConfig cfg = small_config();
  cfg.flags.shared_align = false;
  Model split = small_model(cfg);
  CHECK(split.layers[0].align.tissd_v.w1.node() != split.layers[0].align.tissd_t.w1.node());
  const AlignOutput b = align_modalities(Var(x), Var(x), d, d, split.layers[0].align);
  CHECK(max_abs_diff(b.hv.value(), b.ht.value()) > 0);
  const Tensor yv = tissd_forward(Var(x), d, split.layers[0].align.tissd_v).x_tilde.value();
  const Tensor yt = tissd_forward(Var(x), d, split.layers[0].align.tissd_t).x_tilde.value();
  CHECK(max_abs_diff(yv, yt) > 0.1 * max_abs(yv));
}

TEST_CASE("dropout zero: train equals eval") {
  std::mt19937_64 rng(35), drop(1);
  const Tensor xv = random_tensor({5, 8}, rng), xt = random_tensor({5, 8}, rng);
  const Var d = normalised_diffs(5, rng);
  Model m = small_model();
  const AlignOutput e = align_modalities(Var(xv), Var(xt), d, d, m.layers[0].align);
  const AlignOutput t = align_modalities(Var(xv), Var(xt), d, d, m.layers[0].align, {true, 0, &drop});
  CHECK(e.pv.value() == t.pv.value());
  CHECK(e.pt.value() == t.pt.value());
}

TEST_CASE("residual layer norm rows are standardised") {
  std::mt19937_64 rng(36);
  Model m = small_model();
  const Var d = normalised_diffs(7, rng);
  const AlignOutput a =
      align_modalities(Var(random_tensor({7, 8}, rng)), Var(random_tensor({7, 8}, rng)), d, d, m.layers[0].align);
  for (const Var* h : {&a.hv, &a.ht, &a.pv, &a.pt})
    for (int r = 0; r < 7; ++r) {
      double mean = 0, var = 0;
      for (int c = 0; c < 8; ++c) mean += h->value().at(r, c);
      mean /= 8;
      for (int c = 0; c < 8; ++c) var += std::pow(h->value().at(r, c) - mean, 2);
      CHECK(std::abs(mean) < 1e-5);
      CHECK(var / 8 == doctest::Approx(1).epsilon(1e-3));
    }
}

TEST_CASE("alignment stage is row causal in the item features") {
  std::mt19937_64 rng(37);
  Model m = small_model();
  const int L = 8;
  const Tensor xv = random_tensor({L, 8}, rng), xt = random_tensor({L, 8}, rng);
  const Var d = normalised_diffs(L, rng);
  const AlignOutput base = align_modalities(Var(xv), Var(xt), d, d, m.layers[0].align);
  for (int t = 1; t < L; ++t) {
    Tensor xv2 = xv, xt2 = xt;
    for (int c = 0; c < 8; ++c) {
      xv2.at(t, c) += 1;
      xt2.at(t, c) -= 1;
    }
    const AlignOutput p = align_modalities(Var(xv2), Var(xt2), d, d, m.layers[0].align);
    for (int s = 0; s < t; ++s)
      for (int c = 0; c < 8; ++c) {
        CHECK(p.pv.value().at(s, c) == base.pv.value().at(s, c));
        CHECK(p.pt.value().at(s, c) == base.pt.value().at(s, c));
      }
  }
}

TEST_CASE("time values reach earlier rows only through the sequence-level gate") {
  std::mt19937_64 rng(39);
  Model m = small_model();
  const int L = 8;
  const Tensor xv = random_tensor({L, 8}, rng), xt = random_tensor({L, 8}, rng);
  const Var d = normalised_diffs(L, rng);
  Tensor d2 = d.value();
  d2[L - 1] += 2;
  const auto zero_gate = [&] {
    for (auto* e : m.params().canonical())
      if (e->name.find("time.mlp_w2") != std::string::npos) {
        Var v = e->var;
        for (auto& x : v.mutable_value().values()) x = 0;
      }
  };
  // Largest change over rows before the last one, in the enhanced time
  // values and in the stage output.
  const auto earlier_change = [&] {
    const AlignOutput a = align_modalities(Var(xv), Var(xt), d, d, m.layers[0].align);
    const AlignOutput b = align_modalities(Var(xv), Var(xt), Var(d2), Var(d2), m.layers[0].align);
    double dh = 0, out = 0;
    for (int s = 0; s < L - 1; ++s) {
      dh = std::max(dh, double(std::abs(a.d_hat_v.value()[s] - b.d_hat_v.value()[s])));
      for (int k = 0; k < 8; ++k) out = std::max(out, double(std::abs(a.pv.value().at(s, k) - b.pv.value().at(s, k))));
    }
    return std::pair{dh, out};
  };
  CHECK(earlier_change().first > 1e-4);
  // With the gate's output weights zeroed the gate is a constant and the
  // earlier rows no longer see the later value.
  zero_gate();
  const auto [dh, out] = earlier_change();
  CHECK(dh == 0);
  CHECK(out == 0);
}

TEST_CASE("without time the output ignores timestamps") {
  ModelConfig cfg = small_config();
  cfg.flags.time_aware = false;
  Model m = small_model(cfg);
  std::mt19937_64 rng(38);
  const Tensor xv = random_tensor({6, 8}, rng), xt = random_tensor({6, 8}, rng);
  const Var d1 = normalised_diffs(6, rng), d2 = normalised_diffs(6, rng);
  const AlignOutput a = align_modalities(Var(xv), Var(xt), d1, d1, m.layers[0].align);
  const AlignOutput b = align_modalities(Var(xv), Var(xt), d2, d2, m.layers[0].align);
  CHECK(a.pv.value() == b.pv.value());
  CHECK(a.pt.value() == b.pt.value());
}

}  // TEST_SUITE

TEST_SUITE("fusion") {

TEST_CASE("adaptive filter examples") {
  const int L = 4;
  ComplexFilter f{Var(Tensor({L, L})), Var(Tensor({L, L})), Var(Tensor({L}, Real(1))), Var(Tensor({L}))};
  ComplexVec z(L);
  z.re = {1, -2, 0.5, 3};
  z.im = {0, 1, -1, 2};
  const ComplexVar out = adaptive_filter_apply(ComplexVar{real_vec(z.re), real_vec(z.im)}, f);
  for (int k = 0; k < L; ++k) {
    CHECK(out.re.value()[k] == doctest::Approx(z.re[k]));
    CHECK(out.im.value()[k] == doctest::Approx(z.im[k]));
  }
  const ComplexVar zero = adaptive_filter_apply(ComplexVar{Var(Tensor({L})), Var(Tensor({L}))}, f);
  for (int k = 0; k < L; ++k) CHECK(zero.re.value()[k] == 0);

  std::mt19937_64 rng(40);
  const ComplexFilter r{Var(random_tensor({L, L}, rng)), Var(random_tensor({L, L}, rng)), Var(random_tensor({L}, rng)),
                        Var(random_tensor({L}, rng))};
  const ComplexVar y = adaptive_filter_apply(ComplexVar{real_vec(z.re), real_vec(z.im)}, r);
  const auto zc = to_complex(z);
  const auto k = apply_filter(zc, r);
  for (int i = 0; i < L; ++i) {
    const auto e = k[i] * zc[i];
    CHECK(std::abs(e - std::complex<double>(y.re.value()[i], y.im.value()[i])) < 1e-5);
  }
  CHECK_THROWS_AS(adaptive_filter_apply(ComplexVar{Var(Tensor({3})), Var(Tensor({3}))}, f), DimensionError);
}

TEST_CASE("fusion examples and symmetry") {
  Model m = small_model();
  FusionParams p = m.layers[0].fusion;
  std::mt19937_64 rng(41);
  const Tensor a = random_tensor({6}, rng), b = random_tensor({6}, rng);
  const Tensor ab = fuse_time_signals(Var(a), Var(b), p).value(), ba = fuse_time_signals(Var(b), Var(a), p).value();
  CHECK(max_abs_diff(ab, ba) < 1e-6);

  FusionParams z = p;
  z.adaptive.b_re = z.adaptive.b_im = z.learnable.b_re = z.learnable.b_im = Var(Tensor({8}));
  const Tensor silent = fuse_time_signals(Var(Tensor({6})), Var(Tensor({6})), z).value();
  for (Real v : silent.values()) CHECK(v == 0);

  // Unit adaptive kernel and identity learnable filter: output is a + b.
  FusionParams id = p;
  Tensor eye({8, 8});
  for (int i = 0; i < 8; ++i) eye.at(i, i) = 1;
  id.adaptive = {Var(Tensor({8, 8})), Var(Tensor({8, 8})), Var(Tensor({8}, Real(1))), Var(Tensor({8}))};
  id.learnable = {Var(eye), Var(Tensor({8, 8})), Var(Tensor({8})), Var(Tensor({8}))};
  FusionDiagnostics diag;
  const Tensor s = fuse_time_signals(Var(a), Var(b), id, &diag).value();
  for (int i = 0; i < 6; ++i) CHECK(s[i] == doctest::Approx(a[i] + b[i]).epsilon(1e-5));
  CHECK(diag.max_imag_residue < 1e-5);
}

TEST_CASE("fusion matches the naive DFT oracle in every filter configuration") {
  std::mt19937_64 rng(42);
  for (auto [adaptive, learnable] : {std::pair{true, true}, {true, false}, {false, true}, {false, false}}) {
    CAPTURE(adaptive);
    CAPTURE(learnable);
    Model m = small_model();
    FusionParams p = m.layers[0].fusion;
    p.use_adaptive = adaptive;
    p.use_learnable = learnable;
    for (int n : {1, 5, 8}) {
      const Tensor a = random_tensor({n}, rng), b = random_tensor({n}, rng);
      const Tensor got = fuse_time_signals(Var(a), Var(b), p).value();
      const auto want = fusion_oracle(a, b, p);
      for (int i = 0; i < n; ++i) CHECK(std::abs(got[i] - want[i]) < 1e-5);
    }
  }
}

TEST_CASE("fusion rejects mismatched and overlong signals") {
  Model m = small_model();
  CHECK_THROWS_AS(fuse_time_signals(Var(Tensor({3})), Var(Tensor({4})), m.layers[0].fusion), DimensionError);
  CHECK_THROWS_AS(fuse_time_signals(Var(Tensor({9})), Var(Tensor({9})), m.layers[0].fusion), DimensionError);
}

}  // TEST_SUITE

TEST_SUITE("cross") {

TEST_CASE("stream isolation and split offsets") {
  Model m = small_model();
  const TiCoSSDParams& p = m.layers[0].cross;
  std::mt19937_64 rng(50);
  const Tensor pv = random_tensor({5, 8}, rng), pt = random_tensor({5, 8}, rng);
  const SsdInputs full = ticossd_project(Var(pv), Var(pt), p);
  const SsdInputs nov = ticossd_project(Var(Tensor({5, 8})), Var(pt), p);
  const SsdInputs not_ = ticossd_project(Var(pv), Var(Tensor({5, 8})), p);
  for (int t = 0; t < 5; ++t)
    for (int c = 0; c < 4; ++c) CHECK(nov.C.value().at(t, c) == p.b2.value()[c]);
  CHECK(nov.B.value() == full.B.value());
  CHECK(nov.X.value() == full.X.value());
  CHECK(nov.delta.value() == full.delta.value());
  CHECK(not_.C.value() == full.C.value());
  for (int t = 0; t < 5; ++t) {
    for (int c = 0; c < 4; ++c) CHECK(not_.B.value().at(t, c) == p.b3.value()[c]);
    for (int c = 0; c < 8; ++c) CHECK(not_.X.value().at(t, c) == p.b3.value()[4 + c]);
    CHECK(not_.delta.value()[t] == p.b3.value()[12]);
  }
  const Tensor bxd = add_bias(matmul(Var(pt), p.w3), p.b3).value();
  for (int t = 0; t < 5; ++t) {
    for (int c = 0; c < 4; ++c) CHECK(full.B.value().at(t, c) == bxd.at(t, c));
    for (int c = 0; c < 8; ++c) CHECK(full.X.value().at(t, c) == bxd.at(t, 4 + c));
  }
}

TEST_CASE("unit step size reduces to the masked product") {
  ModelConfig cfg = small_config();
  cfg.flags.time_aware = false;
  Model m = small_model(cfg);
  TiCoSSDParams p = m.layers[0].cross;
  // softplus(0) + b = 1 for every position.
  p.b_delta = Var(Tensor({cfg.L_max}, Real(1 - std::log(2.0))));
  std::mt19937_64 rng(51);
  const int L = 6;
  const Tensor pv = random_tensor({L, 8}, rng), pt = random_tensor({L, 8}, rng);
  const Tensor got = ticossd_forward(Var(pv), Var(pt), Var(Tensor({L})), p).value();
  const SsdInputs raw = ticossd_project(Var(pv), Var(pt), p);
  const Tensor C = causal_conv1d(raw.C, p.conv_c, p.act).value();
  Tensor bxin({L, 12});
  const Tensor proj = add_bias(matmul(Var(pt), p.w3), p.b3).value();
  for (int t = 0; t < L; ++t)
    for (int c = 0; c < 12; ++c) bxin.at(t, c) = proj.at(t, c);
  const Tensor BX = causal_conv1d(Var(bxin), p.conv_bx, p.act).value();
  Tensor B({L, 4}), X({L, 8});
  for (int t = 0; t < L; ++t) {
    for (int c = 0; c < 4; ++c) B.at(t, c) = BX.at(t, c);
    for (int c = 0; c < 8; ++c) X.at(t, c) = BX.at(t, 4 + c);
  }
  DecayCoeffs a;
  const double A = -std::exp(double(p.a_log.value()[0]));
  for (int t = 0; t < L; ++t) a.a_hat.push_back(static_cast<Real>(std::exp(A)));
  const Tensor want = ssd_quadratic(C, B, X, build_decay_mask(a));
  CHECK(max_abs_diff(got, want) < 1e-5);
}

TEST_CASE("swapping the streams changes the output") {
  Model m = small_model();
  std::mt19937_64 rng(52);
  const Tensor a = random_tensor({6, 8}, rng), b = random_tensor({6, 8}, rng);
  const Var d(random_tensor({6}, rng));
  const Tensor ab = ticossd_forward(Var(a), Var(b), d, m.layers[0].cross).value();
  const Tensor ba = ticossd_forward(Var(b), Var(a), d, m.layers[0].cross).value();
  CHECK(max_abs_diff(ab, ba) > 0.1 * max_abs(ab));
}

TEST_CASE("output head examples") {
  Model m = small_model();
  const TiCoSSDParams& p = m.layers[0].cross;
  std::mt19937_64 rng(53);
  const Tensor pv = random_tensor({4, 8}, rng), pt = random_tensor({4, 8}, rng);
  TiCoSSDParams q = p;
  q.ffn.w_in = Var(Tensor({8, 32}));
  q.ffn.b_in = Var(Tensor({32}));
  q.ffn.w_out = Var(Tensor({32, 8}));
  q.ffn.b_out = Var(Tensor({8}));
  const Tensor y = output_head(Var(Tensor({4, 8})), Var(pv), Var(pt), q).value();
  const Tensor o = layer_norm(add(Var(pv), Var(pt)), p.ln_o.gamma, p.ln_o.beta).value();
  CHECK(max_abs_diff(y, layer_norm(Var(o), p.ln_y.gamma, p.ln_y.beta).value()) < 1e-5);
  const Tensor z = output_head(Var(Tensor({4, 8})), Var(Tensor({4, 8})), Var(Tensor({4, 8})), q).value();
  for (Real v : z.values()) CHECK(v == 0);
}

TEST_CASE("two layers double the block parameters") {
  ModelConfig cfg = small_config();
  const Model one = small_model(cfg);
  cfg.layers = 2;
  const Model two = small_model(cfg);
  const std::size_t block = one.params().parameter_count("layer0.");
  CHECK(block > 0);
  CHECK(two.params().parameter_count("layer0.") == block);
  CHECK(two.params().parameter_count("layer1.") == block);
  CHECK(two.params().parameter_count() - one.params().parameter_count() == block);
}

}  // TEST_SUITE
