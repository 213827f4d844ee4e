#include <cmath>

#include "doctest.h"
#include "mmrec/harness.hpp"
#include "mmrec/ssd.hpp"
#include "support.hpp"

using namespace mmrec;
using namespace testing_support;

namespace {

DecayCoeffs random_decay(int L, std::mt19937_64& rng, double lo = 0.05, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  DecayCoeffs a;
  for (int i = 0; i < L; ++i) a.a_hat.push_back(static_cast<Real>(u(rng)));
  return a;
}

// Direct evaluation of the masked sum with explicit products.
Tensor brute_ssd(const Tensor& C, const Tensor& B, const DecayCoeffs& a, const Tensor& X) {
  const int L = C.rows(), D = C.cols(), N = X.cols();
  Tensor Y({L, N});
  for (int t = 0; t < L; ++t)
    for (int j = 0; j <= t; ++j) {
      double prod = 1;
      for (int k = j + 1; k <= t; ++k) prod *= a.a_hat[k];
      double cb = 0;
      for (int s = 0; s < D; ++s) cb += double(C.at(t, s)) * B.at(j, s);
      for (int n = 0; n < N; ++n) Y.at(t, n) += static_cast<Real>(prod * cb * X.at(j, n));
    }
  return Y;
}

}  // namespace

TEST_SUITE("ssd") {

TEST_CASE("decay mask examples") {
  const MaskMatrix ones = build_decay_mask({{Real(9), 1, 1}});
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(ones.at(i, j) == doctest::Approx(j <= i ? 1.0 : 0.0));
  const MaskMatrix m = build_decay_mask({{Real(9), 2, 3}});
  const double expect[3][3] = {{1, 0, 0}, {2, 1, 0}, {6, 3, 1}};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(m.at(i, j) == doctest::Approx(expect[i][j]));
  CHECK_THROWS_AS(build_decay_mask({{Real(1), Real(0.5), Real(0)}}), DomainError);
  CHECK_THROWS_AS(build_decay_mask({{Real(1), Real(-0.5)}}), DomainError);
}

TEST_CASE("decay mask matches brute-force products") {
  std::mt19937_64 rng(11);
  const DecayCoeffs a = random_decay(8, rng, 1e-3, 1.0);
  const MaskMatrix m = build_decay_mask(a);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j <= i; ++j) {
      double p = 1;
      for (int k = j + 1; k <= i; ++k) p *= a.a_hat[k];
      CHECK(std::abs(m.at(i, j) - p) < 1e-6);
    }
}

TEST_CASE("mask structure: triangular, unit diagonal, telescoping, monotone") {
  std::mt19937_64 rng(12);
  for (int L = 1; L <= 16; ++L) {
    const DecayCoeffs a = random_decay(L, rng, 0.01, 0.999);
    const MaskMatrix m = build_decay_mask(a);
    for (int i = 0; i < L; ++i) {
      CHECK(m.at(i, i) == 1.0);
      for (int j = i + 1; j < L; ++j) CHECK(m.at(i, j) == 0.0);
      for (int j = 0; j <= i; ++j)
        for (int k = 0; k <= j; ++k) CHECK(std::abs(m.at(i, k) - m.at(i, j) * m.at(j, k)) < 1e-6);
    }
    for (int j = 0; j < L; ++j)
      for (int i = j + 1; i < L; ++i) CHECK(m.at(i, j) <= m.at(i - 1, j));
  }
}

TEST_CASE("hand example in both forms") {
  const Tensor C = Tensor::mat(2, 1, {1, 1}), B = Tensor::mat(2, 1, {1, 2}), X = Tensor::mat(2, 1, {3, 4});
  const DecayCoeffs a{{Real(0.7), Real(0.5)}};
  const Tensor q = ssd_quadratic(C, B, X, build_decay_mask(a));
  const Tensor r = ssd_recurrent(C, B, a, X);
  CHECK(q[0] == doctest::Approx(3));
  CHECK(q[1] == doctest::Approx(9.5));
  CHECK(r[0] == doctest::Approx(3));
  CHECK(r[1] == doctest::Approx(9.5));
}

TEST_CASE("degenerate decays") {
  std::mt19937_64 rng(13);
  const Tensor C = random_tensor({5, 3}, rng), B = random_tensor({5, 3}, rng), X = random_tensor({5, 2}, rng);
  MaskMatrix eye{5, std::vector<double>(25, 0.0)};
  for (int i = 0; i < 5; ++i) eye.entries[i * 5 + i] = 1;
  const Tensor diag = ssd_quadratic(C, B, X, eye);
  const Tensor memoryless = ssd_recurrent(C, B, DecayCoeffs{std::vector<Real>(5, 0)}, X);
  for (int t = 0; t < 5; ++t) {
    double cb = 0;
    for (int s = 0; s < 3; ++s) cb += C.at(t, s) * B.at(t, s);
    for (int n = 0; n < 2; ++n) {
      CHECK(diag.at(t, n) == doctest::Approx(cb * X.at(t, n)).epsilon(1e-5));
      CHECK(memoryless.at(t, n) == doctest::Approx(cb * X.at(t, n)).epsilon(1e-5));
    }
  }
  const Tensor zero = ssd_recurrent(C, B, random_decay(5, rng), Tensor({5, 2}));
  for (Real v : zero.values()) CHECK(v == 0);
}

TEST_CASE("duality against each other and the brute-force sum") {
  std::mt19937_64 rng(14);
  for (int L : {1, 2, 8, 33, 64})
    for (int D : {1, 4, 16})
      for (int N : {1, 3, 20}) {
        CAPTURE(L);
        CAPTURE(D);
        CAPTURE(N);
        const Tensor C = random_tensor({L, D}, rng), B = random_tensor({L, D}, rng), X = random_tensor({L, N}, rng);
        const DecayCoeffs a = random_decay(L, rng);
        const Tensor q = ssd_quadratic(C, B, X, build_decay_mask(a));
        const Tensor r = ssd_recurrent(C, B, a, X);
        CHECK(max_abs_diff(q, r) < 1e-5);
        if (L <= 8) CHECK(max_abs_diff(q, brute_ssd(C, B, a, X)) < 1e-5);
        CHECK(max_abs_diff(ssd_auto(C, B, a, X, SsdMode::quadratic), ssd_auto(C, B, a, X, SsdMode::recurrent)) <
              1e-5);
      }
}

TEST_CASE("singleton sequence gives C1·B1·X1") {
  const Tensor C = Tensor::mat(1, 2, {1, 2}), B = Tensor::mat(1, 2, {3, -1}), X = Tensor::mat(1, 2, {2, 5});
  const DecayCoeffs a{{Real(0.3)}};
  for (const Tensor& y : {ssd_quadratic(C, B, X, build_decay_mask(a)), ssd_recurrent(C, B, a, X)}) {
    CHECK(y[0] == doctest::Approx(2));
    CHECK(y[1] == doctest::Approx(5));
  }
}

TEST_CASE("causality of both forms") {
  std::mt19937_64 rng(15);
  const int L = 10;
  const Tensor C = random_tensor({L, 4}, rng), B = random_tensor({L, 4}, rng), X = random_tensor({L, 3}, rng);
  const DecayCoeffs a = random_decay(L, rng);
  const Tensor base = ssd_recurrent(C, B, a, X);
  for (int t = 0; t < L; ++t) {
    Tensor C2 = C, B2 = B, X2 = X;
    C2.at(t, 0) += 1;
    B2.at(t, 1) -= 1;
    X2.at(t, 2) += 2;
    const Tensor yq = ssd_quadratic(C2, B2, X2, build_decay_mask(a));
    const Tensor yr = ssd_recurrent(C2, B2, a, X2);
    for (int s = 0; s < t; ++s)
      for (int n = 0; n < 3; ++n) {
        CHECK(std::abs(yq.at(s, n) - base.at(s, n)) < 1e-6);
        CHECK(yr.at(s, n) == base.at(s, n));
      }
  }
}

TEST_CASE("form selection") {
  CHECK(select_ssd_form(4, 64, 256) == SsdMode::quadratic);
  CHECK(select_ssd_form(200, 8, 8) == SsdMode::recurrent);
  CHECK(flop_heuristic_form(4, 64, 256) == SsdMode::quadratic);
  CHECK(flop_heuristic_form(200, 8, 8) == SsdMode::recurrent);
  CHECK(parse_ssd_mode("auto") == SsdMode::automatic);
  CHECK(ssd_mode_name(SsdMode::recurrent) == "recurrent");
  CHECK_THROWS_AS(parse_ssd_mode("chunked"), ContractError);
}

TEST_CASE("shape errors") {
  CHECK_THROWS_AS(ssd_recurrent(Tensor({3, 2}), Tensor({3, 3}), DecayCoeffs{{1, 1, 1}}, Tensor({3, 1})),
                  DimensionError);
  CHECK_THROWS_AS(ssd_recurrent(Tensor({3, 2}), Tensor({3, 2}), DecayCoeffs{{1, 1}}, Tensor({3, 1})),
                  DimensionError);
}

TEST_CASE("verify harness on a reduced grid") {
  const DualityReport rep = verify_duality(7, DualityGrid{{1, 2, 9, 40}, {1, 4}, {1, 3}});
  CHECK(rep.rows.size() == 16);
  CHECK(rep.pass);
  CHECK(rep.failures().empty());
  CHECK(rep.literal_growth > 0);
}

}  // TEST_SUITE
