#include <cmath>

#include "doctest.h"
#include "mmrec/autodiff.hpp"
#include "mmrec/fft.hpp"
#include "support.hpp"

using namespace mmrec;
using namespace testing_support;

TEST_SUITE("numeric") {

TEST_CASE("tensor shape contract") {
  CHECK_THROWS_AS(Tensor({2, 0}), DimensionError);
  CHECK_THROWS_AS(Tensor({1, 2, 3, 4}), DimensionError);
  CHECK_THROWS_AS(Tensor({2, 2}, std::vector<Real>{1, 2, 3}), DimensionError);
  const Tensor t({2, 3}, Real(1.5));
  CHECK(t.size() == 6);
  CHECK(t.rows() == 2);
  CHECK(t.cols() == 3);
  CHECK(t.all_finite());
}

TEST_CASE("matmul examples and triple-loop oracle") {
  const Var eye(Tensor::mat(2, 2, {1, 0, 0, 1}));
  const Var m(Tensor::mat(2, 2, {1, 2, 3, 4}));
  CHECK(matmul(eye, m).value() == m.value());
  CHECK(matmul(Var(Tensor::mat(1, 2, {1, 0})), Var(Tensor::mat(2, 1, {5, 7}))).value()[0] == doctest::Approx(5));
  std::mt19937_64 rng(1);
  const Tensor a = random_tensor({3, 4}, rng), b = random_tensor({4, 2}, rng);
  CHECK(max_abs_diff(matmul(Var(a), Var(b)).value(), naive_matmul(a, b)) < 1e-6);
  CHECK_THROWS_AS(matmul(Var(a), Var(a)), DimensionError);
}

TEST_CASE("unary activations") {
  const Var z(Tensor::vec({0}));
  CHECK(unary(Activation::softplus, z).value()[0] == doctest::Approx(0.693147).epsilon(1e-6));
  CHECK(unary(Activation::silu, z).value()[0] == 0);
  const Tensor e = unary(Activation::exp, Var(Tensor::vec({0, 1}))).value();
  CHECK(e[0] == doctest::Approx(1));
  CHECK(e[1] == doctest::Approx(2.718282).epsilon(1e-6));
  CHECK(unary(Activation::relu, Var(Tensor::vec({-2}))).value()[0] == 0);
  CHECK(unary(Activation::sigmoid, z).value()[0] == doctest::Approx(0.5));
  // Large inputs stay finite.
  CHECK(unary(Activation::softplus, Var(Tensor::vec({100, -100}))).value().all_finite());
  CHECK(parse_activation("silu") == Activation::silu);
  CHECK_THROWS_AS(parse_activation("tanh"), ContractError);
}

TEST_CASE("layer norm examples") {
  const Var ones(Tensor({4}, Real(1))), zeros(Tensor({4}, Real(0)));
  const Tensor y = layer_norm(Var(Tensor({1, 4}, Real(1))), ones, zeros).value();
  for (Real v : y.values()) CHECK(v == 0);
  const Tensor d = layer_norm_1d(Var(Tensor::vec({0, 10, 20})), Var(Tensor::vec({1})), Var(Tensor::vec({0})), 1e-12).value();
  CHECK(d[0] == doctest::Approx(-1.2247).epsilon(1e-4));
  CHECK(d[1] == doctest::Approx(0).epsilon(1e-6));
  CHECK(d[2] == doctest::Approx(1.2247).epsilon(1e-4));
  const Tensor f = layer_norm(Var(Tensor::mat(2, 1, {3, -1})), Var(Tensor::vec({0})), Var(Tensor::vec({5}))).value();
  CHECK(f[0] == 5);
  CHECK(f[1] == 5);
}

TEST_CASE("layer norm rows have zero mean and unit variance") {
  std::mt19937_64 rng(2);
  const Tensor y = layer_norm(Var(random_tensor({5, 7}, rng, -3, 3)), Var(Tensor({7}, Real(1))), Var(Tensor({7}))).value();
  for (int r = 0; r < 5; ++r) {
    double m = 0, v = 0;
    for (int c = 0; c < 7; ++c) m += y.at(r, c);
    m /= 7;
    for (int c = 0; c < 7; ++c) v += (y.at(r, c) - m) * (y.at(r, c) - m);
    CHECK(std::abs(m) < 1e-5);
    CHECK(v / 7 == doctest::Approx(1).epsilon(1e-3));
  }
}

TEST_CASE("causal conv examples") {
  std::mt19937_64 rng(3);
  const Tensor x = random_tensor({6, 2}, rng);
  Tensor delta({4, 2});
  delta.at(0, 0) = delta.at(0, 1) = 1;
  CHECK(causal_conv1d(Var(x), Var(delta), Activation::identity).value() == x);
  const Tensor y = causal_conv1d(Var(Tensor::mat(3, 1, {1, 2, 3})), Var(Tensor::mat(2, 1, {1, 1})), Activation::identity).value();
  CHECK(y[0] == 2);
  CHECK(y[1] == 3);
  CHECK(y[2] == 5);
  const Tensor z = causal_conv1d(Var(Tensor({5, 3})), Var(random_tensor({4, 3}, rng)), Activation::identity).value();
  for (Real v : z.values()) CHECK(v == 0);
}

TEST_CASE("causal conv is causal") {
  std::mt19937_64 rng(4);
  const Tensor x = random_tensor({8, 3}, rng), w = random_tensor({4, 3}, rng);
  const Tensor base = causal_conv1d(Var(x), Var(w), Activation::silu).value();
  for (int t = 0; t < 8; ++t) {
    Tensor xp = x;
    for (int c = 0; c < 3; ++c) xp.at(t, c) += Real(0.7);
    const Tensor y = causal_conv1d(Var(xp), Var(w), Activation::silu).value();
    for (int s = 0; s < t; ++s)
      for (int c = 0; c < 3; ++c) CHECK(y.at(s, c) == base.at(s, c));
  }
}

TEST_CASE("backward examples and contract") {
  Tape tape;
  TapeScope scope(tape);
  Var x = Var::param(Tensor::vec({1, 2, 3}));
  tape.backward(sum(x));
  for (Real g : x.grad().values()) CHECK(g == 1);

  Tape t2;
  TapeScope s2(t2);
  Var y = Var::param(Tensor::vec({1, 2}));
  Var unused = Var::param(Tensor::vec({4}));
  t2.backward(sum(mul(y, y)));
  CHECK(y.grad()[0] == doctest::Approx(2));
  CHECK(y.grad()[1] == doctest::Approx(4));
  CHECK(unused.grad().empty());
  CHECK_THROWS_AS(t2.backward(y), ContractError);
}

TEST_CASE("no tape records nothing") {
  Tape tape;
  {
    TapeScope scope(tape);
    NoTapeScope off;
    Var x = Var::param(Tensor::vec({1, 2}));
    (void)sum(mul(x, x));
  }
  CHECK(tape.size() == 0);
}

TEST_CASE("dropout") {
  std::mt19937_64 rng(6);
  const Var x(Tensor({100, 10}, Real(1)));
  CHECK(dropout(x, 0, rng).value() == x.value());
  const Tensor y = dropout(x, Real(0.4), rng).value();
  int zeros = 0;
  for (Real v : y.values()) {
    if (v == 0) ++zeros;
    else CHECK(v == doctest::Approx(1 / 0.6));
  }
  CHECK(zeros > 300);
  CHECK(zeros < 500);
}

TEST_CASE("fft examples") {
  const ComplexVec imp = fft(std::vector<double>{1, 0, 0, 0});
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(imp.re[k] == doctest::Approx(1));
    CHECK(std::abs(imp.im[k]) < 1e-12);
  }
  const ComplexVec cst = fft(std::vector<double>{1, 1, 1, 1});
  CHECK(cst.re[0] == doctest::Approx(4));
  for (std::size_t k = 1; k < 4; ++k) CHECK(std::abs(cst.re[k]) + std::abs(cst.im[k]) < 1e-12);
}

TEST_CASE("fft against the naive DFT, inverse identity and Parseval") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int n : {1, 2, 3, 4, 5, 7, 11, 12, 13, 16, 49, 50, 64, 97}) {
    CAPTURE(n);
    ComplexVec x(n);
    std::vector<std::complex<double>> xc(n);
    for (int i = 0; i < n; ++i) {
      x.re[i] = u(rng);
      x.im[i] = u(rng);
      xc[i] = {x.re[i], x.im[i]};
    }
    const ComplexVec z = fft(x);
    const auto ref = naive_dft(xc);
    double err = 0;
    for (int k = 0; k < n; ++k) err = std::max(err, std::abs(std::complex<double>(z.re[k], z.im[k]) - ref[k]));
    CHECK(err < 1e-6);
    const ComplexVec back = ifft(z);
    double inv = 0, ex = 0, ez = 0;
    for (int i = 0; i < n; ++i) {
      inv = std::max(inv, std::abs(back.re[i] - x.re[i]) + std::abs(back.im[i] - x.im[i]));
      ex += x.re[i] * x.re[i] + x.im[i] * x.im[i];
      ez += z.re[i] * z.re[i] + z.im[i] * z.im[i];
    }
    CHECK(inv < 1e-6);
    CHECK(std::abs(ex - ez / n) < 1e-5);
  }
  CHECK(uses_bluestein(11));
  CHECK_FALSE(uses_bluestein(50));
}

TEST_CASE("complex linear examples and oracle") {
  ComplexVec z(3);
  z.re = {1, 2, 3};
  z.im = {-1, 0, 0.5};
  Tensor eye({3, 3});
  for (int i = 0; i < 3; ++i) eye.at(i, i) = 1;
  const ComplexVec id = complex_linear(z, eye, Tensor({3, 3}), ComplexVec(3));
  for (int i = 0; i < 3; ++i) {
    CHECK(id.re[i] == doctest::Approx(z.re[i]));
    CHECK(id.im[i] == doctest::Approx(z.im[i]));
  }
  ComplexVec one(1);
  one.re = {1};
  const ComplexVec i1 = complex_linear(one, Tensor({1, 1}), Tensor({1, 1}, Real(1)), ComplexVec(1));
  CHECK(std::abs(i1.re[0]) < 1e-12);
  CHECK(i1.im[0] == doctest::Approx(1));

  std::mt19937_64 rng(8);
  const Tensor wr = random_tensor({4, 4}, rng), wi = random_tensor({4, 4}, rng);
  ComplexVec x(4), b(4);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 4; ++i) {
    x.re[i] = u(rng);
    x.im[i] = u(rng);
    b.re[i] = u(rng);
    b.im[i] = u(rng);
  }
  const ComplexVec y = complex_linear(x, wr, wi, b);
  for (int j = 0; j < 4; ++j) {
    std::complex<double> s(b.re[j], b.im[j]);
    for (int k = 0; k < 4; ++k) s += std::complex<double>(x.re[k], x.im[k]) * std::complex<double>(wr.at(k, j), wi.at(k, j));
    CHECK(std::abs(s - std::complex<double>(y.re[j], y.im[j])) < 1e-6);
  }
}

TEST_CASE("determinism") {
  std::mt19937_64 r1(10), r2(10);
  const Tensor a = random_tensor({5, 5}, r1), b = random_tensor({5, 5}, r2);
  CHECK(a == b);
  CHECK(layer_norm(Var(a), Var(Tensor({5}, Real(1))), Var(Tensor({5}))).value() ==
        layer_norm(Var(b), Var(Tensor({5}, Real(1))), Var(Tensor({5}))).value());
}

}  // TEST_SUITE
