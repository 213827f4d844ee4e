#include "mmrec/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

#include "json.hpp"

namespace mmrec {

DualityGrid DualityGrid::standard() {
  DualityGrid g;
  for (int l = 1; l <= 64; ++l) g.L.push_back(l);
  g.D = {1, 4, 64};
  g.N = {1, 3, 256};
  return g;
}

namespace {

using Clock = std::chrono::steady_clock;

Tensor gaussian(Shape s, double std, std::mt19937_64& rng) {
  Tensor t(std::move(s));
  std::normal_distribution<double> g(0.0, std);
  for (auto& v : t.values()) v = static_cast<Real>(g(rng));
  return t;
}

double rel_err(const Tensor& a, const Tensor& b) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (double(a[i]) - b[i]) * (double(a[i]) - b[i]);
    den += double(a[i]) * a[i];
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-12);
}

struct SsdCase {
  Tensor C, B, X, log_a, G;
};

SsdCase random_case(kernels::SsdDims d, std::mt19937_64& rng) {
  SsdCase c{gaussian({d.L, d.D}, 1.0 / std::sqrt(double(d.D)), rng), gaussian({d.L, d.D}, 1.0, rng),
            gaussian({d.L, d.N}, 1.0, rng), Tensor({d.L}), gaussian({d.L, d.N}, 1.0, rng)};
  std::uniform_real_distribution<double> u(0.5, 1.0);
  for (auto& v : c.log_a.values()) v = static_cast<Real>(std::log(u(rng)));
  return c;
}

struct Grads {
  Tensor y, gC, gB, gX, glog_a;
};

Grads run_form(const SsdCase& c, bool quadratic) {
  Tape tape;
  TapeScope scope(tape);
  Var C = Var::param(c.C), B = Var::param(c.B), X = Var::param(c.X), la = Var::param(c.log_a);
  const Var y = quadratic ? ssd_quadratic(C, B, la, X) : ssd_recurrent(C, B, unary(Activation::exp, la), X);
  tape.backward(sum(mul(y, Var(c.G))));
  return {y.value(), C.grad(), B.grad(), X.grad(), la.grad()};
}

}  // namespace

DualityReport verify_duality(std::uint64_t seed, const DualityGrid& grid) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(seed);
  DualityReport rep;
  for (int L : grid.L)
    for (int D : grid.D)
      for (int N : grid.N) {
        const kernels::SsdDims d{L, D, N};
        const SsdCase c = random_case(d, rng);
        const Grads q = run_form(c, true), r = run_form(c, false);
        DualityRow row{d};
        row.max_abs_forward = max_abs_diff(q.y, r.y);
        for (auto [a, b] : {std::pair{&q.gC, &r.gC}, {&q.gB, &r.gB}, {&q.gX, &r.gX}, {&q.glog_a, &r.glog_a}})
          row.max_rel_grad = std::max(row.max_rel_grad, rel_err(*a, *b));
        row.pass = row.max_abs_forward < rep.forward_tol && row.max_rel_grad < rep.grad_tol;
        rep.pass = rep.pass && row.pass;
        rep.rows.push_back(row);
      }
  // Literal decay probe: â_t = A·Δ̂_t with A < 0 alternates sign.
  {
    const kernels::SsdDims d{32, 4, 3};
    const SsdCase c = random_case(d, rng);
    std::vector<Real> lit(d.L), ex(d.L);
    for (int t = 0; t < d.L; ++t) {
      const double delta_hat = 1.5;
      lit[t] = static_cast<Real>(-1.2 * delta_hat);
      ex[t] = static_cast<Real>(std::exp(-1.2 * delta_hat));
    }
    Tensor y_lit({d.L, d.N}), y_exp({d.L, d.N});
    kernels::serial::ssd_recurrent(c.C.values(), c.B.values(), lit, c.X.values(), y_lit.values(), d);
    kernels::serial::ssd_recurrent(c.C.values(), c.B.values(), ex, c.X.values(), y_exp.values(), d);
    double ml = 0, me = 0;
    for (Real v : y_lit.values()) ml = std::max(ml, std::abs(double(v)));
    for (Real v : y_exp.values()) me = std::max(me, std::abs(double(v)));
    rep.literal_growth = ml / std::max(me, 1e-30);
    rep.literal_unstable = !std::isfinite(rep.literal_growth) || rep.literal_growth > 10.0;
  }
  rep.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return rep;
}

std::string DualityReport::failures() const {
  std::ostringstream s;
  for (const auto& r : rows)
    if (!r.pass)
      s << "L=" << r.dims.L << " D=" << r.dims.D << " N=" << r.dims.N << " forward=" << r.max_abs_forward
        << " grad=" << r.max_rel_grad << "\n";
  return s.str();
}

std::string DualityReport::to_json() const {
  nlohmann::ordered_json j;
  j["pass"] = pass;
  j["configurations"] = rows.size();
  double mf = 0, mg = 0;
  for (const auto& r : rows) {
    mf = std::max(mf, r.max_abs_forward);
    mg = std::max(mg, r.max_rel_grad);
  }
  j["max_abs_forward"] = mf;
  j["max_rel_grad"] = mg;
  j["forward_tol"] = forward_tol;
  j["grad_tol"] = grad_tol;
  j["literal_growth"] = literal_growth;
  j["literal_unstable"] = literal_unstable;
  j["seconds"] = seconds;
  auto& f = j["failures"] = nlohmann::json::array();
  for (const auto& r : rows)
    if (!r.pass)
      f.push_back({{"L", r.dims.L}, {"D", r.dims.D}, {"N", r.dims.N}, {"forward", r.max_abs_forward},
                   {"grad", r.max_rel_grad}});
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// benchmark

BenchGrid BenchGrid::standard() {
  BenchGrid g;
  for (int L : {4, 16, 64, 256})
    for (int D : {4, 16, 64})
      for (int N : {8, 64, 256}) g.points.push_back({L, D, N});
  return g;
}

namespace {

template <class F>
double median_us(F&& f, int repeats) {
  std::vector<double> t;
  f();  // warm-up
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = Clock::now();
    f();
    t.push_back(std::chrono::duration<double, std::micro>(Clock::now() - t0).count());
  }
  std::sort(t.begin(), t.end());
  return t[t.size() / 2];
}

}  // namespace

BenchReport bench_kernels(const BenchGrid& grid, int repeats, std::uint64_t seed) {
  if (repeats < 3) throw ContractError("bench_kernels: repeats must be >= 3");
  std::mt19937_64 rng(seed);
  BenchReport rep;
  rep.repeats = repeats;
  int agree = 0, heuristic = 0;
  for (const auto& d : grid.points) {
    const SsdCase c = random_case(d, rng);
    std::vector<Real> a(d.L);
    for (int t = 0; t < d.L; ++t) a[t] = static_cast<Real>(std::exp(double(c.log_a[t])));
    Tensor yq({d.L, d.N}), yr({d.L, d.N});
    BenchRow row{d};
    row.quadratic_us = median_us(
        [&] { kernels::parallel::ssd_quadratic(c.C.values(), c.B.values(), c.log_a.values(), c.X.values(),
                                               yq.values(), d); },
        repeats);
    row.recurrent_us = median_us(
        [&] { kernels::parallel::ssd_recurrent(c.C.values(), c.B.values(), a, c.X.values(), yr.values(), d); },
        repeats);
    row.max_abs_diff = max_abs_diff(yq, yr);
    row.selected = select_ssd_form(d.L, d.D, d.N);
    row.faster = row.quadratic_us < row.recurrent_us ? SsdMode::quadratic : SsdMode::recurrent;
    agree += row.selected == row.faster;
    heuristic += flop_heuristic_form(d.L, d.D, d.N) == row.faster;
    rep.max_abs_diff = std::max(rep.max_abs_diff, row.max_abs_diff);
    rep.rows.push_back(row);
  }
  rep.selector_agreement = rep.rows.empty() ? 1.0 : double(agree) / rep.rows.size();
  rep.heuristic_agreement = rep.rows.empty() ? 1.0 : double(heuristic) / rep.rows.size();
  return rep;
}

std::string BenchReport::to_json() const {
  nlohmann::ordered_json j;
  j["repeats"] = repeats;
  j["selector_agreement"] = selector_agreement;
  j["heuristic_agreement"] = heuristic_agreement;
  j["max_abs_diff"] = max_abs_diff;
  auto& rows_j = j["grid"] = nlohmann::json::array();
  for (const auto& r : rows)
    rows_j.push_back({{"L", r.dims.L},
                      {"D", r.dims.D},
                      {"N", r.dims.N},
                      {"quadratic_us", r.quadratic_us},
                      {"recurrent_us", r.recurrent_us},
                      {"max_abs_diff", r.max_abs_diff},
                      {"selected", ssd_mode_name(r.selected)},
                      {"faster", ssd_mode_name(r.faster)}});
  return j.dump(2) + "\n";
}

}  // namespace mmrec
