#pragma once

// Dataset-free checks: quadratic/recurrent SSD agreement and kernel timing.

#include <cstdint>
#include <string>
#include <vector>

#include "mmrec/kernels.hpp"
#include "mmrec/ssd.hpp"

namespace mmrec {

struct DualityGrid {
  std::vector<int> L;
  std::vector<int> D;
  std::vector<int> N;

  static DualityGrid standard();  // L = 1..64, D ∈ {1,4,64}, N ∈ {1,3,256}
};

struct DualityRow {
  kernels::SsdDims dims;
  double max_abs_forward = 0;
  double max_rel_grad = 0;  // worst of C, B̄, X and the decay gradients
  bool pass = false;
};

struct DualityReport {
  std::vector<DualityRow> rows;
  double forward_tol = 1e-5;
  double grad_tol = 1e-3;
  bool pass = true;
  double seconds = 0;
  // Literal decay (â = A·Δ̂ may be negative): largest |y| of the recurrence
  // divided by the largest |y| under exp decay on the same inputs.
  double literal_growth = 0;
  bool literal_unstable = false;

  std::string to_json() const;
  std::string failures() const;
};

DualityReport verify_duality(std::uint64_t seed, const DualityGrid& grid = DualityGrid::standard());

struct BenchRow {
  kernels::SsdDims dims;
  double quadratic_us = 0;
  double recurrent_us = 0;
  double max_abs_diff = 0;
  SsdMode selected = SsdMode::automatic;
  SsdMode faster = SsdMode::automatic;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  int repeats = 0;
  double selector_agreement = 0;  // fraction of rows where selected == faster
  double heuristic_agreement = 0;  // same for flop_heuristic_form
  double max_abs_diff = 0;

  std::string to_json() const;
};

struct BenchGrid {
  std::vector<kernels::SsdDims> points;
  static BenchGrid standard();
};

BenchReport bench_kernels(const BenchGrid& grid, int repeats, std::uint64_t seed = 0);

}  // namespace mmrec
