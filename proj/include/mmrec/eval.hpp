#pragma once

// Ranking metrics and full-corpus evaluation.

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mmrec/model.hpp"

namespace mmrec {

double recall_at_k(std::span<const int> ranked, int target, int k);
double ndcg_at_k(std::span<const int> ranked, int target, int k);
// Same metrics from a 1-indexed rank.
double recall_from_rank(int rank, int k);
double ndcg_from_rank(int rank, int k);

// 1-indexed rank of `target` (an index into `scores`) when sorting by
// descending score, ties going to the lower index.
int rank_of(std::span<const Real> scores, int target);
// Indices sorted by descending score, ties by ascending index.
std::vector<int> rank_order(std::span<const Real> scores);

struct EvalReport {
  std::vector<int> ks;
  std::map<int, double> recall;
  std::map<int, double> ndcg;
  int users = 0;
  double mean_rank = 0;

  std::string to_json() const;
};

// scores[i] is the score of item i + 1.
using ExampleScorer = std::function<std::vector<Real>(const Example&)>;

EvalReport evaluate_scores(const std::vector<Example>& examples, int num_items, const ExampleScorer& scorer,
                           const std::vector<int>& ks = {10, 50});

EvalReport evaluate_model(const Model& m, const std::vector<Example>& examples, const ItemCatalog& catalog,
                          const std::vector<int>& ks = {10, 50});

struct TruncationRow {
  int length = 0;
  EvalReport report;
};

// Re-evaluates with every history cut to its last `length` interactions.
std::vector<TruncationRow> truncation_probe(const Model& m, const std::vector<Example>& examples,
                                            const ItemCatalog& catalog, const std::vector<int>& lengths,
                                            const std::vector<int>& ks = {10, 50});
std::string truncation_csv(const std::vector<TruncationRow>& rows);

}  // namespace mmrec
