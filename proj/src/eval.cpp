#include "mmrec/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"

namespace mmrec {

double recall_from_rank(int rank, int k) { return rank >= 1 && rank <= k ? 1.0 : 0.0; }

double ndcg_from_rank(int rank, int k) { return rank >= 1 && rank <= k ? 1.0 / std::log2(rank + 1.0) : 0.0; }

namespace {
int rank_in(std::span<const int> ranked, int target) {
  const auto it = std::find(ranked.begin(), ranked.end(), target);
  return it == ranked.end() ? 0 : static_cast<int>(it - ranked.begin()) + 1;
}
}  // namespace

double recall_at_k(std::span<const int> ranked, int target, int k) {
  if (k < 1) throw ContractError("recall_at_k: k must be >= 1");
  return recall_from_rank(rank_in(ranked, target), k);
}

double ndcg_at_k(std::span<const int> ranked, int target, int k) {
  if (k < 1) throw ContractError("ndcg_at_k: k must be >= 1");
  return ndcg_from_rank(rank_in(ranked, target), k);
}

int rank_of(std::span<const Real> scores, int target) {
  const Real s = scores[target];
  int rank = 1;
  for (int j = 0; j < static_cast<int>(scores.size()); ++j)
    if (scores[j] > s || (scores[j] == s && j < target)) ++rank;
  return rank;
}

std::vector<int> rank_order(std::span<const Real> scores) {
  std::vector<int> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return scores[a] > scores[b]; });
  return idx;
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["users"] = users;
  j["mean_rank"] = mean_rank;
  for (int k : ks) {
    j["recall@" + std::to_string(k)] = recall.at(k);
    j["ndcg@" + std::to_string(k)] = ndcg.at(k);
  }
  return j.dump(2) + "\n";
}

EvalReport evaluate_scores(const std::vector<Example>& examples, int num_items, const ExampleScorer& scorer,
                           const std::vector<int>& ks) {
  if (examples.empty()) throw ContractError("evaluate: empty split");
  const int n = static_cast<int>(examples.size());
  std::vector<int> ranks(n);
  std::vector<std::string> errors(n);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    try {
      NoTapeScope no_tape;
      const std::vector<Real> s = scorer(examples[i]);
      if (static_cast<int>(s.size()) != num_items) throw DimensionError("scorer returned the wrong number of scores");
      ranks[i] = rank_of(s, examples[i].target - 1);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw ContractError("evaluate: " + e);
  EvalReport r;
  r.ks = ks;
  r.users = n;
  for (int k : ks) {
    double rec = 0, nd = 0;
    for (int rank : ranks) {
      rec += recall_from_rank(rank, k);
      nd += ndcg_from_rank(rank, k);
    }
    r.recall[k] = rec / n;
    r.ndcg[k] = nd / n;
  }
  double mr = 0;
  for (int rank : ranks) mr += rank;
  r.mean_rank = mr / n;
  return r;
}

EvalReport evaluate_model(const Model& m, const std::vector<Example>& examples, const ItemCatalog& catalog,
                          const std::vector<int>& ks) {
  Tensor reps;
  {
    NoTapeScope no_tape;
    reps = all_item_representations(catalog, m).value();
  }
  const int I = catalog.num_items(), N = m.config().N;
  return evaluate_scores(
      examples, I,
      [&](const Example& ex) {
        const Tensor u = forward_user(ex.history, catalog, m).u.value();
        std::vector<Real> s(I);
        for (int i = 0; i < I; ++i) {
          double acc = 0;
          for (int c = 0; c < N; ++c) acc += double(reps.at(i, c)) * u[c];
          s[i] = static_cast<Real>(acc);
        }
        return s;
      },
      ks);
}

std::vector<TruncationRow> truncation_probe(const Model& m, const std::vector<Example>& examples,
                                            const ItemCatalog& catalog, const std::vector<int>& lengths,
                                            const std::vector<int>& ks) {
  std::vector<TruncationRow> rows;
  for (int len : lengths) {
    if (len < 1) throw ContractError("truncation_probe: lengths must be positive");
    std::vector<Example> cut = examples;
    for (auto& ex : cut) ex.history = ex.history.last(static_cast<std::size_t>(len));
    rows.push_back({len, evaluate_model(m, cut, catalog, ks)});
  }
  return rows;
}

std::string truncation_csv(const std::vector<TruncationRow>& rows) {
  std::string s = "length";
  if (rows.empty()) return s + "\n";
  for (int k : rows[0].report.ks) s += ",recall@" + std::to_string(k) + ",ndcg@" + std::to_string(k);
  s += "\n";
  char buf[64];
  for (const auto& r : rows) {
    s += std::to_string(r.length);
    for (int k : r.report.ks) {
      std::snprintf(buf, sizeof buf, ",%.6f,%.6f", r.report.recall.at(k), r.report.ndcg.at(k));
      s += buf;
    }
    s += "\n";
  }
  return s;
}

}  // namespace mmrec
