#pragma once

// Losses, the NAdam optimiser and the pretrain / finetune loops.

#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mmrec/config.hpp"
#include "mmrec/eval.hpp"
#include "mmrec/model.hpp"

namespace mmrec {

// Scores U·Tᵀ/τ where row b of T is user b's target; the diagonal is the
// positive.
Var inbatch_ce_loss(const Var& users, const Var& targets, Real tau);
// -log softmax(u·Rᵀ/τ)[target]; R rows are items 1..|I|, targets are item
// indices (1-based). Batched when users is B×N.
Var fullcorpus_ce_loss(const Var& users, const Var& items, std::span<const int> targets, Real tau);

struct NadamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double momentum_decay = 0.004;
};

class Nadam {
 public:
  explicit Nadam(NadamOptions opt = {}) : opt_(opt) {}
  // Updates every canonical parameter of `ps` from its gradient.
  void step(ParamStore& ps, double lr);
  // Single-tensor form used by the store overload.
  void step(const std::string& name, Tensor& param, const Tensor& grad, double lr);
  void advance();
  long steps() const { return t_; }

 private:
  NadamOptions opt_;
  long t_ = 0;
  double mu_product_ = 1.0;
  double mu_t_ = 0, mu_next_ = 0;
  std::map<std::string, std::vector<double>> m_, v_;
};

// Scales gradients so their global norm is at most max_norm; returns the
// norm before scaling.
double clip_gradients(ParamStore& ps, double max_norm);

struct EpochLog {
  int epoch = 0;
  std::string split;
  double loss = 0;
  double ndcg10 = 0;
  double recall10 = 0;
  double seconds = 0;
  int collisions = 0;  // duplicate in-batch targets (pretraining)

  std::string to_json() const;
};

struct TrainResult {
  std::vector<EpochLog> log;
  int epochs_run = 0;
  int best_epoch = 0;
  double best_ndcg10 = 0;
  int epochs_to_threshold = -1;  // -1: never reached
  double seconds_per_epoch = 0;

  std::string convergence_json() const;
};

struct TrainOutput {
  std::optional<std::filesystem::path> dir;  // checkpoints and logs
  std::ostream* log = nullptr;               // JSON lines
};

TrainResult run_pretrain(const Dataset& ds, const TrainConfig& cfg, Model& m, const TrainOutput& out = {});
TrainResult run_finetune(const Dataset& ds, const TrainConfig& cfg, Model& m, const TrainOutput& out = {});

// One optimisation step over `batch`; returns the loss. Exposed for tests.
double train_step(const Dataset& ds, const std::vector<const Example*>& batch, Model& m, Nadam& opt,
                  const TrainConfig& cfg, std::mt19937_64& rng, int* collisions = nullptr);

}  // namespace mmrec
