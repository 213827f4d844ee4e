#include "mmrec/training.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <cmath>
#include <numeric>
#include <set>

#include "json.hpp"
#include "mmrec/checkpoint.hpp"

namespace mmrec {

Var inbatch_ce_loss(const Var& users, const Var& targets, Real tau) {
  if (users.rows() < 2) throw ContractError("inbatch_ce_loss: needs at least two users");
  if (users.rows() != targets.rows() || users.cols() != targets.cols())
    throw DimensionError("inbatch_ce_loss: users " + shape_str(users.shape()) + " vs targets " +
                         shape_str(targets.shape()));
  std::vector<int> diag(users.rows());
  std::iota(diag.begin(), diag.end(), 0);
  return cross_entropy(matmul_bt(users, targets), diag, tau);
}

Var fullcorpus_ce_loss(const Var& users, const Var& items, std::span<const int> targets, Real tau) {
  const Var U = users.value().rank() == 1 ? reshape(users, {1, static_cast<int>(users.size())}) : users;
  if (static_cast<int>(targets.size()) != U.rows()) throw DimensionError("fullcorpus_ce_loss: target count != users");
  std::vector<int> idx(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i] < 1 || targets[i] > items.rows())
      throw ContractError("fullcorpus_ce_loss: unknown target " + std::to_string(targets[i]));
    idx[i] = targets[i] - 1;
  }
  return cross_entropy(matmul_bt(U, items), idx, tau);
}

// ---------------------------------------------------------------------------
// NAdam

void Nadam::advance() {
  ++t_;
  const double psi = opt_.momentum_decay;
  mu_t_ = opt_.beta1 * (1.0 - 0.5 * std::pow(0.96, t_ * psi));
  mu_next_ = opt_.beta1 * (1.0 - 0.5 * std::pow(0.96, (t_ + 1) * psi));
  mu_product_ *= mu_t_;
}

void Nadam::step(const std::string& name, Tensor& param, const Tensor& grad, double lr) {
  if (param.shape() != grad.shape())
    throw DimensionError("nadam: gradient " + shape_str(grad.shape()) + " does not match '" + name + "' " +
                         shape_str(param.shape()));
  auto& m = m_[name];
  auto& v = v_[name];
  if (m.empty()) {
    m.assign(param.size(), 0.0);
    v.assign(param.size(), 0.0);
  }
  const double b1 = opt_.beta1, b2 = opt_.beta2;
  const double bc2 = 1.0 - std::pow(b2, double(t_));
  const double c_grad = lr * (1.0 - mu_t_) / (1.0 - mu_product_);
  const double c_mom = lr * mu_next_ / (1.0 - mu_product_ * mu_next_);
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    m[i] = b1 * m[i] + (1 - b1) * g;
    v[i] = b2 * v[i] + (1 - b2) * g * g;
    const double denom = std::sqrt(v[i] / bc2) + opt_.eps;
    param[i] = static_cast<Real>(param[i] - c_grad * g / denom - c_mom * m[i] / denom);
  }
}

void Nadam::step(ParamStore& ps, double lr) {
  advance();
  for (const auto* e : ps.canonical()) {
    Var v = e->var;
    const Tensor grad = v.grad().empty() ? Tensor(v.shape(), Real(0)) : v.grad();
    step(e->name, v.mutable_value(), grad, lr);
  }
}

double clip_gradients(ParamStore& ps, double max_norm) {
  double sq = 0;
  for (const auto* e : ps.canonical())
    for (Real g : e->var.grad().values()) sq += double(g) * g;
  const double norm = std::sqrt(sq);
  if (max_norm > 0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (const auto* e : ps.canonical()) {
      auto& node = *e->var.node();
      for (auto& g : node.grad.values()) g = static_cast<Real>(g * s);
    }
  }
  return norm;
}

// ---------------------------------------------------------------------------
// logs

std::string EpochLog::to_json() const {
  nlohmann::ordered_json j;
  j["epoch"] = epoch;
  j["split"] = split;
  j["loss"] = loss;
  j["ndcg10"] = ndcg10;
  j["recall10"] = recall10;
  j["seconds"] = seconds;
  if (split == "pretrain") j["collisions"] = collisions;
  return j.dump();
}

std::string TrainResult::convergence_json() const {
  nlohmann::ordered_json j;
  j["epochs_run"] = epochs_run;
  j["best_epoch"] = best_epoch;
  j["best_ndcg10"] = best_ndcg10;
  j["epochs_to_threshold"] = epochs_to_threshold;
  j["seconds_per_epoch"] = seconds_per_epoch;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// loops

double train_step(const Dataset& ds, const std::vector<const Example*>& batch, Model& m, Nadam& opt,
                  const TrainConfig& cfg, std::mt19937_64& rng, int* collisions) {
  const ModelConfig& mc = m.config();
  Tape tape;
  double loss_value = 0;
  {
    TapeScope scope(tape);
    ForwardContext ctx{true, mc.dropout, &rng, mc.ssd_mode};
    std::vector<Var> users;
    std::vector<int> targets;
    for (const Example* ex : batch) {
      users.push_back(reshape(forward_user(ex->history, ds.catalog, m, ctx).u, {1, mc.N}));
      targets.push_back(ex->target);
    }
    const Var U = stack_rows(users);
    Var loss;
    if (cfg.mode == TrainMode::pretrain) {
      if (collisions) *collisions += static_cast<int>(targets.size() - std::set<int>(targets.begin(), targets.end()).size());
      loss = inbatch_ce_loss(U, item_representations(ds.catalog, m, targets), mc.tau);
    } else {
      loss = fullcorpus_ce_loss(U, all_item_representations(ds.catalog, m), targets, mc.tau);
    }
    loss_value = loss.value()[0];
    m.params().zero_grad();
    tape.backward(loss);
  }
  if (cfg.clip_norm > 0) clip_gradients(m.params(), cfg.clip_norm);
  opt.step(m.params(), cfg.lr);
  m.params().zero_grad();
  return loss_value;
}

namespace {

using Clock = std::chrono::steady_clock;

std::vector<std::vector<const Example*>> make_batches(const std::vector<Example>& examples, int batch_size,
                                                      int min_size, std::mt19937_64& rng) {
  std::vector<const Example*> order;
  for (const auto& ex : examples) order.push_back(&ex);
  // Fisher-Yates with an explicit draw so the order does not depend on the
  // standard library's shuffle.
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
  std::vector<std::vector<const Example*>> batches;
  for (std::size_t i = 0; i < order.size(); i += batch_size) {
    std::vector<const Example*> b(order.begin() + i, order.begin() + std::min(order.size(), i + batch_size));
    if (static_cast<int>(b.size()) >= min_size) batches.push_back(std::move(b));
  }
  return batches;
}

void emit(const EpochLog& e, const TrainOutput& out, std::ofstream* file) {
  const std::string line = e.to_json() + "\n";
  if (out.log) *out.log << line << std::flush;
  if (file) *file << line << std::flush;
}

struct Snapshot {
  std::vector<Tensor> values;
  static Snapshot take(const ParamStore& ps) {
    Snapshot s;
    for (const auto* e : ps.canonical()) s.values.push_back(e->var.value());
    return s;
  }
  void restore(ParamStore& ps) const {
    std::size_t i = 0;
    for (const auto* e : ps.canonical()) {
      Var v = e->var;
      v.mutable_value() = values[i++];
    }
  }
};

TrainResult run_loop(const Dataset& ds, const TrainConfig& cfg, Model& m, const TrainOutput& out, bool pretrain) {
  cfg.validate();
  if (ds.split.train.empty()) throw ContractError("training: empty training split");
  if (out.dir) std::filesystem::create_directories(*out.dir);
  std::ofstream file;
  if (out.dir) file.open(*out.dir / (pretrain ? "pretrain_log.jsonl" : "finetune_log.jsonl"), std::ios::trunc);
  std::ofstream* fp = out.dir ? &file : nullptr;

  std::mt19937_64 rng(cfg.seed);
  Nadam opt;
  TrainResult res;
  Snapshot best;
  double total_seconds = 0;
  int stale = 0;
  const bool has_valid = !ds.split.valid.empty();
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = Clock::now();
    EpochLog e;
    e.epoch = epoch;
    e.split = pretrain ? "pretrain" : "finetune";
    double loss = 0;
    int steps = 0;
    for (const auto& batch : make_batches(ds.split.train, cfg.batch_size, pretrain ? 2 : 1, rng)) {
      loss += train_step(ds, batch, m, opt, cfg, rng, &e.collisions);
      ++steps;
    }
    if (steps == 0) throw ContractError("training: no batch of the required size");
    e.loss = loss / steps;
    if (has_valid) {
      const EvalReport r = evaluate_model(m, ds.split.valid, ds.catalog, {10});
      e.ndcg10 = r.ndcg.at(10);
      e.recall10 = r.recall.at(10);
    }
    e.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    total_seconds += e.seconds;
    res.log.push_back(e);
    res.epochs_run = epoch;
    emit(e, out, fp);

    if (res.epochs_to_threshold < 0 && has_valid && e.ndcg10 >= cfg.ndcg_threshold) res.epochs_to_threshold = epoch;
    if (pretrain) {
      res.best_epoch = epoch;
      res.best_ndcg10 = e.ndcg10;
      if (out.dir) save_checkpoint(*out.dir / "last.mmck", m);
      continue;
    }
    if (epoch == 1 || e.ndcg10 > res.best_ndcg10) {
      res.best_epoch = epoch;
      res.best_ndcg10 = e.ndcg10;
      best = Snapshot::take(m.params());
      stale = 0;
    } else if (++stale >= cfg.patience) {
      break;
    }
  }
  res.seconds_per_epoch = total_seconds / res.epochs_run;
  if (!pretrain) best.restore(m.params());
  if (out.dir) {
    save_checkpoint(*out.dir / "model.mmck", m);
    write_file(*out.dir / (pretrain ? "pretrain_convergence.json" : "convergence.json"), res.convergence_json());
  }
  return res;
}

}  // namespace

TrainResult run_pretrain(const Dataset& ds, const TrainConfig& cfg, Model& m, const TrainOutput& out) {
  TrainConfig c = cfg;
  c.mode = TrainMode::pretrain;
  return run_loop(ds, c, m, out, true);
}

TrainResult run_finetune(const Dataset& ds, const TrainConfig& cfg, Model& m, const TrainOutput& out) {
  TrainConfig c = cfg;
  c.mode = TrainMode::finetune;
  return run_loop(ds, c, m, out, false);
}

}  // namespace mmrec
