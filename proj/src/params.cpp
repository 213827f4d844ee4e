#include "mmrec/params.hpp"

#include <cmath>

namespace mmrec {

Var ParamStore::add(const std::string& name, Tensor init) {
  if (contains(name)) throw ContractError("parameter '" + name + "' registered twice");
  index_[name] = entries_.size();
  entries_.push_back({name, "", Var::param(std::move(init))});
  return entries_.back().var;
}

void ParamStore::alias(const std::string& name, const std::string& target) {
  if (contains(name)) throw ContractError("parameter '" + name + "' registered twice");
  const Entry& t = entries_.at(index_.at(target));
  const std::string canonical = t.alias_of.empty() ? t.name : t.alias_of;
  index_[name] = entries_.size();
  entries_.push_back({name, canonical, t.var});
}

const Var& ParamStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("unknown parameter '" + name + "'");
  return entries_[it->second].var;
}

std::vector<const ParamStore::Entry*> ParamStore::canonical() const {
  std::vector<const Entry*> out;
  for (const auto& e : entries_)
    if (e.alias_of.empty()) out.push_back(&e);
  return out;
}

std::size_t ParamStore::parameter_count() const { return parameter_count(""); }

std::size_t ParamStore::parameter_count(const std::string& prefix) const {
  std::size_t n = 0;
  for (const auto* e : canonical())
    if (e->name.compare(0, prefix.size(), prefix) == 0) n += e->var.size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& e : entries_) e.var.zero_grad();
}

std::map<std::string, Tensor> ParamStore::gradients() const {
  std::map<std::string, Tensor> out;
  for (const auto* e : canonical())
    out[e->name] = e->var.grad().empty() ? Tensor(e->var.shape(), Real(0)) : e->var.grad();
  return out;
}

Tensor Initializer::normal(Shape shape, double std) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> d(0.0, std);
  for (auto& v : t.values()) v = static_cast<Real>(d(rng_));
  return t;
}

Tensor Initializer::uniform(Shape shape, double lo, double hi) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> d(lo, hi);
  for (auto& v : t.values()) v = static_cast<Real>(d(rng_));
  return t;
}

Tensor Initializer::log_uniform(Shape shape, double lo, double hi) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> d(std::log(lo), std::log(hi));
  for (auto& v : t.values()) v = static_cast<Real>(std::exp(d(rng_)));
  return t;
}

}  // namespace mmrec
