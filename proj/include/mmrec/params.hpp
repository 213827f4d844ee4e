#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "mmrec/autodiff.hpp"

namespace mmrec {

// Named store of learnable tensors. A shared tensor is registered once under
// its canonical name; further names are aliases of the same storage.
class ParamStore {
 public:
  struct Entry {
    std::string name;
    std::string alias_of;  // empty for canonical entries
    Var var;
  };

  Var add(const std::string& name, Tensor init);
  void alias(const std::string& name, const std::string& target);

  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  const Var& get(const std::string& name) const;
  const std::vector<Entry>& entries() const { return entries_; }

  // Canonical entries only.
  std::vector<const Entry*> canonical() const;
  std::size_t parameter_count() const;
  // Parameter count of canonical entries whose name starts with prefix.
  std::size_t parameter_count(const std::string& prefix) const;

  void zero_grad();
  // Gradient per canonical name; zero tensors where nothing flowed.
  std::map<std::string, Tensor> gradients() const;

 private:
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t> index_;
};

// Seeded initialisers.
class Initializer {
 public:
  explicit Initializer(std::uint64_t seed) : rng_(seed) {}
  Tensor normal(Shape shape, double std);
  Tensor uniform(Shape shape, double lo, double hi);
  Tensor log_uniform(Shape shape, double lo, double hi);
  std::mt19937_64& rng() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

}  // namespace mmrec
