#pragma once

// Synthetic corpora with a planted next-item rule. Items sit on a circle with
// harmonic features (visual and text are two fixed random rotations of the
// same harmonic code); users walk around the circle one item at a time, so
// the next item is the nearest unvisited feature neighbour of the last one.
// With stride > 1 each step moves that many items, so the next item is no
// longer the nearest neighbour and has to be learned. With break_prob > 0
// some steps follow a long break and skip one more item, which gives the
// timestamps something to predict.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "mmrec/data.hpp"

namespace mmrec {

struct SynthConfig {
  int users = 200;
  int items = 100;
  int dim = 32;  // even
  std::uint64_t seed = 0;          // walks and timestamps
  std::uint64_t feature_seed = 1;  // shared rotations: domains with equal feature_seed share the generator
  double phase = 0.0;              // angular offset in item steps
  double missing_visual = 0.1;
  int min_len = 5;
  int max_len = 15;
  double mean_gap = 3600.0;
  int stride = 1;
  double break_prob = 0.0;     // chance that a step follows a long break
  double break_gap = 86400.0;  // mean gap of a long break

  void validate() const;
};

struct SynthCorpus {
  std::vector<InteractionRecord> interactions;
  std::vector<std::string> item_ids;
  FeatureMatrix visual;
  FeatureMatrix text;
};

SynthCorpus make_synthetic(const SynthConfig& cfg);
// interactions.tsv, items.idx, features_v.mmf, features_t.mmf
void write_synthetic(const std::filesystem::path& dir, const SynthCorpus& corpus);

}  // namespace mmrec
