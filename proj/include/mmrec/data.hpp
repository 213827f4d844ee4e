#pragma once

// Interaction ingestion, k-core filtering, sequence building, leave-one-out
// splitting and the binary feature-matrix format.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mmrec/tensor.hpp"

namespace mmrec {

struct InteractionRecord {
  std::string user_id;
  std::string item_id;
  std::int64_t timestamp = 0;

  friend bool operator==(const InteractionRecord&, const InteractionRecord&) = default;
};

// `user_id \t item_id \t timestamp` per LF-terminated line.
std::vector<InteractionRecord> parse_interactions(std::string_view text);
std::vector<InteractionRecord> parse_interactions(const std::filesystem::path& path);
void write_interactions(const std::filesystem::path& path, const std::vector<InteractionRecord>& records);

// Largest sub-multiset in which every user and item has >= k interactions.
std::vector<InteractionRecord> kcore_filter(const std::vector<InteractionRecord>& records, int k);

// Internal item index 0 is the pad item.
inline constexpr int kPadItem = 0;

struct UserSequence {
  std::vector<int> items;
  std::vector<std::int64_t> timestamps;

  std::size_t size() const { return items.size(); }
  // Most recent `n` interactions.
  UserSequence last(std::size_t n) const;
  UserSequence prefix(std::size_t n) const;
};

struct SequenceSet {
  std::vector<std::string> user_ids;  // sorted
  std::vector<UserSequence> sequences;
  std::vector<std::string> item_ids;  // index → id; entry 0 is the pad item
  std::map<std::string, int> item_index;

  int num_items() const { return static_cast<int>(item_ids.size()) - 1; }
};

// Items are indexed 1..|I| in lexical id order; each user's interactions are
// ordered by (timestamp, item_id).
SequenceSet build_sequences(const std::vector<InteractionRecord>& records);

struct Example {
  int user = 0;
  UserSequence history;
  int target = 0;
};

struct DatasetSplit {
  std::vector<Example> train;
  std::vector<Example> valid;
  std::vector<Example> test;
};

// Last interaction → test target, second-to-last → validation target, the
// rest is the training prefix (whose own last item is the training target).
// Users with fewer than three interactions contribute training data only.
DatasetSplit leave_one_out_split(const SequenceSet& set);

// ---------------------------------------------------------------------------
// features

enum class Modality : std::uint8_t { visual = 0, text = 1 };

struct FeatureMatrix {
  Modality modality = Modality::visual;
  Tensor values;                  // num_items × dim
  std::vector<std::uint8_t> present;  // per row
};

void save_feature_matrix(const std::filesystem::path& path, const FeatureMatrix& m);
FeatureMatrix load_feature_matrix(const std::filesystem::path& path);
FeatureMatrix decode_feature_matrix(std::string_view bytes);
std::string encode_feature_matrix(const FeatureMatrix& m);

std::vector<std::string> load_item_index(const std::filesystem::path& path);
void save_item_index(const std::filesystem::path& path, const std::vector<std::string>& ids);

// Feature rows indexed by internal item index; row 0 is the zero pad item.
struct ItemCatalog {
  std::vector<std::string> item_ids;  // index → id, entry 0 "<pad>"
  Tensor feat_v;                      // (|I|+1)×D_v
  Tensor feat_t;                      // (|I|+1)×D_t
  std::vector<std::uint8_t> present_v;

  int num_items() const { return static_cast<int>(item_ids.size()) - 1; }
  int dim_v() const { return feat_v.cols(); }
  int dim_t() const { return feat_t.cols(); }
  void check_index(int item) const;
};

// Aligns raw feature rows (listed in `raw_ids` order) to the sequence set's
// internal indices. Items without a feature row get zero features and are
// marked absent.
ItemCatalog build_catalog(const SequenceSet& set, const std::vector<std::string>& raw_ids, const FeatureMatrix& visual,
                          const FeatureMatrix& text);

// Prepared dataset on disk: items.idx, features_v.mmf, features_t.mmf,
// sequences.tsv, split.tsv.
struct Dataset {
  SequenceSet sequences;
  ItemCatalog catalog;
  DatasetSplit split;
};

// Reads raw files from `raw_dir`, filters to the k-core and writes the
// prepared files to `out_dir`.
Dataset prepare_dataset(const std::filesystem::path& raw_dir, const std::filesystem::path& out_dir, int kcore);
Dataset load_prepared(const std::filesystem::path& dir);
void save_prepared(const std::filesystem::path& dir, const Dataset& ds);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace mmrec
