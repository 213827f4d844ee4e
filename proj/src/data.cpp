#include "mmrec/data.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

namespace mmrec {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ContractError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ContractError("cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

// ---------------------------------------------------------------------------
// interactions

std::vector<InteractionRecord> parse_interactions(std::string_view text) {
  std::vector<InteractionRecord> out;
  std::size_t pos = 0;
  int line_no = 0;
  while (pos < text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const std::size_t t1 = line.find('\t');
    const std::size_t t2 = t1 == std::string_view::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string_view::npos || line.find('\t', t2 + 1) != std::string_view::npos)
      throw ParseError("interactions line " + std::to_string(line_no) + ": expected 3 tab-separated fields");
    InteractionRecord r{std::string(line.substr(0, t1)), std::string(line.substr(t1 + 1, t2 - t1 - 1)), 0};
    const std::string_view ts = line.substr(t2 + 1);
    const auto [p, ec] = std::from_chars(ts.data(), ts.data() + ts.size(), r.timestamp);
    if (ec != std::errc() || p != ts.data() + ts.size() || r.timestamp < 0)
      throw ParseError("interactions line " + std::to_string(line_no) + ": bad timestamp '" + std::string(ts) + "'");
    if (r.user_id.empty() || r.item_id.empty())
      throw ParseError("interactions line " + std::to_string(line_no) + ": empty user or item id");
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<InteractionRecord> parse_interactions(const fs::path& path) {
  if (!fs::exists(path)) throw ContractError("interactions file '" + path.string() + "' not found");
  return parse_interactions(std::string_view(read_file(path)));
}

void write_interactions(const fs::path& path, const std::vector<InteractionRecord>& records) {
  std::string s;
  for (const auto& r : records) s += r.user_id + '\t' + r.item_id + '\t' + std::to_string(r.timestamp) + '\n';
  write_file(path, s);
}

std::vector<InteractionRecord> kcore_filter(const std::vector<InteractionRecord>& records, int k) {
  if (k < 1) throw ContractError("kcore_filter: k must be >= 1");
  std::vector<bool> alive(records.size(), true);
  for (bool changed = true; changed;) {
    changed = false;
    std::unordered_map<std::string, int> users, items;
    for (std::size_t i = 0; i < records.size(); ++i)
      if (alive[i]) {
        ++users[records[i].user_id];
        ++items[records[i].item_id];
      }
    for (std::size_t i = 0; i < records.size(); ++i)
      if (alive[i] && (users[records[i].user_id] < k || items[records[i].item_id] < k)) {
        alive[i] = false;
        changed = true;
      }
  }
  std::vector<InteractionRecord> out;
  for (std::size_t i = 0; i < records.size(); ++i)
    if (alive[i]) out.push_back(records[i]);
  return out;
}

// ---------------------------------------------------------------------------
// sequences

UserSequence UserSequence::last(std::size_t n) const {
  const std::size_t start = items.size() > n ? items.size() - n : 0;
  return {{items.begin() + start, items.end()}, {timestamps.begin() + start, timestamps.end()}};
}

UserSequence UserSequence::prefix(std::size_t n) const {
  n = std::min(n, items.size());
  return {{items.begin(), items.begin() + n}, {timestamps.begin(), timestamps.begin() + n}};
}

SequenceSet build_sequences(const std::vector<InteractionRecord>& records) {
  if (records.empty()) throw ContractError("build_sequences: no interactions");
  SequenceSet set;
  std::set<std::string> item_ids;
  std::map<std::string, std::vector<const InteractionRecord*>> by_user;
  for (const auto& r : records) {
    item_ids.insert(r.item_id);
    by_user[r.user_id].push_back(&r);
  }
  set.item_ids.push_back("<pad>");
  for (const auto& id : item_ids) {
    set.item_index[id] = static_cast<int>(set.item_ids.size());
    set.item_ids.push_back(id);
  }
  for (auto& [user, recs] : by_user) {
    std::sort(recs.begin(), recs.end(), [](const InteractionRecord* a, const InteractionRecord* b) {
      return a->timestamp != b->timestamp ? a->timestamp < b->timestamp : a->item_id < b->item_id;
    });
    UserSequence seq;
    for (const auto* r : recs) {
      seq.items.push_back(set.item_index.at(r->item_id));
      seq.timestamps.push_back(r->timestamp);
    }
    set.user_ids.push_back(user);
    set.sequences.push_back(std::move(seq));
  }
  return set;
}

DatasetSplit leave_one_out_split(const SequenceSet& set) {
  DatasetSplit split;
  for (std::size_t u = 0; u < set.sequences.size(); ++u) {
    const UserSequence& s = set.sequences[u];
    const std::size_t n = s.size();
    const int user = static_cast<int>(u);
    if (n >= 3) {
      split.test.push_back({user, s.prefix(n - 1), s.items[n - 1]});
      split.valid.push_back({user, s.prefix(n - 2), s.items[n - 2]});
      if (n - 2 >= 2) split.train.push_back({user, s.prefix(n - 3), s.items[n - 3]});
    } else if (n == 2) {
      split.train.push_back({user, s.prefix(1), s.items[1]});
    }
  }
  return split;
}

// ---------------------------------------------------------------------------
// binary feature matrices

namespace {

constexpr char kFeatureMagic[4] = {'M', 'M', 'F', '1'};
constexpr std::uint32_t kFeatureVersion = 1;

void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f32(std::string& s, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32(s, bits);
}

class Reader {
 public:
  explicit Reader(std::string_view b) : b_(b) {}
  void need(std::size_t n, const char* what) const {
    if (pos_ + n > b_.size()) throw FormatError(std::string("truncated feature file while reading ") + what);
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(static_cast<unsigned char>(b_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return static_cast<std::uint8_t>(b_[pos_++]);
  }
  float f32(const char* what) {
    const std::uint32_t bits = u32(what);
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
  }
  std::string_view bytes(std::size_t n, const char* what) {
    need(n, what);
    auto v = b_.substr(pos_, n);
    pos_ += n;
    return v;
  }
  bool done() const { return pos_ == b_.size(); }

 private:
  std::string_view b_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_feature_matrix(const FeatureMatrix& m) {
  const int rows = m.values.rows(), dim = m.values.cols();
  if (static_cast<int>(m.present.size()) != rows) throw DimensionError("feature matrix: presence flag count != rows");
  std::string s(kFeatureMagic, 4);
  put_u32(s, kFeatureVersion);
  s.push_back(static_cast<char>(m.modality));
  put_u32(s, static_cast<std::uint32_t>(rows));
  put_u32(s, static_cast<std::uint32_t>(dim));
  for (Real v : m.values.values()) put_f32(s, static_cast<float>(v));
  for (auto p : m.present) s.push_back(static_cast<char>(p ? 1 : 0));
  return s;
}

FeatureMatrix decode_feature_matrix(std::string_view bytes) {
  Reader r(bytes);
  if (r.bytes(4, "magic") != std::string_view(kFeatureMagic, 4)) throw FormatError("feature file: bad magic");
  if (const auto v = r.u32("version"); v != kFeatureVersion)
    throw FormatError("feature file: unsupported version " + std::to_string(v));
  FeatureMatrix m;
  const auto mod = r.u8("modality");
  if (mod > 1) throw FormatError("feature file: unknown modality " + std::to_string(mod));
  m.modality = static_cast<Modality>(mod);
  const auto rows = r.u32("row count"), dim = r.u32("dimension");
  if (rows == 0 || dim == 0) throw FormatError("feature file: empty matrix");
  r.need(std::size_t(rows) * dim * 4 + rows, "payload");
  m.values = Tensor({static_cast<int>(rows), static_cast<int>(dim)});
  for (auto& v : m.values.values()) v = static_cast<Real>(r.f32("payload"));
  m.present.resize(rows);
  for (auto& p : m.present) p = r.u8("presence flags");
  if (!r.done()) throw FormatError("feature file: trailing bytes");
  return m;
}

void save_feature_matrix(const fs::path& path, const FeatureMatrix& m) { write_file(path, encode_feature_matrix(m)); }

FeatureMatrix load_feature_matrix(const fs::path& path) { return decode_feature_matrix(read_file(path)); }

std::vector<std::string> load_item_index(const fs::path& path) {
  const std::string text = read_file(path);
  std::vector<std::string> ids;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) ids.push_back(line);
  }
  return ids;
}

void save_item_index(const fs::path& path, const std::vector<std::string>& ids) {
  std::string s;
  for (const auto& id : ids) s += id + '\n';
  write_file(path, s);
}

void ItemCatalog::check_index(int item) const {
  if (item < 0 || item > num_items())
    throw ContractError("unknown item index " + std::to_string(item) + " (catalog has " + std::to_string(num_items()) +
                        " items)");
}

ItemCatalog build_catalog(const SequenceSet& set, const std::vector<std::string>& raw_ids, const FeatureMatrix& visual,
                          const FeatureMatrix& text) {
  if (visual.values.rows() != static_cast<int>(raw_ids.size()) || text.values.rows() != static_cast<int>(raw_ids.size()))
    throw FormatError("feature matrices have " + std::to_string(visual.values.rows()) + "/" +
                      std::to_string(text.values.rows()) + " rows but the item index lists " +
                      std::to_string(raw_ids.size()));
  std::unordered_map<std::string, int> raw_row;
  for (std::size_t i = 0; i < raw_ids.size(); ++i) raw_row[raw_ids[i]] = static_cast<int>(i);
  ItemCatalog cat;
  cat.item_ids = set.item_ids;
  const int rows = set.num_items() + 1;
  cat.feat_v = Tensor({rows, visual.values.cols()}, Real(0));
  cat.feat_t = Tensor({rows, text.values.cols()}, Real(0));
  cat.present_v.assign(rows, 0);
  for (int i = 1; i < rows; ++i) {
    auto it = raw_row.find(set.item_ids[i]);
    if (it == raw_row.end()) throw FormatError("item '" + set.item_ids[i] + "' is missing from the item index");
    const int r = it->second;
    for (int j = 0; j < cat.dim_v(); ++j) cat.feat_v.at(i, j) = visual.present[r] ? visual.values.at(r, j) : Real(0);
    for (int j = 0; j < cat.dim_t(); ++j) cat.feat_t.at(i, j) = text.values.at(r, j);
    cat.present_v[i] = visual.present[r];
  }
  return cat;
}

// ---------------------------------------------------------------------------
// prepared datasets

namespace {

std::string join_ints(const auto& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ' ';
    s += std::to_string(v[i]);
  }
  return s;
}

template <class T>
std::vector<T> split_ints(std::string_view s, int line_no) {
  std::vector<T> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    std::size_t end = s.find(' ', pos);
    if (end == std::string_view::npos) end = s.size();
    T v{};
    const auto [p, ec] = std::from_chars(s.data() + pos, s.data() + end, v);
    if (ec != std::errc() || p != s.data() + end)
      throw ParseError("sequences line " + std::to_string(line_no) + ": bad integer list");
    out.push_back(v);
    pos = end + 1;
  }
  return out;
}

FeatureMatrix catalog_rows(const Tensor& feat, const std::vector<std::uint8_t>& present, Modality mod) {
  const int rows = feat.rows() - 1, dim = feat.cols();
  FeatureMatrix m{mod, Tensor({rows, dim}), std::vector<std::uint8_t>(rows, 1)};
  std::copy(feat.values().begin() + dim, feat.values().end(), m.values.values().begin());
  if (!present.empty()) std::copy(present.begin() + 1, present.end(), m.present.begin());
  return m;
}

}  // namespace

void save_prepared(const fs::path& dir, const Dataset& ds) {
  fs::create_directories(dir);
  save_item_index(dir / "items.idx", std::vector<std::string>(ds.catalog.item_ids.begin() + 1, ds.catalog.item_ids.end()));
  save_feature_matrix(dir / "features_v.mmf", catalog_rows(ds.catalog.feat_v, ds.catalog.present_v, Modality::visual));
  save_feature_matrix(dir / "features_t.mmf", catalog_rows(ds.catalog.feat_t, {}, Modality::text));
  std::string seqs, split;
  for (std::size_t u = 0; u < ds.sequences.sequences.size(); ++u) {
    const auto& s = ds.sequences.sequences[u];
    seqs += ds.sequences.user_ids[u] + '\t' + join_ints(s.items) + '\t' + join_ints(s.timestamps) + '\n';
    const std::size_t n = s.size();
    split += ds.sequences.user_ids[u] + '\t' + std::to_string(n >= 3 ? n - 2 : n) + '\t' +
             std::to_string(n >= 3 ? s.items[n - 2] : 0) + '\t' + std::to_string(n >= 3 ? s.items[n - 1] : 0) + '\n';
  }
  write_file(dir / "sequences.tsv", seqs);
  write_file(dir / "split.tsv", split);
}

Dataset load_prepared(const fs::path& dir) {
  Dataset ds;
  const auto ids = load_item_index(dir / "items.idx");
  auto& set = ds.sequences;
  set.item_ids.push_back("<pad>");
  for (const auto& id : ids) {
    set.item_index[id] = static_cast<int>(set.item_ids.size());
    set.item_ids.push_back(id);
  }
  const std::string text = read_file(dir / "sequences.tsv");
  std::istringstream in(text);
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.empty()) continue;
    const auto t1 = line.find('\t'), t2 = line.find('\t', t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos)
      throw ParseError("sequences line " + std::to_string(line_no) + ": expected 3 fields");
    UserSequence s{split_ints<int>(std::string_view(line).substr(t1 + 1, t2 - t1 - 1), line_no),
                   split_ints<std::int64_t>(std::string_view(line).substr(t2 + 1), line_no)};
    if (s.items.size() != s.timestamps.size())
      throw ParseError("sequences line " + std::to_string(line_no) + ": item/timestamp count mismatch");
    for (int it : s.items)
      if (it < 1 || it > set.num_items())
        throw FormatError("sequences line " + std::to_string(line_no) + ": item index outside the catalog");
    set.user_ids.push_back(line.substr(0, t1));
    set.sequences.push_back(std::move(s));
  }
  ds.catalog = build_catalog(set, ids, load_feature_matrix(dir / "features_v.mmf"),
                             load_feature_matrix(dir / "features_t.mmf"));
  ds.split = leave_one_out_split(set);
  return ds;
}

Dataset prepare_dataset(const fs::path& raw_dir, const fs::path& out_dir, int kcore) {
  const auto records = kcore_filter(parse_interactions(raw_dir / "interactions.tsv"), kcore);
  if (records.empty()) throw ContractError("prepare: no interactions survive the " + std::to_string(kcore) + "-core");
  Dataset ds;
  ds.sequences = build_sequences(records);
  const auto raw_ids = load_item_index(raw_dir / "items.idx");
  ds.catalog = build_catalog(ds.sequences, raw_ids, load_feature_matrix(raw_dir / "features_v.mmf"),
                             load_feature_matrix(raw_dir / "features_t.mmf"));
  ds.split = leave_one_out_split(ds.sequences);
  save_prepared(out_dir, ds);
  return ds;
}

}  // namespace mmrec
