#include "mmrec/checkpoint.hpp"

#include <cstring>
#include <sstream>

#include "json.hpp"
#include "mmrec/config.hpp"

namespace mmrec {

namespace {

constexpr char kMagic[4] = {'M', 'M', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_str(std::string& s, const std::string& v) {
  put_u32(s, static_cast<std::uint32_t>(v.size()));
  s += v;
}

class Reader {
 public:
  explicit Reader(std::string_view b) : b_(b) {}
  std::string_view bytes(std::size_t n) {
    if (pos_ + n > b_.size()) throw FormatError("checkpoint: truncated file");
    auto v = b_.substr(pos_, n);
    pos_ += n;
    return v;
  }
  std::uint32_t u32() {
    const auto v = bytes(4);
    std::uint32_t out = 0;
    for (int i = 0; i < 4; ++i) out |= std::uint32_t(static_cast<unsigned char>(v[i])) << (8 * i);
    return out;
  }
  std::string str() { return std::string(bytes(u32())); }
  bool done() const { return pos_ == b_.size(); }

 private:
  std::string_view b_;
  std::size_t pos_ = 0;
};

std::string header_text(const Model& m) {
  return format_model_config(m.config()) + "dim_v = " + std::to_string(m.dims().dim_v) +
         "\ndim_t = " + std::to_string(m.dims().dim_t) + "\nnum_items = " + std::to_string(m.dims().num_items) + "\n";
}

void parse_header(std::string_view text, ModelConfig& cfg, FeatureDims& dims) {
  RunConfig rc;
  std::string body;
  std::istringstream in{std::string(text)};
  for (std::string line; std::getline(in, line);) {
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) throw FormatError("checkpoint: malformed header line '" + line + "'");
    const std::string key = line.substr(0, eq), value = line.substr(eq + 3);
    if (key == "dim_v") dims.dim_v = std::stoi(value);
    else if (key == "dim_t") dims.dim_t = std::stoi(value);
    else if (key == "num_items") dims.num_items = std::stoi(value);
    else set_config_value(rc, key, value);
  }
  cfg = rc.model;
}

}  // namespace

std::string manifest_text(const ParamStore& ps) {
  std::string s;
  for (const auto& e : ps.entries()) s += e.name + '\t' + e.alias_of + '\t' + shape_str(e.var.shape()) + '\n';
  return s;
}

std::uint64_t manifest_hash(const ParamStore& ps) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : manifest_text(ps)) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string encode_checkpoint(const Model& m) {
  std::string s(kMagic, 4);
  put_u32(s, kVersion);
  put_str(s, header_text(m));
  const auto& entries = m.params().entries();
  put_u32(s, static_cast<std::uint32_t>(entries.size()));
  for (const auto& e : entries) {
    put_str(s, e.name);
    put_str(s, e.alias_of);
    put_u32(s, static_cast<std::uint32_t>(e.var.shape().size()));
    for (int d : e.var.shape()) put_u32(s, static_cast<std::uint32_t>(d));
  }
  for (const auto* e : m.params().canonical())
    for (Real v : e->var.value().values()) {
      const float f = static_cast<float>(v);
      std::uint32_t bits;
      std::memcpy(&bits, &f, 4);
      put_u32(s, bits);
    }
  return s;
}

Model decode_checkpoint(std::string_view bytes) {
  Reader r(bytes);
  if (r.bytes(4) != std::string_view(kMagic, 4)) throw FormatError("checkpoint: bad magic");
  if (const auto v = r.u32(); v != kVersion) throw FormatError("checkpoint: unsupported version " + std::to_string(v));
  ModelConfig cfg;
  FeatureDims dims;
  parse_header(r.str(), cfg, dims);
  struct Item {
    std::string name, alias;
    Shape shape;
  };
  std::vector<Item> items(r.u32());
  for (auto& it : items) {
    it.name = r.str();
    it.alias = r.str();
    const auto rank = r.u32();
    if (rank < 1 || rank > 3) throw FormatError("checkpoint: bad rank for '" + it.name + "'");
    for (std::uint32_t k = 0; k < rank; ++k) it.shape.push_back(static_cast<int>(r.u32()));
  }
  ParamStore ps;
  for (const auto& it : items) {
    if (!it.alias.empty()) {
      if (!ps.contains(it.alias)) throw FormatError("checkpoint: alias '" + it.name + "' precedes its target");
      ps.alias(it.name, it.alias);
      continue;
    }
    Tensor t(it.shape);
    for (auto& v : t.values()) {
      const std::uint32_t bits = r.u32();
      float f;
      std::memcpy(&f, &bits, 4);
      v = static_cast<Real>(f);
    }
    ps.add(it.name, std::move(t));
  }
  if (!r.done()) throw FormatError("checkpoint: trailing bytes");
  const std::uint64_t got = manifest_hash(ps);
  Model m(cfg, dims, std::move(ps));
  if (manifest_hash(init_params(cfg, 0, dims)) != got)
    throw FormatError("checkpoint: manifest does not match its model configuration");
  return m;
}

void save_checkpoint(const std::filesystem::path& path, const Model& m) {
  write_file(path, encode_checkpoint(m));
  nlohmann::ordered_json j;
  j["config"] = header_text(m);
  j["manifest_hash"] = manifest_hash(m.params());
  j["parameter_count"] = m.params().parameter_count();
  auto& entries = j["entries"] = nlohmann::json::array();
  for (const auto& e : m.params().entries()) {
    nlohmann::ordered_json x;
    x["name"] = e.name;
    if (!e.alias_of.empty()) x["alias_of"] = e.alias_of;
    x["shape"] = e.var.shape();
    entries.push_back(x);
  }
  write_file(path.string() + ".json", j.dump(2) + "\n");
}

Model load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ContractError("checkpoint '" + path.string() + "' not found");
  return decode_checkpoint(read_file(path));
}

}  // namespace mmrec
