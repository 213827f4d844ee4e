#include "mmrec/config.hpp"

#include <charconv>
#include <sstream>

namespace mmrec {

void TrainConfig::validate() const {
  if (!(lr >= 0)) throw ContractError("train config: lr must be non-negative");
  if (batch_size < 1) throw ContractError("train config: batch_size must be positive");
  if (mode == TrainMode::pretrain && batch_size < 2) throw ContractError("train config: in-batch loss needs batch_size >= 2");
  if (epochs < 1 || patience < 1) throw ContractError("train config: epochs and patience must be positive");
  if (kcore < 1) throw ContractError("train config: kcore must be positive");
}

std::string_view train_mode_name(TrainMode m) { return m == TrainMode::pretrain ? "pretrain" : "finetune"; }

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <class T>
T number(std::string_view key, std::string_view v) {
  T out{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ParseError("config: bad value '" + std::string(v) + "' for " + std::string(key));
  return out;
}

bool boolean(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ParseError("config: bad boolean '" + std::string(v) + "' for " + std::string(key));
}

}  // namespace

void set_config_value(RunConfig& cfg, std::string_view key, std::string_view v) {
  ModelConfig& m = cfg.model;
  TrainConfig& t = cfg.train;
  if (key == "N") m.N = number<int>(key, v);
  else if (key == "D") m.D = number<int>(key, v);
  else if (key == "K") m.K = number<int>(key, v);
  else if (key == "L_max") m.L_max = number<int>(key, v);
  else if (key == "layers") m.layers = number<int>(key, v);
  else if (key == "tau") m.tau = number<Real>(key, v);
  else if (key == "dropout") m.dropout = number<Real>(key, v);
  else if (key == "use_id_bias") m.flags.use_id_bias = boolean(key, v);
  else if (key == "time_aware") m.flags.time_aware = boolean(key, v);
  else if (key == "shared_align") m.flags.shared_align = boolean(key, v);
  else if (key == "learnable_filter") m.flags.learnable_filter = boolean(key, v);
  else if (key == "adaptive_filter") m.flags.adaptive_filter = boolean(key, v);
  else if (key == "decay") m.decay = parse_decay_mode(v);
  else if (key == "ssd_mode") m.ssd_mode = parse_ssd_mode(v);
  else if (key == "lr") t.lr = number<double>(key, v);
  else if (key == "batch_size") t.batch_size = number<int>(key, v);
  else if (key == "epochs") t.epochs = number<int>(key, v);
  else if (key == "patience") t.patience = number<int>(key, v);
  else if (key == "seed") t.seed = number<std::uint64_t>(key, v);
  else if (key == "clip_norm") t.clip_norm = number<double>(key, v);
  else if (key == "ndcg_threshold") t.ndcg_threshold = number<double>(key, v);
  else if (key == "kcore") t.kcore = number<int>(key, v);
  else if (key == "mode") {
    if (v == "pretrain") t.mode = TrainMode::pretrain;
    else if (v == "finetune") t.mode = TrainMode::finetune;
    else throw ParseError("config: bad mode '" + std::string(v) + "'");
  } else {
    throw ParseError("config: unknown key '" + std::string(key) + "'");
  }
}

RunConfig parse_config(std::string_view text) {
  RunConfig cfg;
  std::size_t pos = 0;
  int line_no = 0;
  while (pos < text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    const std::string_view line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ParseError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    try {
      set_config_value(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ContractError& e) {
      throw ParseError("config line " + std::to_string(line_no) + ": " + e.what());
    } catch (const ParseError& e) {
      throw ParseError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  cfg.model.validate();
  cfg.train.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) { return parse_config(read_file(path)); }

std::string format_model_config(const ModelConfig& m) {
  auto b = [](bool v) { return v ? "true" : "false"; };
  std::ostringstream s;
  s.precision(9);
  s << "N = " << m.N << "\nD = " << m.D << "\nK = " << m.K << "\nL_max = " << m.L_max << "\nlayers = " << m.layers
    << "\ntau = " << m.tau << "\ndropout = " << m.dropout << "\nuse_id_bias = " << b(m.flags.use_id_bias)
    << "\ntime_aware = " << b(m.flags.time_aware) << "\nshared_align = " << b(m.flags.shared_align)
    << "\nlearnable_filter = " << b(m.flags.learnable_filter) << "\nadaptive_filter = " << b(m.flags.adaptive_filter)
    << "\ndecay = " << decay_mode_name(m.decay) << "\nssd_mode = " << ssd_mode_name(m.ssd_mode) << "\n";
  return s.str();
}

std::string format_config(const RunConfig& cfg) {
  const TrainConfig& t = cfg.train;
  std::ostringstream s;
  s.precision(17);
  s << format_model_config(cfg.model) << "lr = " << t.lr << "\nbatch_size = " << t.batch_size
    << "\nepochs = " << t.epochs << "\npatience = " << t.patience << "\nseed = " << t.seed
    << "\nclip_norm = " << t.clip_norm << "\nmode = " << train_mode_name(t.mode)
    << "\nndcg_threshold = " << t.ndcg_threshold << "\nkcore = " << t.kcore << "\n";
  return s.str();
}

}  // namespace mmrec
