#include "mmrec/synth.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

namespace mmrec {

void SynthConfig::validate() const {
  if (users < 1 || items < 3) throw ContractError("synth: need at least one user and three items");
  if (dim < 2 || dim % 2) throw ContractError("synth: feature dim must be even and >= 2");
  if (min_len < 1 || max_len < min_len) throw ContractError("synth: bad sequence length range");
  if (stride < 1) throw ContractError("synth: stride must be >= 1");
  if ((stride + (break_prob > 0 ? 1 : 0)) * max_len >= items)
    throw ContractError("synth: walks must be shorter than the circle");
  if (!(missing_visual >= 0 && missing_visual < 1)) throw ContractError("synth: missing_visual must lie in [0, 1)");
  if (!(mean_gap > 0)) throw ContractError("synth: mean_gap must be positive");
  if (!(break_prob >= 0 && break_prob < 1)) throw ContractError("synth: break_prob must lie in [0, 1)");
  if (!(break_gap > 0)) throw ContractError("synth: break_gap must be positive");
}

namespace {

// Random orthogonal matrix by Gram-Schmidt on a Gaussian draw.
std::vector<std::vector<double>> random_rotation(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::vector<double>> q(n, std::vector<double>(n));
  for (int i = 0; i < n; ++i) {
    auto& v = q[i];
    for (double& x : v) x = g(rng);
    for (int j = 0; j < i; ++j) {
      double dot = 0;
      for (int k = 0; k < n; ++k) dot += v[k] * q[j][k];
      for (int k = 0; k < n; ++k) v[k] -= dot * q[j][k];
    }
    double norm = 0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
  }
  return q;
}

std::string padded_id(char prefix, int i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%0*d", prefix, width, i);
  return buf;
}

}  // namespace

SynthCorpus make_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  const int I = cfg.items, dim = cfg.dim, H = dim / 2;
  std::mt19937_64 frng(cfg.feature_seed);
  const auto qv = random_rotation(dim, frng);
  const auto qt = random_rotation(dim, frng);

  SynthCorpus c;
  c.visual = {Modality::visual, Tensor({I, dim}), std::vector<std::uint8_t>(I, 1)};
  c.text = {Modality::text, Tensor({I, dim}), std::vector<std::uint8_t>(I, 1)};
  const double scale = 1.0 / std::sqrt(double(H));
  std::vector<double> code(dim);
  for (int k = 0; k < I; ++k) {
    c.item_ids.push_back(padded_id('i', k, 5));
    const double theta = 2.0 * std::numbers::pi * (k + cfg.phase) / I;
    for (int m = 1; m <= H; ++m) {
      code[2 * (m - 1)] = std::cos(m * theta) * scale;
      code[2 * (m - 1) + 1] = std::sin(m * theta) * scale;
    }
    for (int r = 0; r < dim; ++r) {
      double v = 0, t = 0;
      for (int j = 0; j < dim; ++j) {
        v += qv[r][j] * code[j];
        t += qt[r][j] * code[j];
      }
      c.visual.values.at(k, r) = static_cast<Real>(v);
      c.text.values.at(k, r) = static_cast<Real>(t);
    }
  }

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < I; ++k)
    if (unit(rng) < cfg.missing_visual) {
      c.visual.present[k] = 0;
      for (int r = 0; r < dim; ++r) c.visual.values.at(k, r) = 0;
    }
  std::exponential_distribution<double> gap(1.0 / cfg.mean_gap), long_gap(1.0 / cfg.break_gap);
  for (int u = 0; u < cfg.users; ++u) {
    const int len = cfg.min_len + static_cast<int>(rng() % (cfg.max_len - cfg.min_len + 1));
    int item = static_cast<int>(rng() % I);
    std::int64_t t = 1'600'000'000 + static_cast<std::int64_t>(rng() % 10'000'000);
    const std::string uid = padded_id('u', u, 5);
    for (int s = 0; s < len; ++s) {
      c.interactions.push_back({uid, c.item_ids[item], t});
      const bool pause = cfg.break_prob > 0 && unit(rng) < cfg.break_prob;
      item = (item + cfg.stride + (pause ? 1 : 0)) % I;
      t += 1 + static_cast<std::int64_t>(pause ? long_gap(rng) : gap(rng));
    }
  }
  return c;
}

void write_synthetic(const std::filesystem::path& dir, const SynthCorpus& corpus) {
  std::filesystem::create_directories(dir);
  write_interactions(dir / "interactions.tsv", corpus.interactions);
  save_item_index(dir / "items.idx", corpus.item_ids);
  save_feature_matrix(dir / "features_v.mmf", corpus.visual);
  save_feature_matrix(dir / "features_t.mmf", corpus.text);
}

}  // namespace mmrec
