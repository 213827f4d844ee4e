#pragma once

// Full recommender: modality adapters, optional item bias, alignment,
// Fourier time fusion, cross-modal SSD and candidate scoring.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "mmrec/align.hpp"
#include "mmrec/cross.hpp"
#include "mmrec/data.hpp"
#include "mmrec/fusion.hpp"
#include "mmrec/params.hpp"

namespace mmrec {

struct ModelFlags {
  bool use_id_bias = true;
  bool time_aware = true;
  bool shared_align = true;
  bool learnable_filter = true;
  bool adaptive_filter = true;

  friend bool operator==(const ModelFlags&, const ModelFlags&) = default;
};

struct ModelConfig {
  int N = 256;
  int D = 64;
  int K = 4;
  int L_max = 50;
  int layers = 1;
  Real tau = Real(0.8);
  Real dropout = Real(0.4);
  ModelFlags flags;
  DecayMode decay = DecayMode::exp;
  SsdMode ssd_mode = SsdMode::automatic;

  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

enum class Ablation { full, no_time, no_shared, no_lf, no_af, no_id, two_layer };
Ablation parse_ablation(std::string_view s);
std::string_view ablation_name(Ablation a);
std::vector<Ablation> all_ablations();
ModelConfig apply_ablation(ModelConfig cfg, Ablation a);

struct FeatureDims {
  int dim_v = 0;
  int dim_t = 0;
  int num_items = 0;

  friend bool operator==(const FeatureDims&, const FeatureDims&) = default;
};

FeatureDims catalog_dims(const ItemCatalog& catalog);

// Deterministic parameter store for `cfg`.
ParamStore init_params(const ModelConfig& cfg, std::uint64_t seed, const FeatureDims& dims);

class Model {
 public:
  struct Layer {
    AlignStageParams align;
    FusionParams fusion;
    TiCoSSDParams cross;
  };

  // Binds typed views onto a store laid out by init_params.
  Model(ModelConfig cfg, FeatureDims dims, ParamStore params);

  const ModelConfig& config() const { return cfg_; }
  const FeatureDims& dims() const { return dims_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  Var adapter_v_w, adapter_v_b, adapter_t_w, adapter_t_b;
  Var bias_v, bias_t;  // |I|×N, row = item index - 1; undefined without id bias
  Var time_gamma, time_beta;
  std::vector<Layer> layers;

 private:
  ModelConfig cfg_;
  FeatureDims dims_;
  ParamStore params_;
};

Model make_model(const ModelConfig& cfg, std::uint64_t seed, const FeatureDims& dims);

// X = F·W + b for each modality.
struct AdaptedFeatures {
  Var xv;
  Var xt;
};
AdaptedFeatures adapt_features(const Var& f_v, const Var& f_t, const Model& m);

// x + table[item - 1] row-wise; pad rows unchanged; identity when disabled.
Var apply_modality_bias(const Var& x, std::span<const int> items, const Var& table, bool enabled);

struct ForwardDiagnostics {
  int length = 0;  // interactions used after truncation
  double max_imag_residue = 0;
};

struct UserForward {
  Var u;  // N
  ForwardDiagnostics diag;
};

// The network runs on the most recent L_max interactions only; this equals
// left-padding to L_max because pad positions never influence later rows.
UserForward forward_user(const UserSequence& seq, const ItemCatalog& catalog, const Model& m,
                         const ForwardContext& ctx = {});

// Item representations (rows follow `items`): the visual term is dropped for
// items without an image.
Var item_representations(const ItemCatalog& catalog, const Model& m, std::span<const int> items);
// All items 1..|I| in index order.
Var all_item_representations(const ItemCatalog& catalog, const Model& m);

// u[N] (or U[B×N]) against the candidates' representations.
Var score_candidates(const Var& u, const ItemCatalog& catalog, const Model& m, std::span<const int> candidates);

// Copies every parameter of `src` whose name and shape also exist in `dst`,
// except item-bias tables, which are always domain specific. Adapters are
// copied only when the feature dims agree. Throws ContractError when any
// other parameter of `dst` is missing from `src` or shaped differently.
std::size_t transfer_params(Model& dst, const Model& src);

}  // namespace mmrec
