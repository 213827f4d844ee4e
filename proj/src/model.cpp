#include "mmrec/model.hpp"

#include <cmath>

namespace mmrec {

void ModelConfig::validate() const {
  if (N < 1 || D < 1 || K < 1 || L_max < 1) throw ContractError("model config: dimensions must be positive");
  if (layers < 1 || layers > 2) throw ContractError("model config: layers must be 1 or 2");
  if (!(tau > 0)) throw ContractError("model config: tau must be positive");
  if (!(dropout >= 0 && dropout < 1)) throw ContractError("model config: dropout must lie in [0, 1)");
}

Ablation parse_ablation(std::string_view s) {
  for (Ablation a : all_ablations())
    if (ablation_name(a) == s) return a;
  if (s == "full") return Ablation::full;
  throw ContractError("unknown ablation '" + std::string(s) + "'");
}

std::string_view ablation_name(Ablation a) {
  switch (a) {
    case Ablation::full: return "full";
    case Ablation::no_time: return "no-time";
    case Ablation::no_shared: return "no-shared";
    case Ablation::no_lf: return "no-lf";
    case Ablation::no_af: return "no-af";
    case Ablation::no_id: return "no-id";
    case Ablation::two_layer: return "2l";
  }
  return "full";
}

std::vector<Ablation> all_ablations() {
  return {Ablation::no_time, Ablation::no_shared, Ablation::no_lf, Ablation::no_af, Ablation::no_id,
          Ablation::two_layer};
}

ModelConfig apply_ablation(ModelConfig cfg, Ablation a) {
  switch (a) {
    case Ablation::full: break;
    case Ablation::no_time: cfg.flags.time_aware = false; break;
    case Ablation::no_shared: cfg.flags.shared_align = false; break;
    case Ablation::no_lf: cfg.flags.learnable_filter = false; break;
    case Ablation::no_af: cfg.flags.adaptive_filter = false; break;
    case Ablation::no_id: cfg.flags.use_id_bias = false; break;
    case Ablation::two_layer: cfg.layers = 2; break;
  }
  return cfg;
}

FeatureDims catalog_dims(const ItemCatalog& catalog) {
  return {catalog.dim_v(), catalog.dim_t(), catalog.num_items()};
}

// ---------------------------------------------------------------------------
// initialisation

namespace {

constexpr double kProjStd = 0.02;

Tensor eye_plus_noise(Initializer& init, int n) {
  Tensor w = init.normal({n, n}, kProjStd);
  for (int i = 0; i < n; ++i) w.at(i, i) += Real(1);
  return w;
}

Tensor conv_kernel(Initializer& init, int K, int channels) {
  const double r = 1.0 / std::sqrt(double(K));
  return init.uniform({K, channels}, -r, r);
}

void add_time(ParamStore& ps, Initializer& init, const std::string& p, const ModelConfig& c) {
  ps.add(p + "time.conv", conv_kernel(init, c.K, 1));
  ps.add(p + "time.mlp_w1", init.normal({c.L_max, c.L_max}, kProjStd));
  ps.add(p + "time.mlp_b1", Tensor({c.L_max}));
  ps.add(p + "time.mlp_w2", init.normal({c.L_max, 1}, kProjStd));
  ps.add(p + "time.mlp_b2", Tensor({1}, Real(1)));
}

// Δ̂ = softplus(Δ·D̂) + b^Δ; b^Δ stays non-negative so Δ̂ > 0.
void add_decay(ParamStore& ps, Initializer& init, const std::string& p, const ModelConfig& c) {
  Tensor u = init.uniform({1}, 1.0, 16.0);
  u[0] = std::log(u[0]);
  ps.add(p + "a_log", u);
  ps.add(p + "b_delta", init.log_uniform({c.L_max}, 1e-3, 1e-1));
}

void add_tissd(ParamStore& ps, Initializer& init, const std::string& p, const ModelConfig& c) {
  const int w = 2 * c.D + c.N + 1;
  ps.add(p + "w1", init.normal({c.N, w}, kProjStd));
  ps.add(p + "b1", Tensor({w}));
  ps.add(p + "conv", conv_kernel(init, c.K, 2 * c.D + c.N));
  add_decay(ps, init, p, c);
  if (c.flags.time_aware) add_time(ps, init, p, c);
}

void alias_tissd(ParamStore& ps, const std::string& from, const std::string& to, const ModelConfig& c) {
  std::vector<std::string> names{"w1", "b1", "conv", "a_log", "b_delta"};
  if (c.flags.time_aware)
    for (const char* t : {"time.conv", "time.mlp_w1", "time.mlp_b1", "time.mlp_w2", "time.mlp_b2"}) names.push_back(t);
  for (const auto& n : names) ps.alias(from + n, to + n);
}

void add_ffn(ParamStore& ps, Initializer& init, const std::string& p, int N) {
  ps.add(p + "w_in", init.normal({N, 4 * N}, kProjStd));
  ps.add(p + "b_in", Tensor({4 * N}));
  ps.add(p + "w_out", init.normal({4 * N, N}, kProjStd));
  ps.add(p + "b_out", Tensor({N}));
}

void add_ln(ParamStore& ps, const std::string& p, int N) {
  ps.add(p + "gamma", Tensor({N}, Real(1)));
  ps.add(p + "beta", Tensor({N}));
}

void add_filter(ParamStore& ps, Initializer& init, const std::string& p, int L) {
  ps.add(p + "w_re", eye_plus_noise(init, L));
  ps.add(p + "w_im", init.normal({L, L}, kProjStd));
  ps.add(p + "b_re", init.normal({L}, kProjStd));
  ps.add(p + "b_im", init.normal({L}, kProjStd));
}

}  // namespace

ParamStore init_params(const ModelConfig& c, std::uint64_t seed, const FeatureDims& dims) {
  c.validate();
  if (dims.dim_v < 1 || dims.dim_t < 1 || dims.num_items < 1)
    throw ContractError("init_params: feature dimensions and item count must be positive");
  Initializer init(seed);
  ParamStore ps;
  ps.add("adapter.v.weight", init.normal({dims.dim_v, c.N}, kProjStd));
  // Image-less items enter as the bias row alone; a zero bias would feed a
  // constant row into the first layer norm.
  ps.add("adapter.v.bias", init.normal({c.N}, kProjStd));
  ps.add("adapter.t.weight", init.normal({dims.dim_t, c.N}, kProjStd));
  ps.add("adapter.t.bias", init.normal({c.N}, kProjStd));
  if (c.flags.use_id_bias) {
    ps.add("bias.v", Tensor({dims.num_items, c.N}));
    ps.add("bias.t", Tensor({dims.num_items, c.N}));
  }
  if (c.flags.time_aware) {
    ps.add("time_norm.gamma", Tensor({1}, Real(1)));
    ps.add("time_norm.beta", Tensor({1}));
  }
  for (int k = 0; k < c.layers; ++k) {
    const std::string L = "layer" + std::to_string(k) + ".";
    add_tissd(ps, init, L + "align.tissd_v.", c);
    if (c.flags.shared_align)
      alias_tissd(ps, L + "align.tissd_t.", L + "align.tissd_v.", c);
    else
      add_tissd(ps, init, L + "align.tissd_t.", c);
    add_ffn(ps, init, L + "align.ffn_v.", c.N);
    add_ffn(ps, init, L + "align.ffn_t.", c.N);
    for (const char* ln : {"ln1_v.", "ln1_t.", "ln2_v.", "ln2_t."}) add_ln(ps, L + "align." + ln, c.N);
    if (c.flags.time_aware) {
      if (c.flags.adaptive_filter) add_filter(ps, init, L + "fusion.adaptive.", c.L_max);
      if (c.flags.learnable_filter) add_filter(ps, init, L + "fusion.learnable.", c.L_max);
    }
    const std::string X = L + "cross.";
    ps.add(X + "w2", init.normal({c.N, c.D}, kProjStd));
    ps.add(X + "b2", Tensor({c.D}));
    ps.add(X + "w3", init.normal({c.N, c.D + c.N + 1}, kProjStd));
    ps.add(X + "b3", Tensor({c.D + c.N + 1}));
    ps.add(X + "conv_c", conv_kernel(init, c.K, c.D));
    ps.add(X + "conv_bx", conv_kernel(init, c.K, c.D + c.N));
    add_decay(ps, init, X, c);
    if (c.flags.time_aware) add_time(ps, init, X, c);
    add_ffn(ps, init, X + "ffn.", c.N);
    add_ln(ps, X + "ln_o.", c.N);
    add_ln(ps, X + "ln_y.", c.N);
  }
  return ps;
}

// ---------------------------------------------------------------------------
// binding

namespace {

TimeEnhanceParams bind_time(const ParamStore& ps, const std::string& p, bool on) {
  TimeEnhanceParams t;
  if (!on) return t;
  t.conv = ps.get(p + "time.conv");
  t.mlp_w1 = ps.get(p + "time.mlp_w1");
  t.mlp_b1 = ps.get(p + "time.mlp_b1");
  t.mlp_w2 = ps.get(p + "time.mlp_w2");
  t.mlp_b2 = ps.get(p + "time.mlp_b2");
  return t;
}

TiSSDParams bind_tissd(const ParamStore& ps, const std::string& p, const ModelConfig& c) {
  TiSSDParams t;
  t.w1 = ps.get(p + "w1");
  t.b1 = ps.get(p + "b1");
  t.conv = ps.get(p + "conv");
  t.a_log = ps.get(p + "a_log");
  t.b_delta = ps.get(p + "b_delta");
  t.time = bind_time(ps, p, c.flags.time_aware);
  t.time_aware = c.flags.time_aware;
  t.decay = c.decay;
  t.D = c.D;
  t.N = c.N;
  return t;
}

FFNParams bind_ffn(const ParamStore& ps, const std::string& p) {
  return {ps.get(p + "w_in"), ps.get(p + "b_in"), ps.get(p + "w_out"), ps.get(p + "b_out"), Activation::silu};
}

LayerNormParams bind_ln(const ParamStore& ps, const std::string& p) { return {ps.get(p + "gamma"), ps.get(p + "beta")}; }

ComplexFilter bind_filter(const ParamStore& ps, const std::string& p) {
  return {ps.get(p + "w_re"), ps.get(p + "w_im"), ps.get(p + "b_re"), ps.get(p + "b_im")};
}

}  // namespace

Model::Model(ModelConfig cfg, FeatureDims dims, ParamStore params)
    : cfg_(std::move(cfg)), dims_(dims), params_(std::move(params)) {
  cfg_.validate();
  const ParamStore& ps = params_;
  adapter_v_w = ps.get("adapter.v.weight");
  adapter_v_b = ps.get("adapter.v.bias");
  adapter_t_w = ps.get("adapter.t.weight");
  adapter_t_b = ps.get("adapter.t.bias");
  if (adapter_v_w.rows() != dims.dim_v || adapter_t_w.rows() != dims.dim_t || adapter_v_w.cols() != cfg_.N)
    throw DimensionError("model: adapter shapes do not match the feature dimensions");
  if (cfg_.flags.use_id_bias) {
    bias_v = ps.get("bias.v");
    bias_t = ps.get("bias.t");
    if (bias_v.rows() != dims.num_items) throw DimensionError("model: bias table rows != catalog size");
  }
  if (cfg_.flags.time_aware) {
    time_gamma = ps.get("time_norm.gamma");
    time_beta = ps.get("time_norm.beta");
  }
  for (int k = 0; k < cfg_.layers; ++k) {
    const std::string L = "layer" + std::to_string(k) + ".";
    Layer layer;
    auto& a = layer.align;
    a.tissd_v = bind_tissd(ps, L + "align.tissd_v.", cfg_);
    a.tissd_t = bind_tissd(ps, L + "align.tissd_t.", cfg_);
    a.ffn_v = bind_ffn(ps, L + "align.ffn_v.");
    a.ffn_t = bind_ffn(ps, L + "align.ffn_t.");
    a.ln1_v = bind_ln(ps, L + "align.ln1_v.");
    a.ln1_t = bind_ln(ps, L + "align.ln1_t.");
    a.ln2_v = bind_ln(ps, L + "align.ln2_v.");
    a.ln2_t = bind_ln(ps, L + "align.ln2_t.");
    auto& f = layer.fusion;
    f.max_len = cfg_.L_max;
    f.use_adaptive = cfg_.flags.time_aware && cfg_.flags.adaptive_filter;
    f.use_learnable = cfg_.flags.time_aware && cfg_.flags.learnable_filter;
    if (f.use_adaptive) f.adaptive = bind_filter(ps, L + "fusion.adaptive.");
    if (f.use_learnable) f.learnable = bind_filter(ps, L + "fusion.learnable.");
    auto& x = layer.cross;
    const std::string X = L + "cross.";
    x.w2 = ps.get(X + "w2");
    x.b2 = ps.get(X + "b2");
    x.w3 = ps.get(X + "w3");
    x.b3 = ps.get(X + "b3");
    x.conv_c = ps.get(X + "conv_c");
    x.conv_bx = ps.get(X + "conv_bx");
    x.a_log = ps.get(X + "a_log");
    x.b_delta = ps.get(X + "b_delta");
    x.time = bind_time(ps, X, cfg_.flags.time_aware);
    x.ffn = bind_ffn(ps, X + "ffn.");
    x.ln_o = bind_ln(ps, X + "ln_o.");
    x.ln_y = bind_ln(ps, X + "ln_y.");
    x.time_aware = cfg_.flags.time_aware;
    x.decay = cfg_.decay;
    x.D = cfg_.D;
    x.N = cfg_.N;
    layers.push_back(std::move(layer));
  }
}

Model make_model(const ModelConfig& cfg, std::uint64_t seed, const FeatureDims& dims) {
  return Model(cfg, dims, init_params(cfg, seed, dims));
}

// ---------------------------------------------------------------------------
// forward

AdaptedFeatures adapt_features(const Var& f_v, const Var& f_t, const Model& m) {
  if (f_v.cols() != m.adapter_v_w.rows())
    throw DimensionError("adapt_features: visual features have width " + std::to_string(f_v.cols()) +
                         ", adapter expects " + std::to_string(m.adapter_v_w.rows()));
  if (f_t.cols() != m.adapter_t_w.rows())
    throw DimensionError("adapt_features: text features have width " + std::to_string(f_t.cols()) +
                         ", adapter expects " + std::to_string(m.adapter_t_w.rows()));
  return {add_bias(matmul(f_v, m.adapter_v_w), m.adapter_v_b), add_bias(matmul(f_t, m.adapter_t_w), m.adapter_t_b)};
}

Var apply_modality_bias(const Var& x, std::span<const int> items, const Var& table, bool enabled) {
  if (!enabled) return x;
  if (static_cast<int>(items.size()) != x.rows()) throw DimensionError("apply_modality_bias: id count != rows");
  std::vector<int> rows(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i] < 0 || items[i] > table.rows())
      throw ContractError("apply_modality_bias: item index " + std::to_string(items[i]) + " outside the table");
    rows[i] = items[i] - 1;  // pad → -1 → zero row
  }
  return add(x, gather_rows(table, rows));
}

namespace {

Var feature_rows(const Tensor& feat, std::span<const int> items) {
  Tensor out({static_cast<int>(items.size()), feat.cols()});
  for (std::size_t i = 0; i < items.size(); ++i)
    std::copy_n(feat.data() + static_cast<std::size_t>(items[i]) * feat.cols(), feat.cols(),
                out.data() + i * feat.cols());
  return Var(std::move(out));
}

void check_items(const ItemCatalog& catalog, const Model& m, std::span<const int> items, bool allow_pad) {
  if (catalog.dim_v() != m.dims().dim_v || catalog.dim_t() != m.dims().dim_t)
    throw DimensionError("catalog feature dimensions do not match the model");
  for (int it : items) {
    if (!allow_pad && it == kPadItem) throw ContractError("pad item used as a real item");
    catalog.check_index(it);
    if (m.config().flags.use_id_bias && it > m.dims().num_items)
      throw ContractError("item index " + std::to_string(it) + " has no bias row");
  }
}

}  // namespace

UserForward forward_user(const UserSequence& full, const ItemCatalog& catalog, const Model& m,
                         const ForwardContext& ctx) {
  if (full.size() == 0) throw ContractError("forward_user: empty sequence");
  const ModelConfig& c = m.config();
  const UserSequence seq = full.last(static_cast<std::size_t>(c.L_max));
  const int n = static_cast<int>(seq.size());
  check_items(catalog, m, seq.items, false);

  AdaptedFeatures x = adapt_features(feature_rows(catalog.feat_v, seq.items), feature_rows(catalog.feat_t, seq.items), m);
  x.xv = maybe_dropout(apply_modality_bias(x.xv, seq.items, m.bias_v, c.flags.use_id_bias), ctx);
  x.xt = maybe_dropout(apply_modality_bias(x.xt, seq.items, m.bias_t, c.flags.use_id_bias), ctx);

  Var d;
  if (c.flags.time_aware) {
    const TimeDiffSeq td = compute_time_diffs(seq.timestamps);
    d = layer_norm_1d(Var(Tensor({n}, td.raw)), m.time_gamma, m.time_beta);
  } else {
    d = Var(Tensor({n}));
  }

  UserForward out;
  out.diag.length = n;
  Var xv = x.xv, xt = x.xt, y;
  for (const Model::Layer& layer : m.layers) {
    const AlignOutput al = align_modalities(xv, xt, d, d, layer.align, ctx);
    Var fused;
    if (c.flags.time_aware) {
      FusionDiagnostics fd;
      fused = fuse_time_signals(al.d_hat_v, al.d_hat_t, layer.fusion, &fd);
      out.diag.max_imag_residue = std::max(out.diag.max_imag_residue, fd.max_imag_residue);
    } else {
      fused = Var(Tensor({n}));
    }
    const Var mm = ticossd_forward(al.pv, al.pt, fused, layer.cross, ctx);
    y = output_head(mm, al.pv, al.pt, layer.cross, ctx);
    xv = y;
    xt = al.pt;
  }
  out.u = reshape(slice_rows(y, n - 1, 1), {c.N});
  return out;
}

Var item_representations(const ItemCatalog& catalog, const Model& m, std::span<const int> items) {
  check_items(catalog, m, items, false);
  const ModelConfig& c = m.config();
  AdaptedFeatures x = adapt_features(feature_rows(catalog.feat_v, items), feature_rows(catalog.feat_t, items), m);
  Var rv = apply_modality_bias(x.xv, items, m.bias_v, c.flags.use_id_bias);
  const Var rt = apply_modality_bias(x.xt, items, m.bias_t, c.flags.use_id_bias);
  std::vector<Real> present(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) present[i] = catalog.present_v[items[i]] ? Real(1) : Real(0);
  rv = mask_rows(rv, present);
  return add(rv, rt);
}

Var all_item_representations(const ItemCatalog& catalog, const Model& m) {
  std::vector<int> items(catalog.num_items());
  for (int i = 0; i < catalog.num_items(); ++i) items[i] = i + 1;
  return item_representations(catalog, m, items);
}

Var score_candidates(const Var& u, const ItemCatalog& catalog, const Model& m, std::span<const int> candidates) {
  const int N = m.config().N;
  const Var U = u.value().rank() == 1 ? reshape(u, {1, N}) : u;
  if (U.cols() != N) throw DimensionError("score_candidates: user representation width != N");
  const Var s = matmul_bt(U, item_representations(catalog, m, candidates));
  return u.value().rank() == 1 ? reshape(s, {static_cast<int>(candidates.size())}) : s;
}

std::size_t transfer_params(Model& dst, const Model& src) {
  for (const auto* e : dst.params().canonical()) {
    if (e->name.rfind("bias.", 0) == 0 || e->name.rfind("adapter.", 0) == 0) continue;
    if (!src.params().contains(e->name) || src.params().get(e->name).shape() != e->var.shape())
      throw ContractError("incompatible checkpoint: parameter '" + e->name + "' is missing or has another shape");
  }
  std::size_t copied = 0;
  for (const auto* e : dst.params().canonical()) {
    if (e->name.rfind("bias.", 0) == 0 || !src.params().contains(e->name)) continue;
    const Var& from = src.params().get(e->name);
    if (from.shape() != e->var.shape()) continue;
    Var to = e->var;
    to.mutable_value() = from.value();
    ++copied;
  }
  return copied;
}

}  // namespace mmrec
