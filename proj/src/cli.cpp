#include "mmrec/cli.hpp"

#include <filesystem>
#include <sstream>

#include "CLI11.hpp"
#include "mmrec/checkpoint.hpp"
#include "mmrec/config.hpp"
#include "mmrec/eval.hpp"
#include "mmrec/harness.hpp"
#include "mmrec/synth.hpp"
#include "mmrec/training.hpp"

namespace mmrec {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config;
  std::string data;
  std::string checkpoint;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string ablation = "full";
  // synth
  int users = 200, items = 100, dim = 32, stride = 1;
  double phase = 0.0, missing = 0.1, break_prob = 0.0;
  std::uint64_t feature_seed = 1;
  // bench / probe
  int repeats = 5;
  std::vector<int> lengths{1, 2, 3, 5, 10, 20, 50};
};

RunConfig run_config(const Options& o) {
  RunConfig rc = o.config.empty() ? RunConfig{} : load_config(o.config);
  rc.model = apply_ablation(rc.model, parse_ablation(o.ablation));
  if (o.seed_set) rc.train.seed = o.seed;
  rc.model.validate();
  rc.train.validate();
  return rc;
}

fs::path prepared_dir(const Options& o) {
  if (o.data.empty()) throw ContractError("--data is required");
  const fs::path p = fs::path(o.data) / "prepared";
  if (!fs::exists(p / "sequences.tsv")) throw ContractError("no prepared dataset under '" + o.data + "'; run prepare");
  return p;
}

fs::path out_dir(const Options& o, const char* fallback) {
  return o.out.empty() ? fs::path(o.data) / fallback : fs::path(o.out);
}

void write_report(const fs::path& dir, const std::string& name, const std::string& body, std::ostream& out) {
  write_file(dir / name, body);
  out << body;
}

int cmd_synth(const Options& o, std::ostream& out) {
  if (o.out.empty()) throw ContractError("--out is required");
  SynthConfig sc;
  sc.users = o.users;
  sc.items = o.items;
  sc.dim = o.dim;
  sc.seed = o.seed;
  sc.feature_seed = o.feature_seed;
  sc.phase = o.phase;
  sc.missing_visual = o.missing;
  sc.break_prob = o.break_prob;
  sc.stride = o.stride;
  const SynthCorpus c = make_synthetic(sc);
  write_synthetic(o.out, c);
  out << "wrote " << c.interactions.size() << " interactions over " << c.item_ids.size() << " items to " << o.out
      << "\n";
  return 0;
}

int cmd_prepare(const Options& o, std::ostream& out) {
  if (o.data.empty()) throw ContractError("--data is required");
  const RunConfig rc = o.config.empty() ? RunConfig{} : load_config(o.config);
  const fs::path dest = o.out.empty() ? fs::path(o.data) / "prepared" : fs::path(o.out);
  const Dataset ds = prepare_dataset(o.data, dest, rc.train.kcore);
  out << "prepared " << ds.sequences.sequences.size() << " users, " << ds.catalog.num_items() << " items ("
      << ds.split.train.size() << " train / " << ds.split.valid.size() << " valid / " << ds.split.test.size()
      << " test) in " << dest.string() << "\n";
  return 0;
}

int cmd_train(const Options& o, bool pretrain, std::ostream& out) {
  const RunConfig rc = run_config(o);
  const Dataset ds = load_prepared(prepared_dir(o));
  const fs::path dir = out_dir(o, pretrain ? "pretrain" : "finetune");
  Model m = make_model(rc.model, rc.train.seed, catalog_dims(ds.catalog));
  if (!o.checkpoint.empty()) transfer_params(m, load_checkpoint(o.checkpoint));
  const TrainOutput to{dir, &out};
  const TrainResult res = pretrain ? run_pretrain(ds, rc.train, m, to) : run_finetune(ds, rc.train, m, to);
  if (!pretrain && !ds.split.test.empty())
    write_report(dir, "eval_report.json", evaluate_model(m, ds.split.test, ds.catalog).to_json(), out);
  out << res.convergence_json();
  return 0;
}

int cmd_evaluate(const Options& o, std::ostream& out) {
  if (o.checkpoint.empty()) throw ContractError("--checkpoint is required");
  const Dataset ds = load_prepared(prepared_dir(o));
  const Model m = load_checkpoint(o.checkpoint);
  const fs::path dir = out_dir(o, "eval");
  write_report(dir, "eval_report.json", evaluate_model(m, ds.split.test, ds.catalog).to_json(), out);
  return 0;
}

int cmd_probe(const Options& o, std::ostream& out) {
  if (o.checkpoint.empty()) throw ContractError("--checkpoint is required");
  const Dataset ds = load_prepared(prepared_dir(o));
  const Model m = load_checkpoint(o.checkpoint);
  const auto rows = truncation_probe(m, ds.split.test, ds.catalog, o.lengths);
  write_report(out_dir(o, "probe"), "truncation.csv", truncation_csv(rows), out);
  return 0;
}

int cmd_verify(const Options& o, std::ostream& out) {
  const DualityReport r = verify_duality(o.seed);
  if (!o.out.empty()) write_file(fs::path(o.out) / "verify.json", r.to_json());
  out << r.to_json();
  out << (r.pass ? "PASS" : "FAIL") << " duality over " << r.rows.size() << " configurations\n";
  if (!r.pass) out << r.failures();
  return r.pass ? 0 : 1;
}

int cmd_bench(const Options& o, std::ostream& out) {
  const BenchReport r = bench_kernels(BenchGrid::standard(), o.repeats, o.seed);
  if (!o.out.empty()) write_file(fs::path(o.out) / "bench.json", r.to_json());
  out << r.to_json();
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-modal sequential recommender", "mmrec"};
  app.require_subcommand(1);
  Options o;
  const std::vector<std::string> ablations{"full", "no-time", "no-shared", "no-lf", "no-af", "no-id", "2l"};

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "key = value configuration file")->check(CLI::ExistingFile);
    sub->add_option("--data", o.data, "dataset directory");
    sub->add_option("--checkpoint", o.checkpoint, "checkpoint file");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--seed", o.seed, "random seed")->each([&](const std::string&) { o.seed_set = true; });
    sub->add_option("--ablation", o.ablation, "model variant")->check(CLI::IsMember(ablations));
  };
  auto* synth = app.add_subcommand("synth", "write a synthetic corpus");
  common(synth);
  synth->add_option("--users", o.users);
  synth->add_option("--items", o.items);
  synth->add_option("--dim", o.dim);
  synth->add_option("--phase", o.phase);
  synth->add_option("--missing-visual", o.missing);
  synth->add_option("--feature-seed", o.feature_seed);
  synth->add_option("--stride", o.stride, "items advanced per step");
  synth->add_option("--break-prob", o.break_prob, "chance that a step follows a long break and skips an item");
  auto* prepare = app.add_subcommand("prepare", "k-core filter, index and split a raw dataset");
  common(prepare);
  auto* pretrain = app.add_subcommand("pretrain", "in-batch pretraining");
  common(pretrain);
  auto* finetune = app.add_subcommand("finetune", "full-corpus finetuning with early stopping");
  common(finetune);
  auto* evaluate = app.add_subcommand("evaluate", "full-ranking test metrics");
  common(evaluate);
  auto* probe = app.add_subcommand("probe", "metrics under truncated histories");
  common(probe);
  probe->add_option("--lengths", o.lengths)->delimiter(',');
  auto* verify = app.add_subcommand("verify", "check quadratic/recurrent SSD agreement");
  common(verify);
  auto* bench = app.add_subcommand("bench", "time both SSD forms");
  common(bench);
  bench->add_option("--repeats", o.repeats);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(std::move(rev));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n" << app.help();
    return 2;
  }

  try {
    if (synth->parsed()) return cmd_synth(o, out);
    if (prepare->parsed()) return cmd_prepare(o, out);
    if (pretrain->parsed()) return cmd_train(o, true, out);
    if (finetune->parsed()) return cmd_train(o, false, out);
    if (evaluate->parsed()) return cmd_evaluate(o, out);
    if (probe->parsed()) return cmd_probe(o, out);
    if (verify->parsed()) return cmd_verify(o, out);
    if (bench->parsed()) return cmd_bench(o, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace mmrec
