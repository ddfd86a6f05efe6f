// chronovae: pre-train, embed, classify, self-check and benchmark from the shell.
//
// Exit codes: 0 ok, 1 failed check, 2 usage/config/input error, 3 numeric abort.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "chronovae/bench.hpp"
#include "chronovae/checkpoint.hpp"
#include "chronovae/checksum.hpp"
#include "chronovae/classify.hpp"
#include "chronovae/selfcheck.hpp"
#include "chronovae/train.hpp"

using namespace chronovae;

namespace {

constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kUsage = 2;
constexpr int kNumeric = 3;

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw DatasetError("cannot write '" + path + "'");
  f << text;
}

struct ConfigArgs {
  std::string file;
  std::vector<std::string> overrides;

  void add(CLI::App* cmd) {
    cmd->add_option("--config", file, "key=value config file")->check(CLI::ExistingFile);
    cmd->add_option("--set", overrides, "override one key, e.g. --set embed_dim=32");
  }

  void apply(ModelConfig& m, TrainConfig& t) const {
    if (!file.empty()) load_config_file(file, m, t);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
      set_config_value(kv.substr(0, eq), kv.substr(eq + 1), m, t);
    }
    auto errs = validate(m);
    auto terrs = validate(t);
    errs.insert(errs.end(), terrs.begin(), terrs.end());
    if (!errs.empty()) {
      std::string msg = "invalid configuration:";
      for (const auto& e : errs) msg += "\n  " + e;
      throw ConfigError(msg);
    }
  }
};

struct PretrainArgs {
  ConfigArgs config;
  std::string corpus;
  std::size_t synthetic = 0;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out;
  std::string log;
  int checkpoint_every = 0;
  bool verbose = false;
};

int run_pretrain(const PretrainArgs& a) {
  ModelConfig cfg;
  TrainConfig tcfg;
  a.config.apply(cfg, tcfg);
  if (a.seed_given) tcfg.seed = a.seed;
  if (a.corpus.empty() == (a.synthetic == 0)) {
    throw ConfigError("give exactly one of --corpus or --synthetic");
  }

  std::vector<Matrix> corpus;
  if (!a.corpus.empty()) {
    corpus = load_ucr_ts(a.corpus).series;
  } else {
    Rng rng(seed_mix(tcfg.seed, 5));
    for (auto& s : synth_corpus(a.synthetic, cfg.seq_len, rng)) corpus.push_back(std::move(s.values));
  }

  PretrainOptions opts;
  opts.verbose = a.verbose;
  if (a.checkpoint_every > 0) {
    opts.on_epoch = [&](const EpochRecord& rec, const ModelParams& p, const ModelState& s) {
      if (rec.epoch % a.checkpoint_every == 0) {
        save_checkpoint(a.out + ".epoch" + std::to_string(rec.epoch), cfg, tcfg, p, s);
      }
    };
  }
  PretrainResult r = pretrain(corpus, cfg, tcfg, opts);
  save_checkpoint(a.out, cfg, tcfg, r.params, r.state);
  const std::string log_path = a.log.empty() ? a.out + ".log.csv" : a.log;
  r.log.write_csv(log_path);

  std::cout << "epochs " << r.log.epochs.size() << ", best epoch " << r.best_epoch << "\n";
  if (!r.log.epochs.empty()) {
    const auto& last = r.log.epochs.back().loss;
    std::cout << "final recon " << last.recon << " kl " << last.kl << " mtsm " << last.mtsm << " total "
              << last.total << "\n";
  }
  std::cout << "log checksum " << hex(r.log.checksum()) << "\n";
  std::cout << "wrote " << a.out << " and " << log_path << "\n";
  return kOk;
}

struct EmbedArgs {
  std::string checkpoint;
  std::string data;
  std::string out;
};

int run_embed(const EmbedArgs& a) {
  Checkpoint ck = load_checkpoint(a.checkpoint);
  LabeledDataset ds = load_ucr_ts(a.data);
  Matrix e = extract_embeddings(ds, ck.params, ck.state, ck.model_cfg);
  std::ostringstream os;
  os << "label";
  for (Index j = 0; j < e.cols(); ++j) os << ",e" << j;
  os << '\n' << std::setprecision(17);
  for (Index i = 0; i < e.rows(); ++i) {
    os << ds.class_names[static_cast<std::size_t>(ds.labels[static_cast<std::size_t>(i)])];
    for (Index j = 0; j < e.cols(); ++j) os << ',' << e(i, j);
    os << '\n';
  }
  write_text(a.out, os.str());
  Fnv1a h;
  h.add(e);
  std::cout << "embedded " << e.rows() << " series into " << e.cols() << " dims, checksum " << hex(h.value())
            << "\n";
  return kOk;
}

struct ClassifyArgs {
  std::string checkpoint;
  std::string train;
  std::string test;
  std::string report = "json";
  std::string out;
  bool percent = false;
  std::uint64_t seed = 0;
  int hidden = 0;
  double dropout = -1.0;
  int epochs = 0;
};

std::string report_csv(const EvalReport& r, bool percent) {
  const double scale = percent ? 100.0 : 1.0;
  std::ostringstream os;
  os << std::setprecision(10) << "metric,value\naccuracy," << scale * r.accuracy << "\nmacro_f1,"
     << scale * r.macro_f1 << '\n';
  for (std::size_t k = 0; k < r.per_class_f1.size(); ++k) os << "f1_class" << k << ',' << scale * r.per_class_f1[k] << '\n';
  return os.str();
}

int run_classify(const ClassifyArgs& a) {
  Checkpoint ck = load_checkpoint(a.checkpoint);
  LabeledDataset train = load_ucr_ts(a.train);
  LabeledDataset test = load_ucr_ts(a.test);
  if (test.class_names != train.class_names) {
    throw DatasetError("train and test label sets differ");
  }
  ClassifierConfig ccfg = ClassifierConfig::from(ck.train_cfg, ck.model_cfg.dropout_p);
  if (a.hidden > 0) ccfg.hidden = a.hidden;
  if (a.dropout >= 0.0) ccfg.dropout_p = a.dropout;
  if (a.epochs > 0) ccfg.max_epochs = a.epochs;
  EvalReport r = run_downstream(train, test, ck.params, ck.state, ck.model_cfg, ccfg, a.seed);
  const std::string text = a.report == "csv" ? report_csv(r, a.percent) : r.to_json(a.percent) + "\n";
  if (a.out.empty()) {
    std::cout << text;
  } else {
    write_text(a.out, text);
    std::cout << "accuracy " << r.accuracy << " macro_f1 " << r.macro_f1 << "\n";
  }
  return kOk;
}

int run_selfcheck_cmd(bool inject, std::uint64_t seed) {
  SelfcheckOptions opts;
  opts.inject_gradient_fault = inject;
  opts.seed = seed;
  auto results = run_selfcheck(opts);
  print_selfcheck(results, std::cout);
  for (const auto& r : results) {
    if (!r.ok()) return kCheckFailed;
  }
  return kOk;
}

struct BenchArgs {
  std::vector<Index> lengths{256, 512, 1024, 2048};
  Index dim = 32;
  int reps = 5;
  std::uint64_t seed = 0;
  std::string out;
};

int run_bench(const BenchArgs& a) {
  if (a.lengths.empty()) throw ConfigError("--lengths needs at least one value");
  ScalingTable t = scaling_probe(a.lengths, a.dim, a.reps, a.seed);
  std::cout << t.to_csv();
  std::cout << "# exponent hope " << t.hope_exponent << " attention " << t.attn_exponent << "\n";
  if (!a.out.empty()) write_text(a.out, t.to_csv());
  return kOk;
}

struct BenchmarkArgs {
  std::string checkpoint;
  std::string manifest;
  int max_classes = 8;
  Index max_len = 400;
  std::uint64_t seed = 0;
  std::string out_csv;
  std::string out_json;
};

int run_benchmark(const BenchmarkArgs& a) {
  Checkpoint ck = load_checkpoint(a.checkpoint);
  auto manifest = load_manifest(a.manifest);
  ClassifierConfig ccfg = ClassifierConfig::from(ck.train_cfg, ck.model_cfg.dropout_p);
  BenchmarkTable t = benchmark_run(manifest, ck.params, ck.state, ck.model_cfg, ccfg,
                                   {a.max_classes, a.max_len}, a.seed);
  std::cout << t.to_csv();
  for (const auto& f : t.failures) std::cerr << "failed " << f << "\n";
  for (const auto& s : t.skipped) std::cerr << "skipped " << s << "\n";
  if (!a.out_csv.empty()) write_text(a.out_csv, t.to_csv());
  if (!a.out_json.empty()) write_text(a.out_json, t.to_json() + "\n");
  return kOk;
}

struct SynthArgs {
  std::size_t per_class = 30;
  int classes = 2;
  Index length = 256;
  std::uint64_t seed = 0;
  std::string out;
};

int run_synth(const SynthArgs& a) {
  Rng rng(a.seed);
  LabeledDataset ds = synth_labeled(a.per_class, a.classes, a.length, rng);
  write_ucr_tsv(ds, a.out);
  std::cout << "wrote " << ds.size() << " series to " << a.out << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Disentangled VAE time-series encoder with HOPE blocks"};
  app.require_subcommand(1);

  PretrainArgs pre;
  auto* c_pre = app.add_subcommand("pretrain", "masked self-supervised pre-training");
  pre.config.add(c_pre);
  c_pre->add_option("--corpus", pre.corpus, "series file (UCR tsv or .ts; labels ignored)");
  c_pre->add_option("--synthetic", pre.synthetic, "generate n synthetic series instead");
  auto* seed_opt = c_pre->add_option("--seed", pre.seed, "overrides the config seed");
  c_pre->add_option("--out", pre.out, "checkpoint path")->required();
  c_pre->add_option("--log", pre.log, "loss log CSV (default <out>.log.csv)");
  c_pre->add_option("--checkpoint-every", pre.checkpoint_every, "also save every N epochs");
  c_pre->add_flag("--verbose", pre.verbose, "print every epoch");

  EmbedArgs emb;
  auto* c_emb = app.add_subcommand("embed", "write [mu_t | mu_s] embeddings as CSV");
  c_emb->add_option("--checkpoint", emb.checkpoint)->required();
  c_emb->add_option("--data", emb.data)->required();
  c_emb->add_option("--out", emb.out)->required();

  ClassifyArgs cls;
  auto* c_cls = app.add_subcommand("classify", "frozen-encoder classification of one train/test pair");
  c_cls->add_option("--checkpoint", cls.checkpoint)->required();
  c_cls->add_option("--train", cls.train)->required();
  c_cls->add_option("--test", cls.test)->required();
  c_cls->add_option("--report", cls.report)->check(CLI::IsMember({"json", "csv"}));
  c_cls->add_option("--out", cls.out, "write the report here instead of stdout");
  c_cls->add_flag("--percent", cls.percent, "report metrics x100");
  c_cls->add_option("--seed", cls.seed);
  c_cls->add_option("--hidden", cls.hidden, "classifier hidden width");
  c_cls->add_option("--dropout", cls.dropout, "classifier dropout");
  c_cls->add_option("--epochs", cls.epochs, "classifier epoch limit (default 300)");

  bool inject = false;
  std::uint64_t check_seed = 0;
  auto* c_chk = app.add_subcommand("selfcheck", "gradient, decomposition, memory and KL checks");
  c_chk->add_flag("--inject-fault", inject, "add an op with a broken gradient; the run must fail");
  c_chk->add_option("--seed", check_seed);

  BenchArgs ben;
  auto* c_ben = app.add_subcommand("bench", "time the HOPE block against attention");
  c_ben->add_option("--lengths", ben.lengths)->delimiter(',');
  c_ben->add_option("--dim", ben.dim);
  c_ben->add_option("--reps", ben.reps);
  c_ben->add_option("--seed", ben.seed);
  c_ben->add_option("--out", ben.out);

  BenchmarkArgs bm;
  auto* c_bm = app.add_subcommand("benchmark", "run classify over a manifest of datasets");
  c_bm->add_option("--checkpoint", bm.checkpoint)->required();
  c_bm->add_option("--manifest", bm.manifest)->required();
  c_bm->add_option("--max-classes", bm.max_classes, "keep datasets with fewer classes (0: all)");
  c_bm->add_option("--max-len", bm.max_len, "keep datasets with shorter series (0: all)");
  c_bm->add_option("--seed", bm.seed);
  c_bm->add_option("--out-csv", bm.out_csv);
  c_bm->add_option("--out-json", bm.out_json);

  SynthArgs syn;
  auto* c_syn = app.add_subcommand("synth", "write a synthetic labelled dataset (UCR tsv)");
  c_syn->add_option("--per-class", syn.per_class);
  c_syn->add_option("--classes", syn.classes);
  c_syn->add_option("--length", syn.length);
  c_syn->add_option("--seed", syn.seed);
  c_syn->add_option("--out", syn.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*c_pre) {
      pre.seed_given = seed_opt->count() > 0;
      return run_pretrain(pre);
    }
    if (*c_emb) return run_embed(emb);
    if (*c_cls) return run_classify(cls);
    if (*c_chk) return run_selfcheck_cmd(inject, check_seed);
    if (*c_ben) return run_bench(ben);
    if (*c_bm) return run_benchmark(bm);
    if (*c_syn) return run_synth(syn);
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kNumeric;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
