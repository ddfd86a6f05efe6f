// Acceptance run: one PASS/FAIL line per criterion.
//
//   acceptance <criterion>   run one
//   acceptance all           run every criterion

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>

#include "chronovae/bench.hpp"
#include "chronovae/checksum.hpp"
#include "chronovae/classify.hpp"
#include "chronovae/gradcheck.hpp"
#include "chronovae/probes.hpp"
#include "chronovae/titans.hpp"
#include "chronovae/train.hpp"
#include "titans_oracle.hpp"

using namespace chronovae;

namespace {

struct Verdict {
  bool pass;
  std::string detail;
};

constexpr std::uint64_t kSeed = 0;

// ---- shared smoke pre-training -------------------------------------------

ModelConfig smoke_model() {
  ModelConfig cfg;
  cfg.seq_len = 256;
  cfg.embed_dim = 32;
  cfg.latent_dim = 16;
  cfg.n_encoder_blocks = 2;
  cfg.n_seasonal_decoder_blocks = 2;
  return cfg;
}

TrainConfig smoke_train() {
  TrainConfig t;
  t.batch_size = 10;
  t.max_epochs = 30;
  t.pretrain_patience = 31;  // run all 30 epochs
  t.seed = kSeed;
  return t;
}

std::vector<Matrix> smoke_corpus() {
  Rng rng(seed_mix(kSeed, 5));
  std::vector<Matrix> out;
  for (auto& s : synth_corpus(50, 256, rng)) out.push_back(std::move(s.values));
  return out;
}

PretrainResult smoke_pretrain() { return pretrain(smoke_corpus(), smoke_model(), smoke_train()); }

struct Downstream {
  LabeledDataset train, test;
};

Downstream labeled(int k) {
  Rng rng(seed_mix(kSeed, 50 + static_cast<std::uint64_t>(k)));
  Downstream d;
  d.train = synth_labeled(30, k, 256, rng);
  d.test = synth_labeled(100, k, 256, rng);
  return d;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

// ---- criteria --------------------------------------------------------------

Verdict gradient_correctness() {
  double worst = 0.0;
  std::string worst_name;
  bool ok = true;
  auto ops = op_gradient_suite(1e-4, 11);
  for (const auto& r : ops) {
    ok = ok && r.passed;
    if (r.max_rel_err > worst) {
      worst = r.max_rel_err;
      worst_name = r.name;
    }
  }
  auto e2e = end_to_end_gradient_check(gradcheck_model_config(), 64, 1e-3, 21);
  return {ok && e2e.passed, std::to_string(ops.size()) + " ops, worst " + worst_name + " " + fmt(worst) +
                                " (tol 1e-4); end-to-end " + fmt(e2e.max_rel_err) + " (tol 1e-3)"};
}

Verdict decomposition_identity() {
  auto p = decomposition_probe(1000, 256, 25, 31);
  const bool ok = p.inexact == 0 && p.constant_seasonal_max == 0.0;
  return {ok, std::to_string(p.inexact) + "/" + std::to_string(p.elements) +
                  " elements with trend+seasonal != x (worst " + fmt(p.worst_ulps) +
                  " ulp); constant-series seasonal max " + fmt(p.constant_seasonal_max)};
}

Verdict titans_state_machine() {
  bool ok = true;
  double max_w = 0.0;
  for (double scale : {1.0, 10.0, 100.0}) {
    auto p = titans_probe(8, 256, 32, scale, 32);
    ok = ok && p.clamp_held && p.fresh_state_reproducible && p.chunk_causal;
    max_w = std::max(max_w, p.max_abs_fast_weight);
  }

  // D=2 hand oracle over a multi-chunk trace, one run entering the clamp.
  double gap = 0.0;
  for (double scale : {1.0, 30.0}) {
    Rng rng(seed_mix(kSeed, 33) + static_cast<std::uint64_t>(scale));
    Matrix sk(7, 2), sv(7, 2), sm(7, 2);
    for (Matrix* m : {&sk, &sv, &sm}) {
      for (Index i = 0; i < m->size(); ++i) m->data()[i] = rng.normal(0.0, scale);
    }
    TitansSettings st{2, 0.99, 0.01, 5.0};
    std::vector<TitansState> after;
    TitansHooks hooks;
    hooks.after_update = [&](Index, const TitansState& s) { after.push_back(s); };
    NoGradGuard no_grad;
    Matrix y = fast_weight_memory(Tensor(sk), Tensor(sv), Tensor(sm), st, hooks).value();
    auto rows = [](const Matrix& m) {
      std::vector<oracle::Vec<2>> out;
      for (Index t = 0; t < m.rows(); ++t) out.push_back({m(t, 0), m(t, 1)});
      return out;
    };
    auto tr = oracle::run<2>(rows(sk), rows(sv), rows(sm), 2, {0.99, 0.01, 5.0});
    if (tr.after.size() != after.size()) return {false, "chunk count differs from oracle"};
    for (std::size_t c = 0; c < after.size(); ++c) {
      for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
          gap = std::max({gap, std::abs(after[c].main(i, j) - tr.after[c].main[i][j]),
                          std::abs(after[c].key(i, j) - tr.after[c].k[i][j]),
                          std::abs(after[c].value(i, j) - tr.after[c].v[i][j])});
        }
      }
    }
    for (Index t = 0; t < y.rows(); ++t) {
      for (int i = 0; i < 2; ++i) gap = std::max(gap, std::abs(y(t, i) - tr.outputs[static_cast<std::size_t>(t)][i]));
    }
  }
  ok = ok && gap <= 1e-12;
  return {ok, "max |fast weight| " + fmt(max_w) + " (clamp 5); oracle gap " + fmt(gap) + " (tol 1e-12)"};
}

Verdict cms_schedule() {
  ModelConfig cfg;
  cfg.embed_dim = 16;
  auto p = cms_schedule_probe(cfg, 64, 34);
  const std::vector<std::uint64_t> want_counts{64, 16, 4, 1};
  const double want_rates[4] = {0.1, 0.05, 1.0 / 30.0, 0.025};
  double rate_gap = 0.0;
  for (std::size_t i = 0; i < 4 && i < p.rates.size(); ++i) {
    rate_gap = std::max(rate_gap, std::abs(p.rates[i] - want_rates[i]));
  }
  const bool ok = p.update_counts == want_counts && p.rates.size() == 4 && rate_gap <= 1e-12 && p.eval_pure;
  std::string counts;
  for (auto c : p.update_counts) counts += (counts.empty() ? "" : ",") + std::to_string(c);
  return {ok, "counts [" + counts + "], rate gap " + fmt(rate_gap) + ", eval pure " + (p.eval_pure ? "yes" : "no")};
}

Verdict disentanglement_structure() {
  ModelConfig cfg;
  cfg.seq_len = 64;
  cfg.max_len = 64;
  cfg.embed_dim = 16;
  cfg.latent_dim = 8;
  cfg.n_encoder_blocks = 2;
  cfg.n_seasonal_decoder_blocks = 2;
  cfg.titans_chunk = 16;
  cfg.decomp_kernel = 9;
  Rng rng(seed_mix(kSeed, 35));
  ModelParams p = make_model(cfg, rng);
  for (NamedTensor nt : p.parameters()) {
    Matrix& v = nt.tensor.mutable_value();
    if (v.isZero(0.0)) {
      for (Index i = 0; i < v.size(); ++i) v.data()[i] = rng.normal(0.0, 0.3);
    }
  }
  ModelState s = make_model_state(cfg);
  double leak = 0.0;
  double signal = 1e300;
  for (int trial = 0; trial < 20; ++trial) {
    Matrix x(64, 1);
    for (Index t = 0; t < 64; ++t) x(t, 0) = rng.normal();
    Decomposition target = decompose(x, cfg.decomp_kernel);
    Rng noise(seed_mix(kSeed, 100 + static_cast<std::uint64_t>(trial)));
    ForwardOptions opts{true, &noise, nullptr};
    Encoded enc = encode(Tensor(x), p, s, cfg, opts);
    auto [zt0, zs0] = reparameterize(enc.posterior, noise, false);

    Tensor zt(zt0.value(), true), zs(zs0.value(), true);
    Decoded d = decode(zt, zs, p, s, cfg, opts);
    trend_branch_loss(d.trend, target).backward();
    leak = std::max(leak, zs.grad().cwiseAbs().maxCoeff());
    signal = std::min(signal, zt.grad().cwiseAbs().maxCoeff());

    Tensor zt2(zt0.value(), true), zs2(zs0.value(), true);
    Decoded d2 = decode(zt2, zs2, p, s, cfg, opts);
    seasonal_branch_loss(d2.seasonal, target).backward();
    leak = std::max(leak, zt2.grad().cwiseAbs().maxCoeff());
    signal = std::min(signal, zs2.grad().cwiseAbs().maxCoeff());
  }
  return {leak == 0.0 && signal > 0.0,
          "max cross-branch gradient " + fmt(leak) + " over 20 inputs; smallest own-branch gradient " + fmt(signal)};
}

Verdict kl_closed_forms() {
  Matrix z = Matrix::Zero(1, 16);
  const double at_prior = kl_loss({Tensor(z), Tensor(z), Tensor(z), Tensor(z)}).item();
  Matrix m = z;
  m(0, 0) = 1.0;
  const double unit = kl_loss({Tensor(m), Tensor(z), Tensor(z), Tensor(z)}).item();
  Rng rng(seed_mix(kSeed, 41));
  double min_kl = 1e300;
  for (int i = 0; i < 10000; ++i) {
    Matrix a(1, 16), b(1, 16), c(1, 16), d(1, 16);
    for (Matrix* x : {&a, &b, &c, &d}) {
      for (Index j = 0; j < 16; ++j) (*x)(0, j) = rng.normal(0.0, 2.0);
    }
    min_kl = std::min(min_kl, kl_loss({Tensor(a), Tensor(b), Tensor(c), Tensor(d)}).item());
  }
  const bool ok = at_prior == 0.0 && unit == 0.5 && min_kl >= 0.0;
  return {ok, "kl(prior) " + fmt(at_prior) + ", kl(unit mean) " + fmt(unit) + ", min over 1e4 random " + fmt(min_kl)};
}

// Non-increasing over every 10-epoch window after epoch 5; one bad window allowed.
int mtsm_window_violations(const TrainLog& log) {
  int bad = 0;
  const auto& e = log.epochs;
  for (std::size_t start = 5; start + 9 < e.size(); ++start) {
    if (e[start + 9].loss.mtsm > e[start].loss.mtsm) ++bad;
  }
  return bad;
}

Verdict smoke_pretraining() {
  const auto t0 = std::chrono::steady_clock::now();
  PretrainResult r = smoke_pretrain();
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (r.log.epochs.size() != 30) return {false, "ran " + std::to_string(r.log.epochs.size()) + " epochs"};
  const double first = r.log.epochs.front().loss.total;
  const double last = r.log.epochs.back().loss.total;
  const int bad = mtsm_window_violations(r.log);
  const bool ok = last < 0.5 * first && bad <= 1 && secs < 600.0;
  return {ok, "total " + fmt(first) + " -> " + fmt(last) + " (ratio " + fmt(last / first) +
                  ", need < 0.5); recon " + fmt(r.log.epochs.front().loss.recon) + " -> " +
                  fmt(r.log.epochs.back().loss.recon) + "; mtsm " + fmt(r.log.epochs.front().loss.mtsm) +
                  " -> " + fmt(r.log.epochs.back().loss.mtsm) + ", " + std::to_string(bad) +
                  " increasing windows (allow 1); " + fmt(secs) + " s"};
}

// Power spectrum of the standardized series: the space the classes are built in.
Eigen::VectorXd spectrum(const Matrix& s) {
  Matrix z = standardize_and_fit_length(s, 256);
  Eigen::VectorXd f(64);
  for (int k = 1; k <= 64; ++k) {
    double re = 0.0, im = 0.0;
    for (Index t = 0; t < 256; ++t) {
      const double a = 2.0 * std::numbers::pi * k * static_cast<double>(t) / 256.0;
      re += z(t, 0) * std::cos(a);
      im += z(t, 0) * std::sin(a);
    }
    f(k - 1) = std::hypot(re, im);
  }
  return f;
}

double one_nn_accuracy(const Downstream& d) {
  std::vector<Eigen::VectorXd> train;
  for (const auto& s : d.train.series) train.push_back(spectrum(s));
  int correct = 0;
  for (std::size_t i = 0; i < d.test.size(); ++i) {
    const Eigen::VectorXd f = spectrum(d.test.series[i]);
    std::size_t best = 0;
    for (std::size_t j = 1; j < train.size(); ++j) {
      if ((train[j] - f).squaredNorm() < (train[best] - f).squaredNorm()) best = j;
    }
    correct += d.train.labels[best] == d.test.labels[i];
  }
  return static_cast<double>(correct) / static_cast<double>(d.test.size());
}

Verdict classification_floor() {
  PretrainResult r = smoke_pretrain();
  const ModelConfig cfg = smoke_model();
  const ClassifierConfig ccfg = ClassifierConfig::from(smoke_train(), cfg.dropout_p);
  Downstream k2 = labeled(2), k4 = labeled(4);
  const double nn2 = one_nn_accuracy(k2);
  const auto t0 = std::chrono::steady_clock::now();
  EvalReport a = run_downstream(k2.train, k2.test, r.params, r.state, cfg, ccfg, kSeed);
  EvalReport b = run_downstream(k4.train, k4.test, r.params, r.state, cfg, ccfg, kSeed);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool ok = nn2 > 0.95 && a.accuracy >= 0.90 && a.macro_f1 >= 0.90 && b.accuracy >= 0.70 && secs < 300.0;
  return {ok, "K=2 accuracy " + fmt(a.accuracy) + " F1 " + fmt(a.macro_f1) + " (need 0.90; 1-NN oracle " +
                  fmt(nn2) + "); K=4 accuracy " + fmt(b.accuracy) + " (need 0.70); downstream " + fmt(secs) + " s"};
}

Verdict complexity_claim() {
  ScalingTable t = scaling_probe({256, 512, 1024, 2048}, 32, 5, 4);
  bool ratios_ok = true;
  std::string ratios;
  for (std::size_t i = 1; i < t.rows.size(); ++i) {
    ratios_ok = ratios_ok && t.rows[i].hope_ratio <= 2.5;
    ratios += (ratios.empty() ? "" : ",") + fmt(t.rows[i].hope_ratio);
  }
  const bool ok = ratios_ok && t.hope_exponent < 1.3 && t.attn_exponent > 1.7;
  return {ok, "HOPE doubling ratios [" + ratios + "] (max 2.5), exponent " + fmt(t.hope_exponent) +
                  " (< 1.3); attention exponent " + fmt(t.attn_exponent) + " (> 1.7)"};
}

Verdict frozen_encoder_contract() {
  PretrainResult r = smoke_pretrain();
  const ModelConfig cfg = smoke_model();
  const ClassifierConfig ccfg = ClassifierConfig::from(smoke_train(), cfg.dropout_p);
  const auto before = model_checksum(r.params, r.state);
  for (int k : {2, 4}) {
    Downstream d = labeled(k);
    extract_embeddings(d.test, r.params, r.state, cfg);
    run_downstream(d.train, d.test, r.params, r.state, cfg, ccfg, kSeed);
  }
  const auto after = model_checksum(r.params, r.state);
  std::ostringstream os;
  os << std::hex << before << " before, " << after << " after";
  return {before == after, os.str()};
}

Verdict determinism() {
  struct Run {
    std::uint64_t log, emb, report;
  };
  auto once = [] {
    PretrainResult r = smoke_pretrain();
    const ModelConfig cfg = smoke_model();
    Downstream d = labeled(2);
    Fnv1a h;
    h.add(extract_embeddings(d.test, r.params, r.state, cfg));
    EvalReport rep = run_downstream(d.train, d.test, r.params, r.state, cfg,
                                    ClassifierConfig::from(smoke_train(), cfg.dropout_p), kSeed);
    return Run{r.log.checksum(), h.value(), rep.checksum()};
  };
  Run a = once(), b = once();
  std::ostringstream os;
  os << std::hex << "log " << a.log << "/" << b.log << ", embeddings " << a.emb << "/" << b.emb << ", report "
     << a.report << "/" << b.report;
  return {a.log == b.log && a.emb == b.emb && a.report == b.report, os.str()};
}

const std::vector<std::pair<std::string, std::function<Verdict()>>>& criteria() {
  static const std::vector<std::pair<std::string, std::function<Verdict()>>> all{
      {"gradient_correctness", gradient_correctness},
      {"decomposition_identity", decomposition_identity},
      {"titans_state_machine", titans_state_machine},
      {"cms_schedule", cms_schedule},
      {"disentanglement_structure", disentanglement_structure},
      {"kl_closed_forms", kl_closed_forms},
      {"smoke_pretraining", smoke_pretraining},
      {"classification_floor", classification_floor},
      {"complexity_claim", complexity_claim},
      {"frozen_encoder_contract", frozen_encoder_contract},
      {"determinism", determinism},
  };
  return all;
}

bool report(const std::string& name, const std::function<Verdict()>& fn) {
  Verdict v;
  try {
    v = fn();
  } catch (const std::exception& e) {
    v = {false, std::string("threw: ") + e.what()};
  }
  std::cout << (v.pass ? "PASS " : "FAIL ") << name << ": " << v.detail << std::endl;
  return v.pass;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string which = argc > 1 ? argv[1] : "all";
  bool ok = true;
  bool found = false;
  for (const auto& [name, fn] : criteria()) {
    if (which != "all" && which != name) continue;
    found = true;
    ok = report(name, fn) && ok;
  }
  if (!found) {
    std::cerr << "unknown criterion '" << which << "'\n";
    return 2;
  }
  return ok ? 0 : 1;
}
