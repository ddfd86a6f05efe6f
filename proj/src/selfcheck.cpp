#include "chronovae/selfcheck.hpp"

#include <cmath>
#include <sstream>

#include "chronovae/gradcheck.hpp"
#include "chronovae/loss.hpp"
#include "chronovae/probes.hpp"

namespace chronovae {

namespace {

class Suite {
 public:
  explicit Suite(std::string name) { r_.name = std::move(name); }
  void expect(bool ok, const std::string& what) {
    ++r_.total;
    if (ok) {
      ++r_.passed;
    } else {
      r_.failures.push_back(what);
    }
  }
  SuiteResult done() { return std::move(r_); }

 private:
  SuiteResult r_;
};

std::string fmt(const std::string& label, Scalar v) {
  std::ostringstream os;
  os << label << " = " << v;
  return os.str();
}

SuiteResult gradient_suite(const SelfcheckOptions& o) {
  Suite s("gradient");
  for (const auto& r : op_gradient_suite(1e-4, o.seed, o.inject_gradient_fault)) {
    s.expect(r.passed, fmt(r.name + " max rel err", r.max_rel_err));
  }
  for (std::uint64_t k = 0; k < 2; ++k) {
    const auto r = end_to_end_gradient_check(gradcheck_model_config(), 64, 1e-3, o.seed + k);
    s.expect(r.passed, fmt(r.name + " max rel err", r.max_rel_err));
  }
  return s.done();
}

SuiteResult decomposition_suite(const SelfcheckOptions& o) {
  Suite s("decomposition");
  const auto p = decomposition_probe(200, 256, 25, o.seed);
  // Recombination is exact up to the one rounding of the seasonal subtraction.
  s.expect(p.worst_ulps <= 1.0, fmt("recombination error (ulps)", p.worst_ulps));
  s.expect(p.constant_seasonal_max == 0.0, fmt("constant-series seasonal", p.constant_seasonal_max));
  s.expect(p.linearity_error <= 1e-12, fmt("linearity error", p.linearity_error));
  return s.done();
}

SuiteResult titans_suite(const SelfcheckOptions& o) {
  Suite s("titans");
  for (Scalar scale : {1.0, 30.0}) {
    const auto p = titans_probe(8, 96, 16, scale, o.seed);
    s.expect(p.clamp_held, fmt("max |fast weight|", p.max_abs_fast_weight));
    s.expect(p.fresh_state_reproducible, "fresh-state reproducibility");
    s.expect(p.chunk_causal, "chunk-granular causality");
  }
  return s.done();
}

SuiteResult cms_suite(const SelfcheckOptions& o) {
  Suite s("cms");
  ModelConfig cfg;
  cfg.embed_dim = 8;
  const auto p = cms_schedule_probe(cfg, 64, o.seed);
  const std::vector<std::uint64_t> want = {64, 16, 4, 1};
  s.expect(p.update_counts == want, "consolidation counts over 64 batches");
  const std::vector<Scalar> rates = {0.1, 0.05, 1.0 / 30.0, 0.025};
  bool rates_ok = p.rates.size() == rates.size();
  for (std::size_t i = 0; rates_ok && i < rates.size(); ++i) rates_ok = std::abs(p.rates[i] - rates[i]) <= 1e-12;
  s.expect(rates_ok, "consolidation rates");
  s.expect(p.eval_pure, "eval-mode purity");
  return s.done();
}

SuiteResult kl_suite(const SelfcheckOptions& o) {
  Suite s("kl");
  NoGradGuard no_grad;
  auto post = [](Matrix mu_t, Matrix lv_t, Matrix mu_s, Matrix lv_s) {
    return LatentPosterior{Tensor(mu_t), Tensor(lv_t), Tensor(mu_s), Tensor(lv_s)};
  };
  const Matrix z = Matrix::Zero(1, 4);
  s.expect(kl_loss(post(z, z, z, z)).item() == 0.0, "kl at the prior");
  Matrix one = z;
  one(0, 2) = 1.0;
  s.expect(std::abs(kl_loss(post(one, z, z, z)).item() - 0.5) <= 1e-12, "kl with one unit mean");
  Rng rng(seed_mix(o.seed, 41));
  bool nonneg = true;
  for (int i = 0; i < 1000; ++i) {
    Matrix m[4];
    for (auto& x : m) {
      x.resize(1, 4);
      for (Index j = 0; j < 4; ++j) x(0, j) = rng.normal(0.0, 2.0);
    }
    if (kl_loss(post(m[0], m[1], m[2], m[3])).item() < 0.0) nonneg = false;
  }
  s.expect(nonneg, "kl non-negative on random posteriors");
  return s.done();
}

}  // namespace

std::vector<SuiteResult> run_selfcheck(const SelfcheckOptions& options) {
  return {gradient_suite(options), decomposition_suite(options), titans_suite(options),
          cms_suite(options), kl_suite(options)};
}

void print_selfcheck(const std::vector<SuiteResult>& results, std::ostream& os) {
  for (const auto& r : results) {
    os << r.name << ": " << r.passed << "/" << r.total << (r.ok() ? " ok" : " FAILED") << '\n';
    for (const auto& f : r.failures) os << "  fail: " << f << '\n';
  }
}

}  // namespace chronovae
