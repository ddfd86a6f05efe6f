#include "chronovae/probes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "chronovae/cms.hpp"
#include "chronovae/decomp.hpp"
#include "chronovae/titans.hpp"

namespace chronovae {

namespace {

Matrix random_matrix(Index rows, Index cols, Rng& rng, Scalar scale = 1.0) {
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal(0.0, scale);
  return m;
}

Matrix random_series(Index len, Rng& rng) {
  Matrix x(len, 1);
  Scalar level = rng.normal(0.0, 3.0);
  const Scalar noise = rng.uniform(0.05, 2.0);
  for (Index t = 0; t < len; ++t) {
    level += rng.normal(0.0, 0.3);
    x(t, 0) = level + rng.normal(0.0, noise);
  }
  return x;
}

bool same_state_storage(const CmsState& a, const CmsState& b) {
  if (a.batch_counter != b.batch_counter || a.update_counts != b.update_counts) return false;
  for (std::size_t i = 0; i < a.memory.size(); ++i) {
    if (a.memory[i] != b.memory[i]) return false;
  }
  return true;
}

}  // namespace

DecompositionProbe decomposition_probe(std::size_t n, Index len, Index kernel, std::uint64_t seed) {
  Rng rng(seed_mix(seed, 31));
  DecompositionProbe p;
  constexpr Scalar eps = std::numeric_limits<Scalar>::epsilon();
  for (std::size_t i = 0; i < n; ++i) {
    const Matrix x = random_series(len, rng);
    const Decomposition d = decompose(x, kernel);
    for (Index t = 0; t < len; ++t) {
      const Scalar sum = d.trend(t, 0) + d.seasonal(t, 0);
      ++p.elements;
      if (sum != x(t, 0)) ++p.inexact;
      const Scalar scale = std::max({std::abs(x(t, 0)), std::abs(d.trend(t, 0)), std::abs(d.seasonal(t, 0))});
      if (scale > 0) p.worst_ulps = std::max(p.worst_ulps, std::abs(sum - x(t, 0)) / (eps * scale));
    }

    const Matrix c = Matrix::Constant(len, 1, rng.normal(0.0, 10.0));
    p.constant_seasonal_max = std::max(p.constant_seasonal_max, decompose(c, kernel).seasonal.cwiseAbs().maxCoeff());

    const Matrix y = random_series(len, rng);
    const Scalar a = rng.uniform(-2.0, 2.0);
    const Scalar b = rng.uniform(-2.0, 2.0);
    const Matrix mix = a * x + b * y;
    const Decomposition dm = decompose(mix, kernel);
    const Decomposition dy = decompose(y, kernel);
    p.linearity_error = std::max(p.linearity_error, (dm.trend - (a * d.trend + b * dy.trend)).cwiseAbs().maxCoeff());
    p.linearity_error =
        std::max(p.linearity_error, (dm.seasonal - (a * d.seasonal + b * dy.seasonal)).cwiseAbs().maxCoeff());
  }
  return p;
}

TitansProbe titans_probe(Index dim, Index len, Index chunk, Scalar input_scale, std::uint64_t seed) {
  NoGradGuard no_grad;
  Rng rng(seed_mix(seed, 32));
  TitansSettings st;
  st.chunk = chunk;
  TitansProbe probe;
  const Matrix sk = random_matrix(len, dim, rng, input_scale);
  const Matrix sv = random_matrix(len, dim, rng, input_scale);
  const Matrix sm = random_matrix(len, dim, rng, input_scale);

  TitansHooks hooks;
  hooks.after_update = [&](Index, const TitansState& s) {
    for (const Matrix* m : {&s.key, &s.value, &s.main}) {
      probe.max_abs_fast_weight = std::max(probe.max_abs_fast_weight, m->cwiseAbs().maxCoeff());
    }
  };
  const Matrix first = fast_weight_memory(Tensor(sk), Tensor(sv), Tensor(sm), st, hooks).value();
  probe.clamp_held = probe.max_abs_fast_weight <= st.clamp;

  const Matrix again = fast_weight_memory(Tensor(sk), Tensor(sv), Tensor(sm), st).value();
  fast_weight_memory(Tensor(random_matrix(len, dim, rng)), Tensor(random_matrix(len, dim, rng)),
                     Tensor(random_matrix(len, dim, rng)), st);
  const Matrix after_other = fast_weight_memory(Tensor(sk), Tensor(sv), Tensor(sm), st).value();
  probe.fresh_state_reproducible = first == again && first == after_other;

  // Perturb one token inside an interior chunk.
  const Index c = std::min<Index>(1, (len - 1) / chunk);
  const Index token = c * chunk + std::min<Index>(chunk - 1, 1);
  Matrix sk2 = sk, sv2 = sv, sm2 = sm;
  sk2.row(token).array() += 0.5 * input_scale;
  sv2.row(token).array() -= 0.5 * input_scale;
  sm2.row(token).array() += 0.25 * input_scale;
  const Matrix changed = fast_weight_memory(Tensor(sk2), Tensor(sv2), Tensor(sm2), st).value();
  bool causal = true;
  const Index chunk_end = std::min(len, (c + 1) * chunk);
  for (Index t = 0; t < chunk_end; ++t) {
    if (t == token) continue;
    if (changed.row(t) != first.row(t)) causal = false;
  }
  if (chunk_end < len) {
    bool later_changed = false;
    for (Index t = chunk_end; t < std::min(len, chunk_end + chunk); ++t) {
      if (changed.row(t) != first.row(t)) later_changed = true;
    }
    causal = causal && later_changed;
  }
  probe.chunk_causal = causal;
  return probe;
}

CmsScheduleProbe cms_schedule_probe(const ModelConfig& cfg, int batches, std::uint64_t seed) {
  Rng rng(seed_mix(seed, 33));
  const Index d = cfg.embed_dim;
  const CmsParams params = make_cms(cfg, rng);
  for (const auto& level : params.levels) {
    Tensor gamma = level.norm.gamma;  // a fresh CMS emits zeros; open it up
    gamma.mutable_value().setOnes();
  }
  CmsState state = CmsState::zeros(cfg.cms_levels, d);
  CmsScheduleProbe probe;
  probe.eval_pure = true;
  const Matrix x = random_matrix(16, d, rng);
  for (int b = 0; b < batches; ++b) {
    const CmsState before = state;
    CmsOutput out;
    {
      NoGradGuard no_grad;
      out = cms_forward(Tensor(x), params, state);
    }
    if (!same_state_storage(before, state)) probe.eval_pure = false;
    try {
      cms_consolidate(state, out.level_means, cfg, false);
      probe.eval_pure = false;
    } catch (const ProtocolError&) {
    }
    if (!same_state_storage(before, state)) probe.eval_pure = false;
    cms_consolidate(state, out.level_means, cfg, true);
  }
  probe.update_counts = state.update_counts;
  for (int i = 0; i < cfg.cms_levels; ++i) probe.rates.push_back(consolidation_rate(cfg, i));
  return probe;
}

}  // namespace chronovae
