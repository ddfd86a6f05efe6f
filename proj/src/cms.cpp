#include "chronovae/cms.hpp"

namespace chronovae {

CmsState CmsState::zeros(Index levels, Index dim) {
  CmsState s;
  s.memory.assign(static_cast<std::size_t>(levels), RowVector::Zero(dim));
  s.update_counts.assign(static_cast<std::size_t>(levels), 0);
  return s;
}

CmsParams make_cms(const ModelConfig& cfg, Rng& rng) {
  const Index d = cfg.embed_dim;
  CmsParams p;
  for (int i = 0; i < cfg.cms_levels; ++i) {
    CmsLevelParams level;
    level.mlp = make_mlp(d, d, d, rng);
    level.norm = make_layer_norm(d, 0.0);
    level.gate = make_linear(2 * d, d, rng);
    Tensor bias = level.gate.bias;
    bias.mutable_value().setZero();
    p.levels.push_back(std::move(level));
  }
  return p;
}

CmsOutput cms_forward(const Tensor& x, const CmsParams& p, const CmsState& s) {
  if (s.memory.size() != p.levels.size()) {
    throw DimensionError("cms_forward: state has " + std::to_string(s.memory.size()) +
                         " levels, params have " + std::to_string(p.levels.size()));
  }
  const Index len = x.rows();
  CmsOutput out;
  Tensor a = x;
  for (std::size_t i = 0; i < p.levels.size(); ++i) {
    const auto& level = p.levels[i];
    Tensor f = apply(level.norm, apply(level.mlp, a));
    Tensor memory = Tensor(Matrix(s.memory[i].replicate(len, 1)));
    Tensor g = sigmoid(apply(level.gate, concat_cols(f, memory)));
    a = a + hadamard(g, f) + hadamard(affine(g, -1.0, 1.0), memory);
    out.level_means.push_back(f.value().colwise().mean());
  }
  out.delta = a - x;
  return out;
}

Scalar consolidation_rate(const ModelConfig& cfg, Index level) {
  return cfg.cms_base_rate / static_cast<Scalar>(level + 1);
}

void cms_consolidate(CmsState& s, std::span<const RowVector> level_activations,
                     const ModelConfig& cfg, bool training) {
  if (!training) throw ProtocolError("cms_consolidate called outside training");
  if (level_activations.size() != s.memory.size() ||
      cfg.cms_freqs.size() != s.memory.size()) {
    throw DimensionError("cms_consolidate: level count mismatch");
  }
  const std::uint64_t tick = s.batch_counter;
  ++s.batch_counter;
  for (std::size_t i = 0; i < s.memory.size(); ++i) {
    const auto freq = static_cast<std::uint64_t>(cfg.cms_freqs[i]);
    if (tick % freq != 0) continue;
    const Scalar rho = consolidation_rate(cfg, static_cast<Index>(i));
    s.memory[i] = (1.0 - rho) * s.memory[i] + rho * level_activations[i];
    ++s.update_counts[i];
  }
}

void collect(const std::string& prefix, const CmsParams& p, ParamList& out) {
  for (std::size_t i = 0; i < p.levels.size(); ++i) {
    const std::string name = prefix + ".level" + std::to_string(i);
    collect(name + ".mlp", p.levels[i].mlp, out);
    collect(name + ".norm", p.levels[i].norm, out);
    collect(name + ".gate", p.levels[i].gate, out);
  }
}

}  // namespace chronovae
