#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "chronovae/config.hpp"
#include "chronovae/layers.hpp"

namespace chronovae {

struct CmsLevelParams {
  Mlp mlp;               // D -> D -> D
  LayerNormParams norm;  // applied to the MLP output
  Linear gate;           // [f || m] (2D) -> D
};

struct CmsParams {
  std::vector<CmsLevelParams> levels;
};

/// Long-term memory of one CMS: a snapshot per level plus the batch clock.
/// Survives across batches and is serialized with checkpoints.
struct CmsState {
  std::vector<RowVector> memory;
  std::uint64_t batch_counter = 0;
  std::vector<std::uint64_t> update_counts;

  static CmsState zeros(Index levels, Index dim);
};

struct CmsOutput {
  /// Sum of the level contributions; the caller's residual adds the input.
  Tensor delta;
  /// Time-mean of each level's fast activation f, for consolidation.
  std::vector<RowVector> level_means;
};

/// Level norms start with gamma = 0 so a fresh CMS contributes nothing.
CmsParams make_cms(const ModelConfig& cfg, Rng& rng);

/// Sequential levels with a per-level residual:
///   f = LN(mlp(a)), g = sigmoid(gate([f || m_i])),
///   a <- a + g * f + (1 - g) * m_i.
/// Returns a_final - x. Snapshots enter as constants and are never mutated.
CmsOutput cms_forward(const Tensor& x, const CmsParams& p, const CmsState& s);

/// EMA rate of level i: base / (i + 1).
Scalar consolidation_rate(const ModelConfig& cfg, Index level);

/// One training-batch tick. batch_counter advances; each level whose
/// frequency divides the pre-increment counter moves its snapshot toward the
/// supplied mean activation. Throws ProtocolError outside training.
void cms_consolidate(CmsState& s, std::span<const RowVector> level_activations,
                     const ModelConfig& cfg, bool training);

void collect(const std::string& prefix, const CmsParams& p, ParamList& out);

}  // namespace chronovae
