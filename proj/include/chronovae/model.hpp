#pragma once

#include <utility>
#include <vector>

#include "chronovae/hope.hpp"
#include "chronovae/stem.hpp"

namespace chronovae {

inline constexpr Scalar kLogvarBound = 10.0;

/// Factorized Gaussian posterior; every field is 1 x Z.
struct LatentPosterior {
  Tensor mu_t;
  Tensor logvar_t;
  Tensor mu_s;
  Tensor logvar_s;
};

struct ModelParams {
  StemParams stem;
  std::vector<HopeBlockParams> encoder;
  Linear mu_t_head;
  Linear logvar_t_head;
  Linear mu_s_head;
  Linear logvar_s_head;
  Mlp trend_decoder;        // Z -> 2Z -> L
  Linear seasonal_expand;   // Z -> L * D
  std::vector<HopeBlockParams> seasonal_blocks;
  Linear seasonal_head;     // D -> 1
  Linear mtsm_head;         // D -> 1

  /// Every trainable tensor under its canonical name, in a fixed order.
  ParamList parameters() const;
};

/// Per-block CMS memories (encoder blocks, then seasonal decoder blocks).
struct ModelState {
  std::vector<CmsState> encoder;
  std::vector<CmsState> decoder;
};

/// Records or replays the fast-weight trajectory of every HOPE block.
/// Block b < n_encoder_blocks is encoder block b; the rest are decoder blocks.
struct FastWeightTape {
  enum class Mode { kRecord, kReplay };
  Mode mode = Mode::kRecord;
  std::vector<FastWeightTrace> blocks;
};

struct ForwardOptions {
  bool training = false;
  Rng* rng = nullptr;  // required when training
  FastWeightTape* tape = nullptr;
};

struct Encoded {
  Tensor hidden;  // H, L x D
  LatentPosterior posterior;
  std::vector<std::vector<RowVector>> level_means;  // per encoder block
};

struct Decoded {
  Tensor trend;           // L x 1
  Tensor seasonal;        // L x 1
  Tensor reconstruction;  // trend + seasonal
  std::vector<std::vector<RowVector>> level_means;  // per decoder block
};

struct ModelOutput {
  Tensor trend;
  Tensor seasonal;
  Tensor reconstruction;
  Tensor mtsm_pred;  // L x 1
  Tensor z_t;
  Tensor z_s;
  Tensor hidden;
  LatentPosterior posterior;
  std::vector<std::vector<RowVector>> encoder_level_means;
  std::vector<std::vector<RowVector>> decoder_level_means;
};

ModelParams make_model(const ModelConfig& cfg, Rng& rng);
ModelState make_model_state(const ModelConfig& cfg);

Encoded encode(const Tensor& x, const ModelParams& p, const ModelState& s, const ModelConfig& cfg,
               const ForwardOptions& opts = {});

/// (mu_t, mu_s) when deterministic, else mu + eps * exp(logvar / 2).
std::pair<Tensor, Tensor> reparameterize(const LatentPosterior& post, Rng& rng, bool deterministic);

Decoded decode(const Tensor& z_t, const Tensor& z_s, const ModelParams& p, const ModelState& s,
               const ModelConfig& cfg, const ForwardOptions& opts = {});

/// encode -> reparameterize (sampled only when training) -> decode, plus the
/// per-timestep MTSM prediction from H.
ModelOutput forward(const Tensor& x_masked, const ModelParams& p, const ModelState& s,
                    const ModelConfig& cfg, const ForwardOptions& opts = {});

/// Deterministic embedding [mu_t || mu_s] (1 x 2Z); builds no graph.
RowVector embed(const Matrix& x, const ModelParams& p, const ModelState& s, const ModelConfig& cfg);

}  // namespace chronovae
