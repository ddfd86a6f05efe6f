#include "chronovae/model.hpp"

namespace chronovae {

namespace {

Rng& rng_or(const ForwardOptions& opts, Rng& fallback) {
  if (opts.training && opts.rng == nullptr) {
    throw ProtocolError("training-mode forward requires an rng");
  }
  return opts.rng ? *opts.rng : fallback;
}

TitansHooks hooks_for(const ForwardOptions& opts, std::size_t block) {
  TitansHooks hooks;
  if (opts.tape == nullptr) return hooks;
  auto& blocks = opts.tape->blocks;
  if (opts.tape->mode == FastWeightTape::Mode::kRecord) {
    if (blocks.size() <= block) blocks.resize(block + 1);
    hooks.record = &blocks[block];
  } else {
    if (blocks.size() <= block) throw ProtocolError("fast-weight tape missing block " + std::to_string(block));
    hooks.replay = &blocks[block];
  }
  return hooks;
}

Tensor head(const Linear& l, const Tensor& h) { return apply(l, h); }

}  // namespace

ParamList ModelParams::parameters() const {
  ParamList out;
  collect("stem", stem, out);
  for (std::size_t i = 0; i < encoder.size(); ++i) collect("encoder." + std::to_string(i), encoder[i], out);
  collect("heads.mu_t", mu_t_head, out);
  collect("heads.logvar_t", logvar_t_head, out);
  collect("heads.mu_s", mu_s_head, out);
  collect("heads.logvar_s", logvar_s_head, out);
  collect("trend_decoder", trend_decoder, out);
  collect("seasonal_expand", seasonal_expand, out);
  for (std::size_t i = 0; i < seasonal_blocks.size(); ++i) {
    collect("seasonal_decoder." + std::to_string(i), seasonal_blocks[i], out);
  }
  collect("seasonal_head", seasonal_head, out);
  collect("mtsm_head", mtsm_head, out);
  return out;
}

ModelParams make_model(const ModelConfig& cfg, Rng& rng) {
  const Index d = cfg.embed_dim;
  const Index z = cfg.latent_dim;
  const Index len = cfg.seq_len;
  ModelParams p;
  p.stem = make_stem(cfg, rng);
  for (int i = 0; i < cfg.n_encoder_blocks; ++i) p.encoder.push_back(make_hope_block(cfg, rng));
  p.mu_t_head = make_linear(d, z, rng);
  p.logvar_t_head = make_linear(d, z, rng);
  p.mu_s_head = make_linear(d, z, rng);
  p.logvar_s_head = make_linear(d, z, rng);
  p.trend_decoder = make_mlp(z, 2 * z, len, rng);
  p.seasonal_expand = make_linear(z, len * d, rng);
  for (int i = 0; i < cfg.n_seasonal_decoder_blocks; ++i) {
    p.seasonal_blocks.push_back(make_hope_block(cfg, rng));
  }
  p.seasonal_head = make_linear(d, 1, rng);
  p.mtsm_head = make_linear(d, 1, rng);
  return p;
}

ModelState make_model_state(const ModelConfig& cfg) {
  ModelState s;
  s.encoder.assign(static_cast<std::size_t>(cfg.n_encoder_blocks),
                   CmsState::zeros(cfg.cms_levels, cfg.embed_dim));
  s.decoder.assign(static_cast<std::size_t>(cfg.n_seasonal_decoder_blocks),
                   CmsState::zeros(cfg.cms_levels, cfg.embed_dim));
  return s;
}

Encoded encode(const Tensor& x, const ModelParams& p, const ModelState& s, const ModelConfig& cfg,
               const ForwardOptions& opts) {
  Rng fallback;
  Rng& rng = rng_or(opts, fallback);
  if (s.encoder.size() != p.encoder.size()) throw DimensionError("encode: state/block count mismatch");
  const TitansSettings settings = TitansSettings::from(cfg);

  Encoded out;
  Tensor h = stem_forward(x, p.stem, opts.training, rng);
  for (std::size_t b = 0; b < p.encoder.size(); ++b) {
    HopeOutput block = hope_forward(h, p.encoder[b], s.encoder[b], settings, opts.training, rng,
                                    hooks_for(opts, b));
    h = block.output;
    out.level_means.push_back(std::move(block.level_means));
  }
  out.hidden = h;
  Tensor pooled = adaptive_avg_pool_time(h);
  out.posterior.mu_t = head(p.mu_t_head, pooled);
  out.posterior.logvar_t = clamp(head(p.logvar_t_head, pooled), -kLogvarBound, kLogvarBound);
  out.posterior.mu_s = head(p.mu_s_head, pooled);
  out.posterior.logvar_s = clamp(head(p.logvar_s_head, pooled), -kLogvarBound, kLogvarBound);
  return out;
}

std::pair<Tensor, Tensor> reparameterize(const LatentPosterior& post, Rng& rng, bool deterministic) {
  if (deterministic) return {post.mu_t, post.mu_s};
  auto sample = [&rng](const Tensor& mu, const Tensor& logvar) {
    Matrix eps(mu.rows(), mu.cols());
    for (Index i = 0; i < eps.size(); ++i) eps.data()[i] = rng.normal();
    return mu + hadamard(Tensor(std::move(eps)), exp(affine(logvar, 0.5, 0.0)));
  };
  Tensor z_t = sample(post.mu_t, post.logvar_t);
  Tensor z_s = sample(post.mu_s, post.logvar_s);
  return {z_t, z_s};
}

Decoded decode(const Tensor& z_t, const Tensor& z_s, const ModelParams& p, const ModelState& s,
               const ModelConfig& cfg, const ForwardOptions& opts) {
  Rng fallback;
  Rng& rng = rng_or(opts, fallback);
  if (s.decoder.size() != p.seasonal_blocks.size()) {
    throw DimensionError("decode: state/block count mismatch");
  }
  const Index len = cfg.seq_len;
  const Index d = cfg.embed_dim;
  const TitansSettings settings = TitansSettings::from(cfg);

  Decoded out;
  out.trend = reshape(apply(p.trend_decoder, z_t), len, 1);

  Tensor h = reshape(apply(p.seasonal_expand, z_s), len, d);
  for (std::size_t b = 0; b < p.seasonal_blocks.size(); ++b) {
    HopeOutput block = hope_forward(h, p.seasonal_blocks[b], s.decoder[b], settings, opts.training,
                                    rng, hooks_for(opts, p.encoder.size() + b));
    h = block.output;
    out.level_means.push_back(std::move(block.level_means));
  }
  out.seasonal = apply(p.seasonal_head, h);
  out.reconstruction = out.trend + out.seasonal;
  return out;
}

ModelOutput forward(const Tensor& x_masked, const ModelParams& p, const ModelState& s,
                    const ModelConfig& cfg, const ForwardOptions& opts) {
  if (x_masked.rows() != cfg.seq_len) {
    throw DimensionError("forward: series length " + std::to_string(x_masked.rows()) +
                         " differs from seq_len " + std::to_string(cfg.seq_len));
  }
  Rng fallback;
  Rng& rng = rng_or(opts, fallback);

  Encoded enc = encode(x_masked, p, s, cfg, opts);
  auto [z_t, z_s] = reparameterize(enc.posterior, rng, !opts.training);
  Decoded dec = decode(z_t, z_s, p, s, cfg, opts);

  ModelOutput out;
  out.trend = dec.trend;
  out.seasonal = dec.seasonal;
  out.reconstruction = dec.reconstruction;
  out.mtsm_pred = apply(p.mtsm_head, enc.hidden);
  out.z_t = z_t;
  out.z_s = z_s;
  out.hidden = enc.hidden;
  out.posterior = enc.posterior;
  out.encoder_level_means = std::move(enc.level_means);
  out.decoder_level_means = std::move(dec.level_means);
  return out;
}

RowVector embed(const Matrix& x, const ModelParams& p, const ModelState& s, const ModelConfig& cfg) {
  NoGradGuard no_grad;
  Encoded enc = encode(Tensor(x), p, s, cfg, {});
  const Index z = cfg.latent_dim;
  RowVector e(2 * z);
  e << enc.posterior.mu_t.value().row(0), enc.posterior.mu_s.value().row(0);
  return e;
}

}  // namespace chronovae
