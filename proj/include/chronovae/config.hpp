#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace chronovae {

struct ModelConfig {
  int seq_len = 256;
  int embed_dim = 128;
  int latent_dim = 64;
  int n_encoder_blocks = 3;
  int n_seasonal_decoder_blocks = 2;
  int titans_chunk = 32;
  double titans_alpha = 0.99;
  double titans_eta = 0.01;
  double titans_clamp = 5.0;
  int cms_levels = 4;
  std::vector<int> cms_freqs = {1, 4, 16, 64};
  double cms_base_rate = 0.1;
  int decomp_kernel = 25;
  double dropout_p = 0.1;
  double mask_ratio = 0.2;
  double lambda_kl = 0.01;
  double lambda_mtsm = 0.5;
  int stem_kernel = 7;
  int max_len = 512;
};

struct TrainConfig {
  double lr = 1e-3;
  int batch_size = 256;
  int max_epochs = 300;
  int pretrain_patience = 5;
  double pretrain_min_delta = 0.5;
  int cls_patience = 10;
  double cls_min_delta = 1e-3;
  int classifier_hidden = 128;
  double grad_clip = 1.0;
  std::uint64_t seed = 0;
};

/// All violations at once; empty means valid.
std::vector<std::string> validate(const ModelConfig& cfg);
std::vector<std::string> validate(const TrainConfig& cfg);

/// Flat key=value text. '#' starts a comment; lists are comma separated.
/// Unknown keys and malformed values throw ConfigError.
void apply_config_text(const std::string& text, ModelConfig& model, TrainConfig& train);
void load_config_file(const std::string& path, ModelConfig& model, TrainConfig& train);
/// Sets one key (the same names the file uses).
void set_config_value(const std::string& key, const std::string& value, ModelConfig& model,
                      TrainConfig& train);

/// Canonical key=value serialization; apply_config_text round-trips it.
std::string to_config_text(const ModelConfig& model, const TrainConfig& train);

}  // namespace chronovae
