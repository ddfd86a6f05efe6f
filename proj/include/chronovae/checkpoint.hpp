#pragma once

#include <cstdint>
#include <string>

#include "chronovae/config.hpp"
#include "chronovae/model.hpp"

namespace chronovae {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelConfig model_cfg;
  TrainConfig train_cfg;
  ModelParams params;
  ModelState state;
};

/// Binary: magic, version, config text, named tensors with shapes, CMS
/// buffers. Also writes <path>.json describing the contents.
void save_checkpoint(const std::string& path, const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                     const ModelParams& params, const ModelState& state);

/// Throws DatasetError when the file is missing and ParseError when it is
/// truncated, has the wrong magic/version, or its tensors do not match the
/// stored configuration.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace chronovae
