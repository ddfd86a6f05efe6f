#pragma once

#include "chronovae/cms.hpp"
#include "chronovae/titans.hpp"

namespace chronovae {

struct HopeBlockParams {
  LayerNormParams ln1;
  LayerNormParams ln2;
  TitansParams titans;
  CmsParams cms;
  Scalar dropout_p = 0.1;
};

struct HopeOutput {
  Tensor output;
  std::vector<RowVector> level_means;  // from the block's CMS
};

/// Both sub-modules start silent, so a fresh block is the identity.
HopeBlockParams make_hope_block(const ModelConfig& cfg, Rng& rng);

/// x' = x + dropout(titans(ln1(x))); x'' = x' + dropout(cms(ln2(x'))).
HopeOutput hope_forward(const Tensor& x, const HopeBlockParams& p, const CmsState& cms_state,
                        const TitansSettings& settings, bool training, Rng& rng,
                        const TitansHooks& hooks = {});

void collect(const std::string& prefix, const HopeBlockParams& p, ParamList& out);

}  // namespace chronovae
