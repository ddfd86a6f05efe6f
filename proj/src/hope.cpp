#include "chronovae/hope.hpp"

namespace chronovae {

HopeBlockParams make_hope_block(const ModelConfig& cfg, Rng& rng) {
  HopeBlockParams p;
  p.ln1 = make_layer_norm(cfg.embed_dim);
  p.ln2 = make_layer_norm(cfg.embed_dim);
  p.titans = make_titans(cfg.embed_dim, rng);
  p.cms = make_cms(cfg, rng);
  p.dropout_p = cfg.dropout_p;
  return p;
}

HopeOutput hope_forward(const Tensor& x, const HopeBlockParams& p, const CmsState& cms_state,
                        const TitansSettings& settings, bool training, Rng& rng,
                        const TitansHooks& hooks) {
  Tensor mid = x + dropout(titans_forward(apply(p.ln1, x), p.titans, settings, hooks),
                           p.dropout_p, training, rng);
  CmsOutput cms = cms_forward(apply(p.ln2, mid), p.cms, cms_state);
  HopeOutput out;
  out.output = mid + dropout(cms.delta, p.dropout_p, training, rng);
  out.level_means = std::move(cms.level_means);
  return out;
}

void collect(const std::string& prefix, const HopeBlockParams& p, ParamList& out) {
  collect(prefix + ".ln1", p.ln1, out);
  collect(prefix + ".ln2", p.ln2, out);
  collect(prefix + ".titans", p.titans, out);
  collect(prefix + ".cms", p.cms, out);
}

}  // namespace chronovae
