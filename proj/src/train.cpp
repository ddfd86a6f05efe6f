#include "chronovae/train.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>
#include <algorithm>

#include "chronovae/adam.hpp"
#include "chronovae/checksum.hpp"

namespace chronovae {

namespace {

using LevelSums = std::vector<std::vector<RowVector>>;

void add_means(LevelSums& sums, const std::vector<std::vector<RowVector>>& means, Scalar w) {
  if (sums.empty()) {
    for (const auto& block : means) {
      std::vector<RowVector> zeros;
      for (const auto& level : block) zeros.push_back(RowVector::Zero(level.size()));
      sums.push_back(std::move(zeros));
    }
  }
  for (std::size_t b = 0; b < means.size(); ++b) {
    for (std::size_t l = 0; l < means[b].size(); ++l) sums[b][l] += w * means[b][l];
  }
}

std::vector<std::vector<std::uint64_t>> consolidation_counts(const ModelState& s) {
  std::vector<std::vector<std::uint64_t>> out;
  for (const auto& c : s.encoder) out.push_back(c.update_counts);
  for (const auto& c : s.decoder) out.push_back(c.update_counts);
  return out;
}

std::string describe(const LossBreakdown& b) {
  std::ostringstream os;
  os << "recon=" << b.recon << " kl=" << b.kl << " mtsm=" << b.mtsm << " total=" << b.total;
  return os.str();
}

}  // namespace

std::uint64_t TrainLog::checksum() const {
  Fnv1a h;
  for (const auto& e : epochs) {
    h.add(e.epoch);
    h.add(e.loss.recon);
    h.add(e.loss.kl);
    h.add(e.loss.mtsm);
    h.add(e.loss.total);
    for (const auto& block : e.consolidations) {
      for (auto c : block) h.add(c);
    }
  }
  return h.value();
}

void TrainLog::write_csv(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw Error("cannot write train log '" + path + "'");
  f << "epoch,recon,kl,mtsm,total,seconds\n" << std::setprecision(17);
  for (const auto& e : epochs) {
    f << e.epoch << ',' << e.loss.recon << ',' << e.loss.kl << ',' << e.loss.mtsm << ','
      << e.loss.total << ',' << e.seconds << '\n';
  }
}

bool early_stop_update(EarlyStopper& es, Scalar loss) {
  if (es.best - loss > es.min_delta) {
    es.best = loss;
    es.stale_epochs = 0;
  } else {
    ++es.stale_epochs;
  }
  return es.stale_epochs >= es.patience;
}

PretrainResult pretrain(const std::vector<Matrix>& corpus, const ModelConfig& cfg,
                        const TrainConfig& tcfg, const PretrainOptions& options) {
  if (auto errs = validate(cfg); !errs.empty()) throw ConfigError("model config: " + errs.front());
  if (auto errs = validate(tcfg); !errs.empty()) throw ConfigError("train config: " + errs.front());
  if (corpus.empty()) throw DatasetError("pretrain: empty corpus");

  Rng init_rng(seed_mix(tcfg.seed, 1));
  Rng rng(seed_mix(tcfg.seed, 2));

  PretrainResult result;
  result.params = make_model(cfg, init_rng);
  result.state = make_model_state(cfg);
  ModelParams& params = result.params;
  ModelState& state = result.state;
  const ParamList plist = params.parameters();

  AdamState adam = make_adam(plist, AdamOptions{tcfg.lr});
  EarlyStopper stopper{std::numeric_limits<Scalar>::infinity(), tcfg.pretrain_patience,
                       tcfg.pretrain_min_delta, 0};
  const LossWeights weights = LossWeights::from(cfg);

  std::vector<Matrix> best_values = snapshot(plist);
  ModelState best_state = state;
  Scalar best_loss = std::numeric_limits<Scalar>::infinity();

  const std::size_t batch_size = static_cast<std::size_t>(tcfg.batch_size);
  std::vector<std::size_t> order(corpus.size());
  std::size_t batch_index = 0;

  for (int epoch = 1; epoch <= tcfg.max_epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng.engine());

    LossBreakdown epoch_sum;
    std::size_t n_batches = 0;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t end = std::min(order.size(), start + batch_size);
      std::vector<Matrix> windows;
      for (std::size_t i = start; i < end; ++i) {
        windows.push_back(window_for_epoch(corpus[order[i]], cfg.seq_len, rng));
      }
      SeriesBatch batch = make_batch(windows, cfg.mask_ratio, cfg.decomp_kernel, rng);
      const std::size_t masked_total = batch.masked_total();
      const Scalar inv_b = 1.0 / static_cast<Scalar>(batch.size());

      LossBreakdown batch_loss;
      LevelSums enc_means;
      LevelSums dec_means;
      for (std::size_t i = 0; i < batch.size(); ++i) {
        ForwardOptions opts;
        opts.training = true;
        opts.rng = &rng;
        ModelOutput out = forward(Tensor(batch.x_masked[i]), params, state, cfg, opts);
        WeightedLoss wl = batch_member_loss(out, batch.targets[i], batch.x[i], batch.mask[i],
                                            batch.size(), masked_total, weights);
        if (!std::isfinite(wl.breakdown.total)) {
          throw NumericError("pretrain: non-finite loss at epoch " + std::to_string(epoch) +
                             ", batch " + std::to_string(batch_index) + ", member " +
                             std::to_string(i) + " (" + describe(wl.breakdown) + ")");
        }
        wl.total.backward();
        batch_loss.recon += wl.breakdown.recon;
        batch_loss.kl += wl.breakdown.kl;
        batch_loss.mtsm += wl.breakdown.mtsm;
        add_means(enc_means, out.encoder_level_means, inv_b);
        add_means(dec_means, out.decoder_level_means, inv_b);
      }
      batch_loss.total = batch_loss.recon + weights.lambda_kl * batch_loss.kl +
                         weights.lambda_mtsm * batch_loss.mtsm;

      clip_grad_norm(plist, tcfg.grad_clip);
      adam_step(plist, adam);
      zero_grad(plist);
      for (std::size_t b = 0; b < state.encoder.size(); ++b) {
        cms_consolidate(state.encoder[b], enc_means[b], cfg, true);
      }
      for (std::size_t b = 0; b < state.decoder.size(); ++b) {
        cms_consolidate(state.decoder[b], dec_means[b], cfg, true);
      }

      epoch_sum.recon += batch_loss.recon;
      epoch_sum.kl += batch_loss.kl;
      epoch_sum.mtsm += batch_loss.mtsm;
      ++n_batches;
      ++batch_index;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    const Scalar inv_n = 1.0 / static_cast<Scalar>(n_batches);
    rec.loss.recon = epoch_sum.recon * inv_n;
    rec.loss.kl = epoch_sum.kl * inv_n;
    rec.loss.mtsm = epoch_sum.mtsm * inv_n;
    rec.loss.total =
        rec.loss.recon + weights.lambda_kl * rec.loss.kl + weights.lambda_mtsm * rec.loss.mtsm;
    rec.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    rec.consolidations = consolidation_counts(state);
    result.log.epochs.push_back(rec);

    if (options.verbose) {
      std::cerr << "epoch " << epoch << " " << describe(rec.loss) << " (" << rec.seconds << " s)\n";
    }
    if (options.on_epoch) options.on_epoch(rec, params, state);

    if (rec.loss.total < best_loss) {
      best_loss = rec.loss.total;
      best_values = snapshot(plist);
      best_state = state;
      result.best_epoch = epoch;
    }
    if (early_stop_update(stopper, rec.loss.total)) break;
  }

  restore(plist, best_values);
  state = best_state;
  return result;
}

}  // namespace chronovae
