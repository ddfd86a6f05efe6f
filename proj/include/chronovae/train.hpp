#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "chronovae/config.hpp"
#include "chronovae/data.hpp"
#include "chronovae/loss.hpp"
#include "chronovae/model.hpp"

namespace chronovae {

struct EpochRecord {
  int epoch = 0;  // 1-based
  LossBreakdown loss;  // means over the epoch's batches
  double seconds = 0.0;
  /// Cumulative consolidations: [block][level], encoder blocks first.
  std::vector<std::vector<std::uint64_t>> consolidations;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;

  /// FNV-1a over every field except wall time.
  std::uint64_t checksum() const;
  /// epoch,recon,kl,mtsm,total,seconds
  void write_csv(const std::string& path) const;
};

/// Improvement means best - loss > min_delta, strictly.
struct EarlyStopper {
  Scalar best = std::numeric_limits<Scalar>::infinity();
  int patience = 5;
  Scalar min_delta = 0.5;
  int stale_epochs = 0;
};

/// Returns true when training should stop (stale_epochs reached patience).
bool early_stop_update(EarlyStopper& es, Scalar loss);

struct PretrainOptions {
  /// Called after every epoch with the live model.
  std::function<void(const EpochRecord&, const ModelParams&, const ModelState&)> on_epoch;
  bool verbose = false;
};

struct PretrainResult {
  ModelParams params;
  ModelState state;
  TrainLog log;
  int best_epoch = 0;  // 0 when no epoch ran
};

/// Masked self-supervised pre-training. Series of any length; each epoch
/// crops/pads them to cfg.seq_len. Returns the lowest-loss snapshot.
/// A non-finite batch loss throws NumericError with the batch diagnostics.
PretrainResult pretrain(const std::vector<Matrix>& corpus, const ModelConfig& model_cfg,
                        const TrainConfig& train_cfg, const PretrainOptions& options = {});

}  // namespace chronovae
