#pragma once

#include <vector>

#include "chronovae/decomp.hpp"
#include "chronovae/model.hpp"

namespace chronovae {

/// Timestep mask; true marks a position zeroed before the encoder.
using Mask = std::vector<bool>;

struct LossBreakdown {
  Scalar recon = 0.0;
  Scalar kl = 0.0;
  Scalar mtsm = 0.0;
  Scalar total = 0.0;
};

struct LossWeights {
  Scalar lambda_kl = 0.01;
  Scalar lambda_mtsm = 0.5;

  static LossWeights from(const ModelConfig& cfg) { return {cfg.lambda_kl, cfg.lambda_mtsm}; }
};

/// (1/L) sum_t (trend_hat - trend)^2 + (seasonal_hat - seasonal)^2 for one series.
Tensor recon_loss(const Tensor& trend_hat, const Tensor& seasonal_hat, const Decomposition& target);
inline Tensor recon_loss(const ModelOutput& out, const Decomposition& target) {
  return recon_loss(out.trend, out.seasonal, target);
}

/// Branch terms of recon_loss, each (1/L) sum of squares.
Tensor trend_branch_loss(const Tensor& trend_hat, const Decomposition& target);
Tensor seasonal_branch_loss(const Tensor& seasonal_hat, const Decomposition& target);

/// Gaussian KL to N(0, I), summed over both latent factors and dimensions.
Tensor kl_loss(const LatentPosterior& post);

/// Sum of squared errors over masked positions.
Tensor masked_sse(const Tensor& pred, const Matrix& target, const Mask& mask);
std::size_t masked_count(const Mask& mask);
/// Mean squared error over masked positions; 0 when nothing is masked.
Tensor mtsm_loss(const Tensor& pred, const Matrix& target, const Mask& mask);

/// recon + lambda_kl * kl + lambda_mtsm * mtsm, with the breakdown values.
struct WeightedLoss {
  Tensor total;
  LossBreakdown breakdown;
};
WeightedLoss total_loss(const Tensor& recon, const Tensor& kl, const Tensor& mtsm,
                        const LossWeights& w);

/// One series' share of a batch objective: recon and kl are averaged over the
/// batch, the MTSM error is pooled over every masked position in the batch.
WeightedLoss batch_member_loss(const ModelOutput& out, const Decomposition& target,
                               const Matrix& clean, const Mask& mask, std::size_t batch_size,
                               std::size_t batch_masked_total, const LossWeights& w);

}  // namespace chronovae
