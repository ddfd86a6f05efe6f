#include "chronovae/loss.hpp"

#include <algorithm>

namespace chronovae {

namespace {

void require_series(const Tensor& t, const Matrix& target, const char* what) {
  if (t.rows() != target.rows() || t.cols() != target.cols()) {
    throw DimensionError(std::string(what) + ": prediction and target shapes differ");
  }
}

Tensor mean_squared(const Tensor& pred, const Matrix& target) {
  return affine(sum(square(pred - Tensor(target))), 1.0 / static_cast<Scalar>(pred.rows()), 0.0);
}

Matrix mask_matrix(const Mask& mask) {
  Matrix m(static_cast<Index>(mask.size()), 1);
  for (std::size_t i = 0; i < mask.size(); ++i) m(static_cast<Index>(i), 0) = mask[i] ? 1.0 : 0.0;
  return m;
}

}  // namespace

Tensor trend_branch_loss(const Tensor& trend_hat, const Decomposition& target) {
  require_series(trend_hat, target.trend, "recon_loss");
  return mean_squared(trend_hat, target.trend);
}

Tensor seasonal_branch_loss(const Tensor& seasonal_hat, const Decomposition& target) {
  require_series(seasonal_hat, target.seasonal, "recon_loss");
  return mean_squared(seasonal_hat, target.seasonal);
}

Tensor recon_loss(const Tensor& trend_hat, const Tensor& seasonal_hat, const Decomposition& target) {
  return trend_branch_loss(trend_hat, target) + seasonal_branch_loss(seasonal_hat, target);
}

Tensor kl_loss(const LatentPosterior& post) {
  auto term = [](const Tensor& mu, const Tensor& logvar) {
    // -1/2 sum(1 + logvar - mu^2 - exp(logvar))
    Tensor inner = affine(logvar, 1.0, 1.0) - square(mu) - exp(logvar);
    return affine(sum(inner), -0.5, 0.0);
  };
  return term(post.mu_t, post.logvar_t) + term(post.mu_s, post.logvar_s);
}

std::size_t masked_count(const Mask& mask) {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
}

Tensor masked_sse(const Tensor& pred, const Matrix& target, const Mask& mask) {
  require_series(pred, target, "mtsm_loss");
  if (static_cast<Index>(mask.size()) != pred.rows()) {
    throw DimensionError("mtsm_loss: mask length differs from series length");
  }
  return sum(hadamard(square(pred - Tensor(target)), Tensor(mask_matrix(mask))));
}

Tensor mtsm_loss(const Tensor& pred, const Matrix& target, const Mask& mask) {
  Tensor sse = masked_sse(pred, target, mask);
  const std::size_t n = masked_count(mask);
  if (n == 0) return affine(sse, 0.0, 0.0);
  return affine(sse, 1.0 / static_cast<Scalar>(n), 0.0);
}

WeightedLoss total_loss(const Tensor& recon, const Tensor& kl, const Tensor& mtsm,
                        const LossWeights& w) {
  WeightedLoss out;
  out.total = recon + affine(kl, w.lambda_kl, 0.0) + affine(mtsm, w.lambda_mtsm, 0.0);
  out.breakdown.recon = recon.item();
  out.breakdown.kl = kl.item();
  out.breakdown.mtsm = mtsm.item();
  out.breakdown.total = out.total.item();
  return out;
}

WeightedLoss batch_member_loss(const ModelOutput& out, const Decomposition& target,
                               const Matrix& clean, const Mask& mask, std::size_t batch_size,
                               std::size_t batch_masked_total, const LossWeights& w) {
  const Scalar inv_batch = 1.0 / static_cast<Scalar>(batch_size);
  const Scalar inv_masked =
      batch_masked_total == 0 ? 0.0 : 1.0 / static_cast<Scalar>(batch_masked_total);
  Tensor recon = affine(recon_loss(out, target), inv_batch, 0.0);
  Tensor kl = affine(kl_loss(out.posterior), inv_batch, 0.0);
  Tensor mtsm = affine(masked_sse(out.mtsm_pred, clean, mask), inv_masked, 0.0);
  return total_loss(recon, kl, mtsm, w);
}

}  // namespace chronovae
