#include <gtest/gtest.h>

#include <set>

#include "chronovae/loss.hpp"
#include "chronovae/model.hpp"

using namespace chronovae;

namespace {

ModelConfig tiny() {
  ModelConfig cfg;
  cfg.seq_len = 48;
  cfg.max_len = 64;
  cfg.embed_dim = 8;
  cfg.latent_dim = 4;
  cfg.n_encoder_blocks = 2;
  cfg.n_seasonal_decoder_blocks = 1;
  cfg.titans_chunk = 16;
  cfg.decomp_kernel = 7;
  return cfg;
}

Matrix series(Index len, Rng& rng) {
  Matrix x(len, 1);
  for (Index t = 0; t < len; ++t) x(t, 0) = std::sin(0.3 * static_cast<double>(t)) + rng.normal(0, 0.2);
  return x;
}

// Gives every zero-initialised tensor random values so no path is trivially dead.
void wake(const ModelParams& p, Rng& rng) {
  for (NamedTensor nt : p.parameters()) {
    Matrix& v = nt.tensor.mutable_value();
    if (v.isZero(0.0)) {
      for (Index i = 0; i < v.size(); ++i) v.data()[i] = rng.normal(0.0, 0.3);
    }
  }
}

}  // namespace

TEST(Model, ParameterCountAtDefaults) {
  ModelConfig cfg;
  Rng rng(1);
  ModelParams p = make_model(cfg, rng);
  const Index d = 128, z = 64, len = 256, lmax = 512, k = 7;
  const Index linear_dd = d * d + d;
  const Index block = 4 * d                                    // two layer norms
                      + 3 * 2 * linear_dd + linear_dd          // slow MLPs, out_proj
                      + 4 * (2 * linear_dd + 2 * d + 2 * d * d + d);  // CMS levels
  const Index want = d * k + d + lmax * d + 5 * block + 4 * (d * z + z) + (z * 2 * z + 2 * z) +
                     (2 * z * len + len) + (z * len * d + len * d) + 2 * (d + 1);
  EXPECT_EQ(want, 4175106);
  EXPECT_EQ(parameter_count(p.parameters()), want);
}

TEST(Model, NamesAreUnique) {
  ModelConfig cfg = tiny();
  Rng rng(2);
  std::set<std::string> names;
  for (const auto& nt : make_model(cfg, rng).parameters()) EXPECT_TRUE(names.insert(nt.name).second) << nt.name;
  EXPECT_TRUE(names.count("encoder.1.titans.out_proj.weight"));
}

TEST(Model, OutputShapes) {
  ModelConfig cfg = tiny();
  Rng rng(3);
  ModelParams p = make_model(cfg, rng);
  ModelState s = make_model_state(cfg);
  ModelOutput out = forward(Tensor(series(48, rng)), p, s, cfg, {});
  EXPECT_EQ(out.trend.rows(), 48);
  EXPECT_EQ(out.trend.cols(), 1);
  EXPECT_EQ(out.seasonal.rows(), 48);
  EXPECT_EQ(out.reconstruction.rows(), 48);
  EXPECT_EQ(out.mtsm_pred.rows(), 48);
  EXPECT_EQ(out.hidden.rows(), 48);
  EXPECT_EQ(out.hidden.cols(), 8);
  for (const Tensor* t : {&out.posterior.mu_t, &out.posterior.logvar_t, &out.posterior.mu_s, &out.posterior.logvar_s}) {
    EXPECT_EQ(t->rows(), 1);
    EXPECT_EQ(t->cols(), 4);
  }
  EXPECT_EQ(out.encoder_level_means.size(), 2u);
  EXPECT_EQ(out.decoder_level_means.size(), 1u);
}

TEST(Model, EncodeShapesForShortSeries) {
  ModelConfig cfg = tiny();
  Rng rng(4);
  ModelParams p = make_model(cfg, rng);
  ModelState s = make_model_state(cfg);
  for (Index len : {1, 17, 64}) {
    Encoded e = encode(Tensor(series(len, rng)), p, s, cfg, {});
    EXPECT_EQ(e.posterior.mu_s.cols(), 4);
    EXPECT_EQ(e.hidden.rows(), len);
  }
  EXPECT_THROW(encode(Tensor(series(65, rng)), p, s, cfg, {}), DimensionError);
  EXPECT_THROW(forward(Tensor(series(40, rng)), p, s, cfg, {}), DimensionError);
}

TEST(Model, ReconstructionIsSumOfBranches) {
  ModelConfig cfg = tiny();
  Rng rng(5);
  ModelParams p = make_model(cfg, rng);
  wake(p, rng);
  ModelState s = make_model_state(cfg);
  Rng noise(6);
  ModelOutput out = forward(Tensor(series(48, rng)), p, s, cfg, {true, &noise});
  Matrix sum = out.trend.value() + out.seasonal.value();
  EXPECT_EQ(out.reconstruction.value(), sum);
}

TEST(Model, PathwaysAreSeparate) {
  ModelConfig cfg = tiny();
  Rng rng(7);
  ModelParams p = make_model(cfg, rng);
  wake(p, rng);
  ModelState s = make_model_state(cfg);
  for (int trial = 0; trial < 3; ++trial) {
    Tensor z_t(Matrix::Random(1, 4), true), z_s(Matrix::Random(1, 4), true);
    Decoded d = decode(z_t, z_s, p, s, cfg, {});
    sum(square(d.trend)).backward();
    EXPECT_FALSE(z_t.grad().isZero(0.0));
    EXPECT_TRUE(z_s.grad().isZero(0.0));

    Tensor a(Matrix::Random(1, 4), true), b(Matrix::Random(1, 4), true);
    Decoded e = decode(a, b, p, s, cfg, {});
    sum(square(e.seasonal)).backward();
    EXPECT_TRUE(a.grad().isZero(0.0));
    EXPECT_FALSE(b.grad().isZero(0.0));
  }
}

TEST(Model, EvalForwardDeterministic) {
  ModelConfig cfg = tiny();
  Rng rng(8);
  ModelParams p = make_model(cfg, rng);
  wake(p, rng);
  ModelState s = make_model_state(cfg);
  Matrix x = series(48, rng);
  ModelOutput a = forward(Tensor(x), p, s, cfg, {});
  ModelOutput b = forward(Tensor(x), p, s, cfg, {});
  EXPECT_EQ(a.reconstruction.value(), b.reconstruction.value());
  EXPECT_EQ(a.mtsm_pred.value(), b.mtsm_pred.value());
  EXPECT_EQ(a.z_t.value(), a.posterior.mu_t.value());
  EXPECT_EQ(a.z_s.value(), a.posterior.mu_s.value());
}

TEST(Model, TrainingForwardNeedsRng) {
  ModelConfig cfg = tiny();
  Rng rng(9);
  ModelParams p = make_model(cfg, rng);
  ModelState s = make_model_state(cfg);
  EXPECT_THROW(forward(Tensor(series(48, rng)), p, s, cfg, {true, nullptr}), ProtocolError);
}

TEST(Model, EmbedIsPosteriorMeans) {
  ModelConfig cfg = tiny();
  Rng rng(10);
  ModelParams p = make_model(cfg, rng);
  wake(p, rng);
  ModelState s = make_model_state(cfg);
  Matrix x = series(48, rng);
  RowVector e1 = embed(x, p, s, cfg);
  RowVector e2 = embed(x, p, s, cfg);
  ASSERT_EQ(e1.size(), 8);
  EXPECT_EQ(e1, e2);
  Encoded enc = encode(Tensor(x), p, s, cfg, {});
  EXPECT_EQ(RowVector(e1.head(4)), RowVector(enc.posterior.mu_t.value().row(0)));
  EXPECT_EQ(RowVector(e1.tail(4)), RowVector(enc.posterior.mu_s.value().row(0)));
}

TEST(Model, EncoderCausalAcrossChunks) {
  ModelConfig cfg = tiny();
  Rng rng(11);
  ModelParams p = make_model(cfg, rng);
  wake(p, rng);
  ModelState s = make_model_state(cfg);
  Matrix a = series(48, rng);
  Matrix b = a;
  b(40, 0) += 3.0;  // chunk 2; the stem reaches back to t=37
  Matrix ha = encode(Tensor(a), p, s, cfg, {}).hidden.value();
  Matrix hb = encode(Tensor(b), p, s, cfg, {}).hidden.value();
  EXPECT_EQ(ha.topRows(32), hb.topRows(32));
}

TEST(Model, ReparameterizeDeterministicAndStatistics) {
  LatentPosterior post{Tensor(Matrix::Zero(1, 3)), Tensor(Matrix::Zero(1, 3)), Tensor(Matrix::Ones(1, 3)),
                       Tensor(Matrix::Zero(1, 3))};
  Rng rng(12);
  auto [mt, ms] = reparameterize(post, rng, true);
  EXPECT_EQ(mt.value(), post.mu_t.value());
  EXPECT_EQ(ms.value(), post.mu_s.value());

  const int n = 10000;
  Matrix samples(n, 3);
  for (int i = 0; i < n; ++i) samples.row(i) = reparameterize(post, rng, false).first.value();
  RowVector mean = samples.colwise().mean();
  RowVector var = (samples.rowwise() - mean).array().square().colwise().mean();
  for (Index j = 0; j < 3; ++j) {
    EXPECT_NEAR(mean(j), 0.0, 0.05);
    EXPECT_NEAR(var(j), 1.0, 0.05);
  }
}

TEST(Model, VanishingVarianceSample) {
  Matrix mu(1, 2);
  mu << 0.3, -2.0;
  LatentPosterior post{Tensor(mu), Tensor(Matrix::Constant(1, 2, -10.0)), Tensor(mu),
                       Tensor(Matrix::Constant(1, 2, -10.0))};
  Rng rng(13);
  for (int i = 0; i < 100; ++i) {
    auto [zt, zs] = reparameterize(post, rng, false);
    EXPECT_LT((zt.value() - mu).cwiseAbs().maxCoeff(), 6 * std::exp(-5.0));
  }
}

TEST(Model, LogvarClamped) {
  ModelConfig cfg = tiny();
  Rng rng(14);
  ModelParams p = make_model(cfg, rng);
  ModelState s = make_model_state(cfg);
  Tensor b = p.logvar_t_head.bias;
  b.mutable_value().setConstant(1e3);
  Tensor c = p.logvar_s_head.bias;
  c.mutable_value().setConstant(-1e3);
  Encoded e = encode(Tensor(series(48, rng)), p, s, cfg, {});
  EXPECT_TRUE((e.posterior.logvar_t.value().array() == kLogvarBound).all());
  EXPECT_TRUE((e.posterior.logvar_s.value().array() == -kLogvarBound).all());
}
