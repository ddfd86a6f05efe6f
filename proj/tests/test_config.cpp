#include <gtest/gtest.h>

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "chronovae/config.hpp"
#include "chronovae/error.hpp"

using namespace chronovae;

namespace {

bool mentions(const std::vector<std::string>& errors, const std::string& needle) {
  return std::any_of(errors.begin(), errors.end(),
                     [&](const std::string& e) { return e.find(needle) != std::string::npos; });
}

}  // namespace

TEST(Config, DefaultsMatchPublishedValues) {
  ModelConfig m;
  TrainConfig t;
  EXPECT_EQ(m.seq_len, 256);
  EXPECT_EQ(m.embed_dim, 128);
  EXPECT_EQ(m.n_encoder_blocks, 3);
  EXPECT_EQ(m.titans_chunk, 32);
  EXPECT_DOUBLE_EQ(m.titans_alpha, 0.99);
  EXPECT_DOUBLE_EQ(m.titans_eta, 0.01);
  EXPECT_DOUBLE_EQ(m.titans_clamp, 5.0);
  EXPECT_EQ(m.cms_levels, 4);
  EXPECT_EQ(m.cms_freqs, (std::vector<int>{1, 4, 16, 64}));
  EXPECT_DOUBLE_EQ(m.cms_base_rate, 0.1);
  EXPECT_EQ(m.decomp_kernel, 25);
  EXPECT_DOUBLE_EQ(m.dropout_p, 0.1);
  EXPECT_DOUBLE_EQ(m.mask_ratio, 0.2);
  EXPECT_DOUBLE_EQ(m.lambda_kl, 0.01);
  EXPECT_DOUBLE_EQ(m.lambda_mtsm, 0.5);
  EXPECT_EQ(m.stem_kernel, 7);
  EXPECT_DOUBLE_EQ(t.lr, 1e-3);
  EXPECT_EQ(t.max_epochs, 300);
  EXPECT_EQ(t.pretrain_patience, 5);
  EXPECT_DOUBLE_EQ(t.pretrain_min_delta, 0.5);
  // unstated in the source, our defaults
  EXPECT_EQ(m.latent_dim, 64);
  EXPECT_EQ(m.n_seasonal_decoder_blocks, 2);
  EXPECT_EQ(m.max_len, 512);
  EXPECT_EQ(t.batch_size, 256);
  EXPECT_EQ(t.cls_patience, 10);
  EXPECT_DOUBLE_EQ(t.cls_min_delta, 1e-3);
  EXPECT_EQ(t.classifier_hidden, 128);
}

TEST(Config, DefaultsValidate) {
  EXPECT_TRUE(validate(ModelConfig{}).empty());
  EXPECT_TRUE(validate(TrainConfig{}).empty());
}

TEST(Config, FreqListLength) {
  ModelConfig m;
  m.cms_freqs = {1, 4};
  EXPECT_TRUE(mentions(validate(m), "freq list length"));
}

TEST(Config, MaskRatioBoundary) {
  ModelConfig m;
  m.mask_ratio = 1.0;
  EXPECT_FALSE(validate(m).empty());
  m.mask_ratio = 0.0;
  EXPECT_TRUE(validate(m).empty());
}

TEST(Config, ReportsEveryViolation) {
  ModelConfig m;
  m.seq_len = 1024;  // > max_len
  m.titans_alpha = 1.5;
  m.titans_eta = 0.0;
  m.titans_clamp = -1.0;
  const auto errors = validate(m);
  EXPECT_EQ(errors.size(), 4u);
  EXPECT_TRUE(mentions(errors, "max_len"));
  EXPECT_TRUE(mentions(errors, "titans_alpha"));
}

TEST(Config, TrainViolations) {
  TrainConfig t;
  t.lr = 0;
  t.pretrain_patience = 0;
  EXPECT_EQ(validate(t).size(), 2u);
}

TEST(Config, TextRoundTrip) {
  ModelConfig m;
  TrainConfig t;
  m.embed_dim = 32;
  m.cms_freqs = {1, 2, 8, 32};
  m.titans_eta = 0.0123456789012345;
  t.seed = 987654321;
  ModelConfig m2;
  TrainConfig t2;
  apply_config_text(to_config_text(m, t), m2, t2);
  EXPECT_EQ(to_config_text(m, t), to_config_text(m2, t2));
  EXPECT_EQ(m2.cms_freqs, m.cms_freqs);
  EXPECT_EQ(m2.titans_eta, m.titans_eta);
  EXPECT_EQ(t2.seed, t.seed);
}

TEST(Config, CommentsAndWhitespace) {
  ModelConfig m;
  TrainConfig t;
  apply_config_text("# comment\n  embed_dim = 16  # trailing\n\nlr=0.01\n", m, t);
  EXPECT_EQ(m.embed_dim, 16);
  EXPECT_DOUBLE_EQ(t.lr, 0.01);
}

TEST(Config, UnknownKeyAndBadValue) {
  ModelConfig m;
  TrainConfig t;
  EXPECT_THROW(apply_config_text("embed_dimm=4\n", m, t), ConfigError);
  EXPECT_THROW(apply_config_text("embed_dim=four\n", m, t), ConfigError);
  EXPECT_THROW(set_config_value("lr", "1e-3x", m, t), ConfigError);
  EXPECT_THROW(apply_config_text("no equals sign\n", m, t), ConfigError);
}

TEST(Config, LoadFile) {
  const std::string path = testing::TempDir() + "cfg_test.txt";
  {
    std::ofstream f(path);
    f << "latent_dim=8\nbatch_size=4\n";
  }
  ModelConfig m;
  TrainConfig t;
  load_config_file(path, m, t);
  EXPECT_EQ(m.latent_dim, 8);
  EXPECT_EQ(t.batch_size, 4);
  std::remove(path.c_str());
  EXPECT_THROW(load_config_file(path, m, t), ConfigError);
}
