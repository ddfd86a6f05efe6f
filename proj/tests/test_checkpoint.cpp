#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "chronovae/checkpoint.hpp"
#include "chronovae/classify.hpp"

using namespace chronovae;

namespace {

ModelConfig tiny() {
  ModelConfig cfg;
  cfg.seq_len = 32;
  cfg.max_len = 40;
  cfg.embed_dim = 6;
  cfg.latent_dim = 3;
  cfg.n_encoder_blocks = 2;
  cfg.n_seasonal_decoder_blocks = 1;
  cfg.titans_chunk = 8;
  cfg.decomp_kernel = 5;
  return cfg;
}

std::string temp(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("chronovae_ckpt_" + name)).string();
}

struct Fixture {
  ModelConfig cfg = tiny();
  TrainConfig tcfg;
  ModelParams p;
  ModelState s;
  Fixture() {
    Rng rng(1);
    p = make_model(cfg, rng);
    s = make_model_state(cfg);
    s.encoder[1].memory[2] = RowVector::Constant(6, 0.25);
    s.encoder[1].batch_counter = 7;
    s.encoder[1].update_counts = {7, 2, 1, 1};
    tcfg.seed = 42;
  }
};

}  // namespace

TEST(Checkpoint, RoundTrip) {
  Fixture f;
  const std::string path = temp("rt.bin");
  save_checkpoint(path, f.cfg, f.tcfg, f.p, f.s);
  Checkpoint c = load_checkpoint(path);
  EXPECT_EQ(model_checksum(c.params, c.state), model_checksum(f.p, f.s));
  EXPECT_EQ(c.model_cfg.embed_dim, 6);
  EXPECT_EQ(c.model_cfg.max_len, 40);
  EXPECT_EQ(c.train_cfg.seed, 42u);
  EXPECT_EQ(c.state.encoder[1].batch_counter, 7u);
  EXPECT_EQ(c.state.encoder[1].update_counts, (std::vector<std::uint64_t>{7, 2, 1, 1}));
  Matrix x = Matrix::Random(32, 1);
  EXPECT_EQ(embed(x, c.params, c.state, c.model_cfg), embed(x, f.p, f.s, f.cfg));

  auto j = nlohmann::json::parse(std::ifstream(path + ".json"));
  EXPECT_EQ(j["format_version"].get<int>(), static_cast<int>(kCheckpointVersion));
  EXPECT_EQ(j["parameter_count"].get<long>(), parameter_count(f.p.parameters()));
  std::filesystem::remove(path);
  std::filesystem::remove(path + ".json");
}

TEST(Checkpoint, Missing) { EXPECT_THROW(load_checkpoint(temp("none.bin")), DatasetError); }

TEST(Checkpoint, BadMagic) {
  const std::string path = temp("magic.bin");
  std::ofstream(path) << "NOTACKPT and some more bytes";
  EXPECT_THROW(load_checkpoint(path), ParseError);
  std::filesystem::remove(path);
}

TEST(Checkpoint, Truncated) {
  Fixture f;
  const std::string path = temp("trunc.bin");
  save_checkpoint(path, f.cfg, f.tcfg, f.p, f.s);
  const auto size = std::filesystem::file_size(path);
  for (auto keep : {size / 2, size - 1}) {
    std::filesystem::resize_file(path, keep);
    EXPECT_THROW(load_checkpoint(path), ParseError) << keep;
  }
  std::filesystem::remove(path);
  std::filesystem::remove(path + ".json");
}
