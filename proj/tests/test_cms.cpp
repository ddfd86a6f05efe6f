#include <gtest/gtest.h>

#include "chronovae/cms.hpp"
#include "chronovae/probes.hpp"

using namespace chronovae;

namespace {

ModelConfig small_cfg(Index d = 6) {
  ModelConfig cfg;
  cfg.embed_dim = static_cast<int>(d);
  return cfg;
}

std::vector<RowVector> activations(Index levels, Index d, Scalar value) {
  return std::vector<RowVector>(static_cast<std::size_t>(levels), RowVector::Constant(d, value));
}

Matrix normal(Index r, Index c, Rng& rng) {
  Matrix m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

void wake(CmsParams& p) {
  for (auto& level : p.levels) {
    Tensor g = level.norm.gamma;
    g.mutable_value().setOnes();
  }
}

}  // namespace

TEST(Cms, ScheduleOver64Batches) {
  ModelConfig cfg = small_cfg();
  CmsState s = CmsState::zeros(4, 6);
  auto act = activations(4, 6, 1.0);
  for (int b = 0; b < 64; ++b) cms_consolidate(s, act, cfg, true);
  EXPECT_EQ(s.update_counts, (std::vector<std::uint64_t>{64, 16, 4, 1}));
  EXPECT_EQ(s.batch_counter, 64u);
}

TEST(Cms, CountsAreCeilOfBatchesOverFreq) {
  ModelConfig cfg = small_cfg();
  for (int batches : {1, 5, 17, 65, 100}) {
    CmsState s = CmsState::zeros(4, 6);
    auto act = activations(4, 6, 0.5);
    for (int b = 0; b < batches; ++b) cms_consolidate(s, act, cfg, true);
    for (std::size_t i = 0; i < 4; ++i) {
      const auto f = static_cast<std::uint64_t>(cfg.cms_freqs[i]);
      EXPECT_EQ(s.update_counts[i], (static_cast<std::uint64_t>(batches) + f - 1) / f);
    }
  }
}

TEST(Cms, RatesDecreaseWithDepth) {
  ModelConfig cfg = small_cfg();
  const Scalar want[4] = {0.1, 0.05, 0.1 / 3.0, 0.025};
  for (Index i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(consolidation_rate(cfg, i), want[i]);
}

TEST(Cms, FirstUpdateIsTenthOfActivation) {
  ModelConfig cfg = small_cfg(3);
  CmsState s = CmsState::zeros(4, 3);
  RowVector a(3);
  a << 2.0, -1.0, 0.5;
  std::vector<RowVector> act(4, a);
  cms_consolidate(s, act, cfg, true);
  EXPECT_TRUE(s.memory[0].isApprox(0.1 * a));
  EXPECT_TRUE(s.memory[3].isApprox(0.025 * a));
}

TEST(Cms, DeepestLevelZeroUntilBatch64) {
  ModelConfig cfg = small_cfg();
  CmsState s = CmsState::zeros(4, 6);
  for (int b = 0; b < 64; ++b) {
    cms_consolidate(s, activations(4, 6, b == 0 ? 0.0 : 1.0), cfg, true);
    if (b >= 1 && b < 63) EXPECT_TRUE(s.memory[3].isZero(0.0));
  }
  // the 65th tick (counter 64) is the second eligible batch
  cms_consolidate(s, activations(4, 6, 1.0), cfg, true);
  EXPECT_FALSE(s.memory[3].isZero(0.0));
}

TEST(Cms, EvalConsolidationRefused) {
  ModelConfig cfg = small_cfg();
  CmsState s = CmsState::zeros(4, 6);
  EXPECT_THROW(cms_consolidate(s, activations(4, 6, 1.0), cfg, false), ProtocolError);
  EXPECT_EQ(s.batch_counter, 0u);
  EXPECT_TRUE(s.memory[0].isZero(0.0));
}

TEST(Cms, LevelCountMismatch) {
  ModelConfig cfg = small_cfg();
  CmsState s = CmsState::zeros(4, 6);
  EXPECT_THROW(cms_consolidate(s, activations(3, 6, 1.0), cfg, true), DimensionError);
  Rng rng(1);
  CmsParams p = make_cms(cfg, rng);
  EXPECT_THROW(cms_forward(Tensor(Matrix::Zero(4, 6)), p, CmsState::zeros(3, 6)), DimensionError);
}

TEST(Cms, FreshModuleIsSilent) {
  ModelConfig cfg = small_cfg();
  Rng rng(2);
  CmsParams p = make_cms(cfg, rng);
  CmsOutput out = cms_forward(Tensor(normal(10, 6, rng)), p, CmsState::zeros(4, 6));
  EXPECT_TRUE(out.delta.value().isZero(0.0));
  ASSERT_EQ(out.level_means.size(), 4u);
}

TEST(Cms, ForwardLeavesStateUntouched) {
  ModelConfig cfg = small_cfg();
  Rng rng(3);
  CmsParams p = make_cms(cfg, rng);
  wake(p);
  CmsState s = CmsState::zeros(4, 6);
  for (auto& m : s.memory) m = normal(1, 6, rng);
  const CmsState before = s;
  Matrix x = normal(12, 6, rng);
  Matrix y1 = cms_forward(Tensor(x), p, s).delta.value();
  Matrix y2 = cms_forward(Tensor(x), p, s).delta.value();
  EXPECT_EQ(y1, y2);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(s.memory[i], before.memory[i]);
  EXPECT_EQ(s.batch_counter, before.batch_counter);
}

TEST(Cms, OutputDependsOnMemory) {
  ModelConfig cfg = small_cfg();
  Rng rng(4);
  CmsParams p = make_cms(cfg, rng);
  wake(p);
  Matrix x = normal(8, 6, rng);
  CmsState a = CmsState::zeros(4, 6);
  CmsState b = a;
  b.memory[2] = RowVector::Constant(6, 0.7);
  EXPECT_GT((cms_forward(Tensor(x), p, a).delta.value() - cms_forward(Tensor(x), p, b).delta.value())
                .cwiseAbs()
                .maxCoeff(),
            1e-6);
}

TEST(Cms, NoGradientIntoMemory) {
  ModelConfig cfg = small_cfg();
  Rng rng(5);
  CmsParams p = make_cms(cfg, rng);
  wake(p);
  CmsState s = CmsState::zeros(4, 6);
  for (auto& m : s.memory) m = normal(1, 6, rng);
  Tensor x(normal(5, 6, rng), true);
  sum(cms_forward(x, p, s).delta).backward();
  EXPECT_FALSE(x.grad().isZero(0.0));
}

// EMA of bounded activations stays inside their range.
TEST(Cms, EmaBounded) {
  ModelConfig cfg = small_cfg(4);
  CmsState s = CmsState::zeros(4, 4);
  Rng rng(6);
  for (int b = 0; b < 500; ++b) {
    std::vector<RowVector> act;
    for (int i = 0; i < 4; ++i) {
      RowVector r(4);
      for (Index j = 0; j < 4; ++j) r(j) = rng.uniform(-3.0, 3.0);
      act.push_back(r);
    }
    cms_consolidate(s, act, cfg, true);
    for (const auto& m : s.memory) EXPECT_LE(m.cwiseAbs().maxCoeff(), 3.0);
  }
}

TEST(Cms, ProbeMatchesSchedule) {
  ModelConfig cfg = small_cfg(4);
  auto probe = cms_schedule_probe(cfg, 64, 7);
  EXPECT_EQ(probe.update_counts, (std::vector<std::uint64_t>{64, 16, 4, 1}));
  ASSERT_EQ(probe.rates.size(), 4u);
  EXPECT_DOUBLE_EQ(probe.rates[1], 0.05);
  EXPECT_TRUE(probe.eval_pure);
}
