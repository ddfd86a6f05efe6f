#include "chronovae/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "chronovae/cms.hpp"
#include "chronovae/data.hpp"
#include "chronovae/finite_diff.hpp"
#include "chronovae/loss.hpp"
#include "chronovae/model.hpp"
#include "chronovae/titans.hpp"

namespace chronovae {

namespace {

Matrix random_matrix(Index rows, Index cols, Rng& rng, Scalar scale = 1.0) {
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal(0.0, scale);
  return m;
}

Scalar project(const Tensor& y, const Matrix& r) { return (y.value().array() * r.array()).sum(); }

// Square op whose backward is off by a factor of two.
Tensor faulty_square(const Tensor& x) {
  Matrix out = x.value().cwiseProduct(x.value());
  return make_result(std::move(out), {x}, [](detail::Node& self) {
    auto& a = *self.inputs[0];
    if (a.requires_grad) a.accumulate(4.0 * self.grad.cwiseProduct(a.value));
  });
}

}  // namespace

GradCheckResult check_gradient(const std::string& name, const TensorFn& fn,
                               const std::vector<Matrix>& inputs, Scalar tol, std::uint64_t seed,
                               Scalar h) {
  std::vector<Tensor> leaves;
  for (const auto& m : inputs) leaves.emplace_back(m, true);
  Tensor y = fn(leaves);
  Rng rng(seed);
  const Matrix r = random_matrix(y.rows(), y.cols(), rng);
  sum(hadamard(y, Tensor(r))).backward();

  GradCheckResult res{name, 0.0, true};
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    auto f = [&](const Matrix& probe) {
      NoGradGuard no_grad;
      std::vector<Tensor> args;
      for (std::size_t j = 0; j < inputs.size(); ++j) args.emplace_back(j == i ? probe : inputs[j]);
      return project(fn(args), r);
    };
    const Matrix numeric = finite_diff_gradient(f, inputs[i], h);
    res.max_rel_err = std::max(res.max_rel_err, max_relative_error(leaves[i].grad(), numeric));
  }
  res.passed = std::isfinite(res.max_rel_err) && res.max_rel_err <= tol;
  return res;
}

std::vector<GradCheckResult> op_gradient_suite(Scalar tol, std::uint64_t seed, bool inject_fault) {
  Rng rng(seed_mix(seed, 11));
  auto rm = [&](Index r, Index c) { return random_matrix(r, c, rng); };
  std::vector<GradCheckResult> out;
  std::uint64_t k = 0;
  auto run = [&](const std::string& name, const TensorFn& fn, const std::vector<Matrix>& inputs) {
    out.push_back(check_gradient(name, fn, inputs, tol, seed_mix(seed, 100 + k++)));
  };
  using S = std::span<const Tensor>;

  run("matmul", [](S a) { return matmul(a[0], a[1]); }, {rm(3, 4), rm(4, 2)});
  run("transpose", [](S a) { return transpose(a[0]); }, {rm(3, 4)});
  run("add", [](S a) { return a[0] + a[1]; }, {rm(3, 4), rm(3, 4)});
  run("subtract", [](S a) { return a[0] - a[1]; }, {rm(3, 4), rm(3, 4)});
  run("negate", [](S a) { return -a[0]; }, {rm(3, 4)});
  run("scale", [](S a) { return 2.5 * a[0]; }, {rm(3, 4)});
  run("hadamard", [](S a) { return hadamard(a[0], a[1]); }, {rm(3, 4), rm(3, 4)});
  run("affine", [](S a) { return affine(a[0], -1.5, 0.25); }, {rm(3, 4)});
  run("add_row", [](S a) { return add_row(a[0], a[1]); }, {rm(3, 4), rm(1, 4)});
  run("broadcast_rows", [](S a) { return broadcast_rows(a[0], 5); }, {rm(1, 4)});
  run("linear", [](S a) { return linear(a[0], a[1], a[2]); }, {rm(5, 3), rm(3, 4), rm(1, 4)});
  run("gelu", [](S a) { return gelu(a[0]); }, {rm(4, 5)});
  run("sigmoid", [](S a) { return sigmoid(a[0]); }, {rm(4, 5)});
  run("exp", [](S a) { return exp(a[0]); }, {rm(4, 5)});
  run("square", [](S a) { return square(a[0]); }, {rm(4, 5)});
  {
    // Keep entries clear of the clamp bounds so differences stay on one side.
    Matrix x = rm(4, 5);
    for (Index i = 0; i < x.size(); ++i) {
      Scalar& v = x.data()[i];
      if (std::abs(std::abs(v) - 0.8) < 0.05) v += 0.2;
    }
    run("clamp", [](S a) { return clamp(a[0], -0.8, 0.8); }, {x});
  }
  run("sum", [](S a) { return sum(a[0]); }, {rm(3, 4)});
  run("mean", [](S a) { return mean(a[0]); }, {rm(3, 4)});
  run("adaptive_avg_pool_time", [](S a) { return adaptive_avg_pool_time(a[0]); }, {rm(6, 3)});
  run("concat_cols", [](S a) { return concat_cols(a[0], a[1]); }, {rm(3, 2), rm(3, 4)});
  run("concat_rows", [](S a) { return concat_rows(a.subspan(0, 3)); }, {rm(2, 3), rm(1, 3), rm(4, 3)});
  run("slice_rows", [](S a) { return slice_rows(a[0], 1, 3); }, {rm(5, 3)});
  run("slice_cols", [](S a) { return slice_cols(a[0], 1, 2); }, {rm(3, 5)});
  run("reshape", [](S a) { return reshape(a[0], 2, 6); }, {rm(3, 4)});
  run("layer_norm", [](S a) { return layer_norm(a[0], a[1], a[2]); }, {rm(4, 6), rm(1, 6), rm(1, 6)});
  run("conv1d_same", [](S a) { return conv1d_same(a[0], a[1], a[2], 3, 1); },
      {rm(7, 2), rm(4, 2 * 3), rm(1, 4)});
  run("avg_pool1d_same", [](S a) { return avg_pool1d_same(a[0], 5); }, {rm(9, 2)});
  run("dropout", [](S a) {
        Rng r(7);
        return dropout(a[0], 0.3, true, r);
      },
      {rm(4, 6)});
  {
    const std::vector<int> labels = {0, 2, 1, 2};
    run("softmax_cross_entropy", [labels](S a) { return softmax_cross_entropy(a[0], labels); },
        {rm(4, 3)});
  }
  {
    TitansSettings st{4, 0.9, 0.05, 5.0};
    Matrix sk = rm(10, 3), sv = rm(10, 3), sm = rm(10, 3);
    auto trace = std::make_shared<FastWeightTrace>();
    {
      NoGradGuard no_grad;
      TitansHooks rec;
      rec.record = trace.get();
      fast_weight_memory(Tensor(sk), Tensor(sv), Tensor(sm), st, rec);
    }
    run("fast_weight_memory", [st, trace](S a) {
          TitansHooks hooks;
          hooks.replay = trace.get();
          return fast_weight_memory(a[0], a[1], a[2], st, hooks);
        },
        {sk, sv, sm});
  }
  run("kl_loss", [](S a) { return kl_loss({a[0], a[1], a[2], a[3]}); },
      {rm(1, 4), rm(1, 4), rm(1, 4), rm(1, 4)});
  {
    Matrix series = rm(12, 1);
    Decomposition target = decompose(series, 5);
    run("recon_loss", [target](S a) { return recon_loss(a[0], a[1], target); }, {rm(12, 1), rm(12, 1)});
    Mask mask(12, false);
    mask[2] = mask[5] = mask[11] = true;
    run("mtsm_loss", [series, mask](S a) { return mtsm_loss(a[0], series, mask); }, {rm(12, 1)});
  }
  if (inject_fault) run("faulty_square", [](S a) { return faulty_square(a[0]); }, {rm(3, 3)});
  return out;
}

ModelConfig gradcheck_model_config() {
  ModelConfig cfg;
  cfg.seq_len = 24;
  cfg.max_len = 24;
  cfg.embed_dim = 6;
  cfg.latent_dim = 3;
  cfg.n_encoder_blocks = 2;
  cfg.n_seasonal_decoder_blocks = 1;
  cfg.titans_chunk = 8;
  cfg.cms_levels = 2;
  cfg.cms_freqs = {1, 4};
  cfg.decomp_kernel = 5;
  cfg.stem_kernel = 3;
  return cfg;
}

GradCheckResult end_to_end_gradient_check(const ModelConfig& cfg, int n_params, Scalar tol,
                                          std::uint64_t seed) {
  Rng init(seed_mix(seed, 21));
  ModelParams params = make_model(cfg, init);
  ModelState state = make_model_state(cfg);
  const ParamList plist = params.parameters();
  for (NamedTensor nt : plist) {
    Matrix& v = nt.tensor.mutable_value();
    if (v.isZero(0.0)) v = random_matrix(v.rows(), v.cols(), init, 0.3);
  }
  for (auto* states : {&state.encoder, &state.decoder}) {
    for (auto& s : *states) {
      for (auto& m : s.memory) m = random_matrix(1, m.size(), init, 0.3).row(0);
    }
  }

  const Matrix x = random_matrix(cfg.seq_len, 1, init);
  MaskedSeries masked = apply_mtsm_mask(x, 0.3, init);
  const Decomposition target = decompose(x, cfg.decomp_kernel);
  const std::size_t masked_total = masked_count(masked.mask);
  const LossWeights weights = LossWeights::from(cfg);
  const std::uint64_t noise_seed = seed_mix(seed, 22);

  FastWeightTape tape;
  auto loss_at = [&](FastWeightTape::Mode mode) {
    Rng noise(noise_seed);
    tape.mode = mode;
    ForwardOptions opts{true, &noise, &tape};
    ModelOutput out = forward(Tensor(masked.x_masked), params, state, cfg, opts);
    return batch_member_loss(out, target, x, masked.mask, 1, masked_total, weights).total;
  };
  loss_at(FastWeightTape::Mode::kRecord).backward();

  Index total = parameter_count(plist);
  GradCheckResult res{"end_to_end_total_loss", 0.0, true};
  const Scalar h = 1e-5;
  for (int i = 0; i < n_params; ++i) {
    Index flat = init.uniform_int(0, total - 1);
    std::size_t p = 0;
    while (flat >= plist[p].tensor.size()) flat -= plist[p++].tensor.size();
    NamedTensor nt = plist[p];
    const Scalar analytic = nt.tensor.grad().data()[flat];
    Scalar& slot = nt.tensor.mutable_value().data()[flat];
    const Scalar orig = slot;
    Scalar up, down;
    {
      NoGradGuard no_grad;
      slot = orig + h;
      up = loss_at(FastWeightTape::Mode::kReplay).item();
      slot = orig - h;
      down = loss_at(FastWeightTape::Mode::kReplay).item();
    }
    slot = orig;
    res.max_rel_err = std::max(res.max_rel_err, relative_error(analytic, (up - down) / (2 * h)));
  }
  zero_grad(plist);
  res.passed = std::isfinite(res.max_rel_err) && res.max_rel_err <= tol;
  return res;
}

}  // namespace chronovae
