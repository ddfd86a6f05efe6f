#include "chronovae/titans.hpp"

#include <string>

namespace chronovae {

namespace {

Matrix clamp_entries(const Matrix& m, Scalar bound) { return m.cwiseMax(-bound).cwiseMin(bound); }

TitansState update_from_activations(const TitansState& s, const Matrix& slow_key,
                                    const Matrix& slow_value, const Matrix& keys,
                                    const Matrix& values, const TitansSettings& st) {
  const Scalar n = static_cast<Scalar>(keys.rows());
  // Row t of err is (M_main k_t - v_t)^T.
  const Matrix err = keys * s.main.transpose() - values;
  const Matrix grad_main = (2.0 / n) * err.transpose() * keys;
  const Matrix grad_keys = (2.0 / n) * err * s.main;  // rows: dl/dk_t
  const Matrix grad_key = grad_keys.transpose() * slow_key;
  const Matrix grad_value = (-2.0 / n) * err.transpose() * slow_value;

  TitansState next;
  next.main = clamp_entries(st.alpha * s.main - st.eta * grad_main, st.clamp);
  next.key = clamp_entries(st.alpha * s.key - st.eta * grad_key, st.clamp);
  next.value = clamp_entries(st.alpha * s.value - st.eta * grad_value, st.clamp);
  next.chunk_cursor = s.chunk_cursor + 1;
  return next;
}

Matrix refine(const Matrix& fast) {
  return Matrix::Identity(fast.rows(), fast.cols()) + fast.transpose();
}

}  // namespace

TitansSettings TitansSettings::from(const ModelConfig& cfg) {
  return {cfg.titans_chunk, cfg.titans_alpha, cfg.titans_eta, cfg.titans_clamp};
}

TitansState TitansState::zeros(Index dim) {
  return {Matrix::Zero(dim, dim), Matrix::Zero(dim, dim), Matrix::Zero(dim, dim), 0};
}

TitansParams make_titans(Index dim, Rng& rng) {
  TitansParams p;
  p.slow_key = make_mlp(dim, dim, dim, rng);
  p.slow_value = make_mlp(dim, dim, dim, rng);
  p.slow_main = make_mlp(dim, dim, dim, rng);
  p.out_proj = make_zero_linear(dim, dim);
  return p;
}

TitansState dgd_update(const TitansState& state, const Matrix& slow_key, const Matrix& slow_value,
                       const TitansSettings& settings) {
  const Matrix keys = slow_key * refine(state.key);
  const Matrix values = slow_value * refine(state.value);
  return update_from_activations(state, slow_key, slow_value, keys, values, settings);
}

Tensor fast_weight_memory(const Tensor& slow_key, const Tensor& slow_value, const Tensor& slow_main,
                          const TitansSettings& settings, const TitansHooks& hooks) {
  const Index len = slow_key.rows();
  const Index dim = slow_key.cols();
  if (slow_value.rows() != len || slow_main.rows() != len || slow_value.cols() != dim ||
      slow_main.cols() != dim) {
    throw DimensionError("fast_weight_memory: slow projections disagree in shape");
  }
  if (settings.chunk < 1) throw ConfigError("titans chunk size must be >= 1");
  const Index n_chunks = (len + settings.chunk - 1) / settings.chunk;
  if (hooks.replay && static_cast<Index>(hooks.replay->chunk_entry.size()) < n_chunks) {
    throw ProtocolError("fast-weight replay trace is shorter than the sequence");
  }
  if (hooks.record) hooks.record->chunk_entry.clear();

  TitansState state = TitansState::zeros(dim);
  std::vector<Tensor> outputs;
  outputs.reserve(static_cast<std::size_t>(n_chunks));
  for (Index c = 0; c < n_chunks; ++c) {
    const Index start = c * settings.chunk;
    const Index count = std::min(settings.chunk, len - start);
    if (hooks.replay) state = hooks.replay->chunk_entry[static_cast<std::size_t>(c)];
    if (hooks.record) hooks.record->chunk_entry.push_back(state);

    Tensor sk = slice_rows(slow_key, start, count);
    Tensor sv = slice_rows(slow_value, start, count);
    Tensor keys = matmul(sk, Tensor(refine(state.key)));
    Tensor retrieved = matmul(keys, Tensor(Matrix(state.main.transpose())));
    Tensor y = retrieved + slice_rows(slow_main, start, count);
    if (!y.value().allFinite()) {
      throw NumericError("titans: non-finite retrieval in chunk " + std::to_string(c));
    }
    outputs.push_back(y);

    if (hooks.replay) continue;
    const Matrix values = sv.value() * refine(state.value);
    state = update_from_activations(state, sk.value(), sv.value(), keys.value(), values, settings);
    if (!state.main.allFinite() || !state.key.allFinite() || !state.value.allFinite()) {
      throw NumericError("titans: non-finite fast weights after chunk " + std::to_string(c));
    }
    if (hooks.after_update) hooks.after_update(c, state);
  }
  return outputs.size() == 1 ? outputs.front() : concat_rows(outputs);
}

Tensor titans_forward(const Tensor& x, const TitansParams& p, const TitansSettings& settings,
                      const TitansHooks& hooks) {
  Tensor y = fast_weight_memory(apply(p.slow_key, x), apply(p.slow_value, x),
                                apply(p.slow_main, x), settings, hooks);
  return apply(p.out_proj, y);
}

void collect(const std::string& prefix, const TitansParams& p, ParamList& out) {
  collect(prefix + ".slow_key", p.slow_key, out);
  collect(prefix + ".slow_value", p.slow_value, out);
  collect(prefix + ".slow_main", p.slow_main, out);
  collect(prefix + ".out_proj", p.out_proj, out);
}

}  // namespace chronovae
