#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chronovae/config.hpp"
#include "chronovae/tensor.hpp"

namespace chronovae {

// Property probes shared by selfcheck, the tests and the acceptance run.

struct DecompositionProbe {
  std::size_t elements = 0;
  /// Elements where fl(trend + seasonal) != x.
  std::size_t inexact = 0;
  /// Largest |fl(trend + seasonal) - x| in units of eps * max(|x|, |trend|, |seasonal|).
  Scalar worst_ulps = 0.0;
  /// Largest |seasonal| over constant series.
  Scalar constant_seasonal_max = 0.0;
  /// Largest componentwise linearity error.
  Scalar linearity_error = 0.0;
};

/// n random-walk-plus-noise series of length len, plus n constant series.
DecompositionProbe decomposition_probe(std::size_t n, Index len, Index kernel, std::uint64_t seed);

struct TitansProbe {
  /// Largest |fast weight| seen after any chunk update.
  Scalar max_abs_fast_weight = 0.0;
  bool clamp_held = false;
  /// Same input twice, and after an unrelated sequence: bitwise equal outputs.
  bool fresh_state_reproducible = false;
  /// Perturbing one token changes no output before its chunk and no other
  /// output inside its chunk, and does change outputs of the next chunk.
  bool chunk_causal = false;
};

/// Runs fast_weight_memory on inputs scaled by input_scale (large values
/// drive the fast weights into the clamp).
TitansProbe titans_probe(Index dim, Index len, Index chunk, Scalar input_scale, std::uint64_t seed);

struct CmsScheduleProbe {
  std::vector<std::uint64_t> update_counts;
  std::vector<Scalar> rates;
  /// cms_forward left the state untouched and eval consolidation was refused.
  bool eval_pure = false;
};

CmsScheduleProbe cms_schedule_probe(const ModelConfig& cfg, int batches, std::uint64_t seed);

}  // namespace chronovae
