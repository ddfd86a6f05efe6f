#pragma once

#include <string>
#include <vector>

#include "chronovae/decomp.hpp"
#include "chronovae/loss.hpp"
#include "chronovae/rng.hpp"

namespace chronovae {

enum class Split { kTrain, kTest };

/// Univariate classification dataset; labels are dense and zero-based.
struct LabeledDataset {
  std::vector<Matrix> series;  // each L_raw x 1
  std::vector<int> labels;
  Split split = Split::kTrain;
  std::string name;
  std::string type_tag;
  /// Original label text, indexed by remapped label.
  std::vector<std::string> class_names;

  std::size_t size() const { return series.size(); }
  int num_classes() const { return static_cast<int>(class_names.size()); }
  Index max_length() const;
};

/// Reads either UCR layout: tab/comma/space separated "label v1 v2 ..." rows,
/// or the sktime .ts layout ('@' header lines, then "v1,v2,...:label").
/// Labels are remapped to 0..K-1 in sorted original order (numeric order when
/// every label is numeric).
LabeledDataset load_ucr_ts(const std::string& path);
LabeledDataset parse_ucr_text(const std::string& text, const std::string& name = "dataset");

/// Tab-separated "label v1 v2 ..." with class_names as label text.
void write_ucr_tsv(const LabeledDataset& ds, const std::string& path);
/// CSV with header label,t0,t1,...; short series are padded with empty cells.
void write_csv(const LabeledDataset& ds, const std::string& path);

/// z-score (std floor 1e-8), then zero right-pad or centre-crop to L.
Matrix standardize_and_fit_length(const Matrix& s, Index len);

struct MaskedSeries {
  Matrix x_masked;
  Mask mask;
};

/// Bernoulli(ratio) per timestep; masked entries are set to exactly 0.
MaskedSeries apply_mtsm_mask(const Matrix& x, Scalar ratio, Rng& rng);

/// One pre-training batch. x holds the clean series the targets come from.
struct SeriesBatch {
  std::vector<Matrix> x;  // L x 1
  std::vector<Matrix> x_masked;
  std::vector<Mask> mask;
  std::vector<Decomposition> targets;

  std::size_t size() const { return x.size(); }
  std::size_t masked_total() const;
};

/// Builds a batch from already length-fitted series.
SeriesBatch make_batch(const std::vector<Matrix>& series, Scalar mask_ratio, Index decomp_kernel,
                       Rng& rng);

/// Brings a raw corpus series to length L for one epoch: a random contiguous
/// crop when longer, then standardize_and_fit_length.
Matrix window_for_epoch(const Matrix& raw, Index len, Rng& rng);

enum class SynthFamily { kTrendSeasonal, kPureSine, kPureTrend, kAr2, kRegimeShift };

const char* to_string(SynthFamily f);

struct SyntheticSeries {
  Matrix values;  // L x 1
  SynthFamily family;
  std::string params;  // human-readable generating parameters
};

/// Mixture of trend+seasonal composites, pure sinusoids (period 4..24),
/// pure linear trends, AR(2) noise and regime-switching level shifts.
std::vector<SyntheticSeries> synth_corpus(std::size_t n, Index len, Rng& rng);

/// K classes with distinct period / slope signatures plus N(0, 0.3^2) noise.
/// Class c uses period {8, 32, 16, 64, 12, 48, 24, 96}[c] and, for c >= 4, a
/// linear rise; phases and amplitudes vary per sample. Samples are shuffled.
LabeledDataset synth_labeled(std::size_t n_per_class, int num_classes, Index len, Rng& rng);

}  // namespace chronovae
