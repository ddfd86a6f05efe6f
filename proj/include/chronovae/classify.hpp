#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chronovae/config.hpp"
#include "chronovae/data.hpp"
#include "chronovae/layers.hpp"
#include "chronovae/model.hpp"
#include "chronovae/train.hpp"

namespace chronovae {

/// LayerNorm -> Linear -> GELU -> Dropout -> Linear over a 2Z embedding.
struct ClassifierParams {
  LayerNormParams norm;
  Linear hidden;
  Linear out;
  Scalar dropout_p = 0.1;

  int num_classes() const { return static_cast<int>(out.weight.cols()); }
  ParamList parameters() const;
};

struct ClassifierConfig {
  int hidden = 128;
  Scalar dropout_p = 0.1;
  Scalar lr = 1e-3;
  int batch_size = 256;
  int max_epochs = 300;
  int patience = 10;
  Scalar min_delta = 1e-3;

  /// Takes the classifier-specific keys (hidden width, patience, min_delta);
  /// the optimizer settings keep their downstream defaults.
  static ClassifierConfig from(const TrainConfig& t, Scalar dropout_p);
};

struct EvalReport {
  Scalar accuracy = 0.0;
  Scalar macro_f1 = 0.0;
  std::vector<Scalar> per_class_f1;
  /// confusion[true][predicted]
  std::vector<std::vector<long>> confusion;

  std::uint64_t checksum() const;
  std::string to_json(bool percent = false) const;
};

/// Row i is embed(standardize_and_fit_length(series_i)). Builds no graph and
/// never touches params or states.
Matrix extract_embeddings(const LabeledDataset& ds, const ModelParams& p, const ModelState& s,
                          const ModelConfig& cfg);

ClassifierParams make_classifier(Index in_dim, int num_classes, const ClassifierConfig& cfg, Rng& rng);
Tensor classifier_logits(const Tensor& embeddings, const ClassifierParams& p, bool training, Rng& rng);

/// Cross-entropy training of a fresh head, Adam, mini-batches, early stopping
/// on the epoch training loss. Throws DatasetError if some class 0..K-1 has no
/// sample. Returns the lowest-loss snapshot.
ClassifierParams fit_classifier(const Matrix& embeddings, const std::vector<int>& labels,
                                int num_classes, const ClassifierConfig& cfg, Rng& rng);

/// Argmax predictions, lowest index on ties.
std::vector<int> predict(const ClassifierParams& p, const Matrix& embeddings);

/// Confusion-derived metrics; per-class F1 is 0 when precision + recall is 0.
EvalReport report_from_predictions(const std::vector<int>& labels, const std::vector<int>& predictions,
                                   int num_classes);
EvalReport evaluate(const ClassifierParams& p, const Matrix& embeddings, const std::vector<int>& labels);

/// Frozen-encoder protocol for one train/test pair.
EvalReport run_downstream(const LabeledDataset& train, const LabeledDataset& test,
                          const ModelParams& p, const ModelState& s, const ModelConfig& cfg,
                          const ClassifierConfig& ccfg, std::uint64_t seed);

struct ManifestEntry {
  std::string name;
  std::string type_tag;
  std::string train_path;
  std::string test_path;
};

/// CSV lines "name,type,train_path,test_path"; '#' comments and a header row
/// starting with "name" are skipped. Relative paths resolve against the
/// manifest's directory.
std::vector<ManifestEntry> load_manifest(const std::string& path);

struct BenchmarkFilters {
  int max_classes = 0;  // keep K < max_classes; 0 disables
  Index max_len = 0;    // keep L < max_len; 0 disables
};

struct BenchmarkRow {
  std::string name;
  std::string type_tag;
  int num_classes = 0;
  Index length = 0;
  Scalar accuracy = 0.0;
  Scalar macro_f1 = 0.0;
};

struct GroupMean {
  std::string type_tag;
  std::size_t count = 0;
  Scalar accuracy = 0.0;
  Scalar macro_f1 = 0.0;
};

struct BenchmarkTable {
  std::vector<BenchmarkRow> rows;
  std::vector<std::string> failures;  // "name: reason"
  std::vector<std::string> skipped;   // excluded by filters
  Scalar mean_accuracy = 0.0;
  Scalar mean_f1 = 0.0;
  std::vector<GroupMean> by_type;

  std::string to_csv() const;
  std::string to_json() const;
};

/// Recomputes the overall and per-type means from rows.
void aggregate(BenchmarkTable& table);

BenchmarkTable benchmark_run(const std::vector<ManifestEntry>& manifest, const ModelParams& p,
                             const ModelState& s, const ModelConfig& cfg,
                             const ClassifierConfig& ccfg, const BenchmarkFilters& filters,
                             std::uint64_t seed);

/// Checksum of every model parameter and CMS buffer.
std::uint64_t model_checksum(const ModelParams& p, const ModelState& s);

}  // namespace chronovae
