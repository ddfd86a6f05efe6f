#include "chronovae/classify.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "chronovae/adam.hpp"
#include "chronovae/checksum.hpp"

namespace chronovae {

ParamList ClassifierParams::parameters() const {
  ParamList list;
  collect("classifier.norm", norm, list);
  collect("classifier.hidden", hidden, list);
  collect("classifier.out", out, list);
  return list;
}

ClassifierConfig ClassifierConfig::from(const TrainConfig& t, Scalar dropout_p) {
  ClassifierConfig c;
  c.hidden = t.classifier_hidden;
  c.dropout_p = dropout_p;
  c.patience = t.cls_patience;
  c.min_delta = t.cls_min_delta;
  return c;
}

Matrix extract_embeddings(const LabeledDataset& ds, const ModelParams& p, const ModelState& s,
                          const ModelConfig& cfg) {
  Matrix out(static_cast<Index>(ds.size()), 2 * cfg.latent_dim);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out.row(static_cast<Index>(i)) = embed(standardize_and_fit_length(ds.series[i], cfg.seq_len), p, s, cfg);
  }
  return out;
}

ClassifierParams make_classifier(Index in_dim, int num_classes, const ClassifierConfig& cfg, Rng& rng) {
  if (num_classes < 2) throw DatasetError("classifier needs at least 2 classes, got " + std::to_string(num_classes));
  ClassifierParams p;
  p.norm = make_layer_norm(in_dim);
  p.hidden = make_linear(in_dim, cfg.hidden, rng);
  p.out = make_linear(cfg.hidden, num_classes, rng);
  p.dropout_p = cfg.dropout_p;
  return p;
}

Tensor classifier_logits(const Tensor& embeddings, const ClassifierParams& p, bool training, Rng& rng) {
  Tensor h = gelu(apply(p.hidden, apply(p.norm, embeddings)));
  return apply(p.out, dropout(h, p.dropout_p, training, rng));
}

ClassifierParams fit_classifier(const Matrix& embeddings, const std::vector<int>& labels,
                                int num_classes, const ClassifierConfig& cfg, Rng& rng) {
  const auto n = static_cast<std::size_t>(embeddings.rows());
  if (labels.size() != n) {
    throw DimensionError("fit_classifier: " + std::to_string(n) + " embeddings but " +
                         std::to_string(labels.size()) + " labels");
  }
  std::vector<std::size_t> per_class(static_cast<std::size_t>(std::max(num_classes, 0)), 0);
  for (int y : labels) {
    if (y < 0 || y >= num_classes) throw DatasetError("fit_classifier: label " + std::to_string(y) + " out of range");
    ++per_class[static_cast<std::size_t>(y)];
  }
  for (int c = 0; c < num_classes; ++c) {
    if (per_class[static_cast<std::size_t>(c)] == 0) {
      throw DatasetError("fit_classifier: class " + std::to_string(c) + " has no training samples");
    }
  }

  ClassifierParams p = make_classifier(embeddings.cols(), num_classes, cfg, rng);
  const ParamList plist = p.parameters();
  AdamState adam = make_adam(plist, AdamOptions{cfg.lr});
  EarlyStopper stopper{std::numeric_limits<Scalar>::infinity(), cfg.patience, cfg.min_delta, 0};
  std::vector<Matrix> best = snapshot(plist);
  Scalar best_loss = std::numeric_limits<Scalar>::infinity();

  std::vector<std::size_t> order(n);
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng.engine());
    Scalar loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(n, start + batch);
      Matrix xb(static_cast<Index>(end - start), embeddings.cols());
      std::vector<int> yb;
      for (std::size_t i = start; i < end; ++i) {
        xb.row(static_cast<Index>(i - start)) = embeddings.row(static_cast<Index>(order[i]));
        yb.push_back(labels[order[i]]);
      }
      Tensor loss = softmax_cross_entropy(classifier_logits(Tensor(xb), p, true, rng), yb);
      if (!std::isfinite(loss.item())) {
        throw NumericError("fit_classifier: non-finite loss at epoch " + std::to_string(epoch + 1));
      }
      loss.backward();
      adam_step(plist, adam);
      zero_grad(plist);
      loss_sum += loss.item() * static_cast<Scalar>(end - start);
    }
    const Scalar epoch_loss = loss_sum / static_cast<Scalar>(n);
    if (epoch_loss < best_loss) {
      best_loss = epoch_loss;
      best = snapshot(plist);
    }
    if (early_stop_update(stopper, epoch_loss)) break;
  }
  restore(plist, best);
  return p;
}

std::vector<int> predict(const ClassifierParams& p, const Matrix& embeddings) {
  NoGradGuard no_grad;
  Rng unused(0);
  const Matrix logits = classifier_logits(Tensor(embeddings), p, false, unused).value();
  std::vector<int> out(static_cast<std::size_t>(logits.rows()));
  for (Index i = 0; i < logits.rows(); ++i) {
    Index best = 0;
    for (Index k = 1; k < logits.cols(); ++k) {
      if (logits(i, k) > logits(i, best)) best = k;
    }
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

EvalReport report_from_predictions(const std::vector<int>& labels, const std::vector<int>& predictions,
                                   int num_classes) {
  if (labels.size() != predictions.size()) {
    throw DimensionError("evaluate: " + std::to_string(labels.size()) + " labels but " +
                         std::to_string(predictions.size()) + " predictions");
  }
  const auto k = static_cast<std::size_t>(num_classes);
  EvalReport r;
  r.confusion.assign(k, std::vector<long>(k, 0));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    const int yhat = predictions[i];
    if (y < 0 || y >= num_classes || yhat < 0 || yhat >= num_classes) {
      throw DatasetError("evaluate: class index out of range at sample " + std::to_string(i));
    }
    ++r.confusion[static_cast<std::size_t>(y)][static_cast<std::size_t>(yhat)];
  }
  long correct = 0;
  r.per_class_f1.assign(k, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    correct += r.confusion[c][c];
    long predicted = 0;
    long actual = 0;
    for (std::size_t j = 0; j < k; ++j) {
      predicted += r.confusion[j][c];
      actual += r.confusion[c][j];
    }
    const Scalar tp = static_cast<Scalar>(r.confusion[c][c]);
    const Scalar precision = predicted > 0 ? tp / static_cast<Scalar>(predicted) : 0.0;
    const Scalar recall = actual > 0 ? tp / static_cast<Scalar>(actual) : 0.0;
    if (precision + recall > 0) r.per_class_f1[c] = 2 * precision * recall / (precision + recall);
  }
  r.accuracy = labels.empty() ? 0.0 : static_cast<Scalar>(correct) / static_cast<Scalar>(labels.size());
  if (k > 0) r.macro_f1 = std::accumulate(r.per_class_f1.begin(), r.per_class_f1.end(), 0.0) / static_cast<Scalar>(k);
  return r;
}

EvalReport evaluate(const ClassifierParams& p, const Matrix& embeddings, const std::vector<int>& labels) {
  return report_from_predictions(labels, predict(p, embeddings), p.num_classes());
}

std::uint64_t EvalReport::checksum() const {
  Fnv1a h;
  h.add(accuracy);
  h.add(macro_f1);
  for (Scalar f : per_class_f1) h.add(f);
  for (const auto& row : confusion) {
    for (long v : row) h.add(v);
  }
  return h.value();
}

std::string EvalReport::to_json(bool percent) const {
  const Scalar scale = percent ? 100.0 : 1.0;
  nlohmann::json j;
  j["accuracy"] = accuracy * scale;
  j["macro_f1"] = macro_f1 * scale;
  std::vector<Scalar> f1;
  for (Scalar f : per_class_f1) f1.push_back(f * scale);
  j["per_class_f1"] = f1;
  j["confusion"] = confusion;
  return j.dump(2);
}

EvalReport run_downstream(const LabeledDataset& train, const LabeledDataset& test,
                          const ModelParams& p, const ModelState& s, const ModelConfig& cfg,
                          const ClassifierConfig& ccfg, std::uint64_t seed) {
  if (train.num_classes() != test.num_classes()) {
    throw DatasetError("train split has " + std::to_string(train.num_classes()) +
                       " classes, test split has " + std::to_string(test.num_classes()));
  }
  const Matrix train_emb = extract_embeddings(train, p, s, cfg);
  const Matrix test_emb = extract_embeddings(test, p, s, cfg);
  Rng rng(seed_mix(seed, 3));
  ClassifierParams cls = fit_classifier(train_emb, train.labels, train.num_classes(), ccfg, rng);
  return evaluate(cls, test_emb, test.labels);
}

std::vector<ManifestEntry> load_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DatasetError("cannot open manifest '" + path + "'");
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? p : (base / fp).string();
  };
  std::vector<ManifestEntry> out;
  std::string line;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#' || line.rfind("name,", 0) == 0) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 4) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected name,type,train,test");
    }
    out.push_back({fields[0], fields[1], resolve(fields[2]), resolve(fields[3])});
  }
  return out;
}

void aggregate(BenchmarkTable& table) {
  table.by_type.clear();
  table.mean_accuracy = 0.0;
  table.mean_f1 = 0.0;
  if (table.rows.empty()) return;
  std::map<std::string, GroupMean> groups;
  for (const auto& r : table.rows) {
    table.mean_accuracy += r.accuracy;
    table.mean_f1 += r.macro_f1;
    GroupMean& g = groups[r.type_tag];
    g.type_tag = r.type_tag;
    ++g.count;
    g.accuracy += r.accuracy;
    g.macro_f1 += r.macro_f1;
  }
  table.mean_accuracy /= static_cast<Scalar>(table.rows.size());
  table.mean_f1 /= static_cast<Scalar>(table.rows.size());
  for (auto& [tag, g] : groups) {
    g.accuracy /= static_cast<Scalar>(g.count);
    g.macro_f1 /= static_cast<Scalar>(g.count);
    table.by_type.push_back(g);
  }
}

std::string BenchmarkTable::to_csv() const {
  std::ostringstream os;
  os << std::setprecision(17) << "dataset,type,classes,length,accuracy,f1\n";
  for (const auto& r : rows) {
    os << r.name << ',' << r.type_tag << ',' << r.num_classes << ',' << r.length << ',' << r.accuracy
       << ',' << r.macro_f1 << '\n';
  }
  return os.str();
}

std::string BenchmarkTable::to_json() const {
  nlohmann::json j;
  j["rows"] = nlohmann::json::array();
  for (const auto& r : rows) {
    j["rows"].push_back({{"dataset", r.name}, {"type", r.type_tag}, {"classes", r.num_classes},
                         {"length", r.length}, {"accuracy", r.accuracy}, {"f1", r.macro_f1}});
  }
  j["mean_accuracy"] = mean_accuracy;
  j["mean_f1"] = mean_f1;
  j["by_type"] = nlohmann::json::array();
  for (const auto& g : by_type) {
    j["by_type"].push_back({{"type", g.type_tag}, {"count", g.count}, {"accuracy", g.accuracy},
                            {"f1", g.macro_f1}});
  }
  j["failures"] = failures;
  j["skipped"] = skipped;
  return j.dump(2);
}

BenchmarkTable benchmark_run(const std::vector<ManifestEntry>& manifest, const ModelParams& p,
                             const ModelState& s, const ModelConfig& cfg,
                             const ClassifierConfig& ccfg, const BenchmarkFilters& filters,
                             std::uint64_t seed) {
  BenchmarkTable table;
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    const ManifestEntry& e = manifest[i];
    try {
      LabeledDataset train = load_ucr_ts(e.train_path);
      LabeledDataset test = load_ucr_ts(e.test_path);
      const int k = train.num_classes();
      const Index len = std::max(train.max_length(), test.max_length());
      if ((filters.max_classes > 0 && k >= filters.max_classes) ||
          (filters.max_len > 0 && len >= filters.max_len)) {
        table.skipped.push_back(e.name);
        continue;
      }
      EvalReport r = run_downstream(train, test, p, s, cfg, ccfg, seed_mix(seed, i));
      table.rows.push_back({e.name, e.type_tag, k, len, r.accuracy, r.macro_f1});
    } catch (const Error& err) {
      table.failures.push_back(e.name + ": " + err.what());
    }
  }
  aggregate(table);
  return table;
}

std::uint64_t model_checksum(const ModelParams& p, const ModelState& s) {
  Fnv1a h;
  for (const auto& nt : p.parameters()) {
    h.add(std::string_view(nt.name));
    h.add(nt.tensor.value());
  }
  auto add_state = [&](const CmsState& c) {
    for (const auto& m : c.memory) h.add(Matrix(m));
    h.add(c.batch_counter);
    for (auto u : c.update_counts) h.add(u);
  };
  for (const auto& c : s.encoder) add_state(c);
  for (const auto& c : s.decoder) add_state(c);
  return h.value();
}

}  // namespace chronovae
