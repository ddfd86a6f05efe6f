#include "chronovae/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <sstream>

namespace chronovae {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& token, double& out) {
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

std::vector<std::string> split_values(const std::string& line, bool commas_only) {
  std::vector<std::string> out;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) out.push_back(current);
    current.clear();
  };
  for (char ch : line) {
    const bool sep = commas_only ? ch == ',' : (ch == ',' || ch == '\t' || ch == ' ');
    if (sep) {
      flush();
    } else {
      current.push_back(ch);
    }
  }
  flush();
  return out;
}

struct RawRow {
  std::vector<double> values;
  std::string label;
  int line = 0;
};

std::vector<RawRow> parse_ts_rows(const std::vector<std::string>& lines) {
  std::vector<RawRow> rows;
  bool in_data = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string line = trim(lines[i]);
    const int lineno = static_cast<int>(i + 1);
    if (line.empty() || line[0] == '#') continue;
    if (line[0] == '@') {
      std::string tag = line;
      std::transform(tag.begin(), tag.end(), tag.begin(), [](unsigned char c) { return std::tolower(c); });
      if (tag.rfind("@data", 0) == 0) in_data = true;
      continue;
    }
    if (!in_data) continue;
    const auto colon = line.rfind(':');
    if (colon == std::string::npos) {
      throw ParseError("line " + std::to_string(lineno) + ": missing ':label' suffix");
    }
    if (line.find(':') != colon) {
      throw ParseError("line " + std::to_string(lineno) + ": multivariate rows are not supported");
    }
    RawRow row;
    row.line = lineno;
    row.label = trim(line.substr(colon + 1));
    for (const auto& tok : split_values(line.substr(0, colon), true)) {
      double v = 0.0;
      if (!parse_double(trim(tok), v) || !std::isfinite(v)) {
        throw ParseError("line " + std::to_string(lineno) + ": non-numeric value '" + tok + "'");
      }
      row.values.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<RawRow> parse_tsv_rows(const std::vector<std::string>& lines) {
  std::vector<RawRow> rows;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string line = trim(lines[i]);
    const int lineno = static_cast<int>(i + 1);
    if (line.empty()) continue;
    auto tokens = split_values(line, false);
    RawRow row;
    row.line = lineno;
    row.label = tokens.front();
    for (std::size_t t = 1; t < tokens.size(); ++t) {
      double v = 0.0;
      if (!parse_double(tokens[t], v) || !std::isfinite(v)) {
        throw ParseError("line " + std::to_string(lineno) + ": non-numeric value '" + tokens[t] + "'");
      }
      row.values.push_back(v);
    }
    if (row.values.empty()) throw ParseError("line " + std::to_string(lineno) + ": no values");
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

Index LabeledDataset::max_length() const {
  Index m = 0;
  for (const auto& s : series) m = std::max(m, s.rows());
  return m;
}

LabeledDataset parse_ucr_text(const std::string& text, const std::string& name) {
  std::vector<std::string> lines;
  {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
  }
  const bool ts_layout = std::any_of(lines.begin(), lines.end(), [](const std::string& l) {
    const std::string t = trim(l);
    return !t.empty() && t[0] == '@';
  });
  std::vector<RawRow> rows = ts_layout ? parse_ts_rows(lines) : parse_tsv_rows(lines);

  for (const auto& row : rows) {
    if (row.values.size() != rows.front().values.size()) {
      throw ParseError("line " + std::to_string(row.line) + ": ragged row with " +
                       std::to_string(row.values.size()) + " values, expected " +
                       std::to_string(rows.front().values.size()));
    }
  }

  // Sorted label order: numeric when every label parses, else lexicographic.
  bool numeric = true;
  for (const auto& row : rows) {
    double v = 0.0;
    numeric = numeric && parse_double(row.label, v);
  }
  auto less = [numeric](const std::string& a, const std::string& b) {
    if (!numeric) return a < b;
    double x = 0.0;
    double y = 0.0;
    parse_double(a, x);
    parse_double(b, y);
    return x < y;
  };
  std::map<std::string, int, decltype(less)> codes(less);
  for (const auto& row : rows) codes.emplace(row.label, 0);

  LabeledDataset ds;
  ds.name = name;
  int next = 0;
  for (auto& [label, code] : codes) {
    code = next++;
    ds.class_names.push_back(label);
  }
  for (auto& row : rows) {
    Matrix s(static_cast<Index>(row.values.size()), 1);
    for (std::size_t i = 0; i < row.values.size(); ++i) s(static_cast<Index>(i), 0) = row.values[i];
    ds.series.push_back(std::move(s));
    ds.labels.push_back(codes.at(row.label));
  }
  return ds;
}

LabeledDataset load_ucr_ts(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DatasetError("cannot open dataset file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  std::string stem = std::filesystem::path(path).stem().string();
  LabeledDataset ds = parse_ucr_text(ss.str(), stem);
  std::string upper = stem;
  std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
  if (upper.size() >= 5 && upper.ends_with("_TEST")) ds.split = Split::kTest;
  return ds;
}

void write_ucr_tsv(const LabeledDataset& ds, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw DatasetError("cannot write '" + path + "'");
  f << std::setprecision(17);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    f << ds.class_names.at(static_cast<std::size_t>(ds.labels[i]));
    for (Index t = 0; t < ds.series[i].rows(); ++t) f << '\t' << ds.series[i](t, 0);
    f << '\n';
  }
}

void write_csv(const LabeledDataset& ds, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw DatasetError("cannot write '" + path + "'");
  const Index width = ds.max_length();
  f << "label";
  for (Index t = 0; t < width; ++t) f << ",t" << t;
  f << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    f << ds.labels[i];
    for (Index t = 0; t < width; ++t) {
      f << ',';
      if (t < ds.series[i].rows()) f << ds.series[i](t, 0);
    }
    f << '\n';
  }
}

Matrix standardize_and_fit_length(const Matrix& s, Index len) {
  if (s.rows() < 1) throw DimensionError("standardize_and_fit_length: empty series");
  const Scalar mu = s.mean();
  const Scalar var = (s.array() - mu).square().mean();
  const Scalar sd = std::max(std::sqrt(var), 1e-8);
  Matrix z = ((s.array() - mu) / sd).matrix();
  if (z.rows() == len) return z;
  if (z.rows() < len) {
    Matrix out = Matrix::Zero(len, 1);
    out.topRows(z.rows()) = z;
    return out;
  }
  const Index start = (z.rows() - len) / 2;
  return z.middleRows(start, len);
}

MaskedSeries apply_mtsm_mask(const Matrix& x, Scalar ratio, Rng& rng) {
  if (!(ratio >= 0.0 && ratio < 1.0)) throw ConfigError("mask ratio must lie in [0, 1)");
  MaskedSeries out;
  out.x_masked = x;
  out.mask.assign(static_cast<std::size_t>(x.rows()), false);
  for (Index t = 0; t < x.rows(); ++t) {
    if (rng.bernoulli(ratio)) {
      out.mask[static_cast<std::size_t>(t)] = true;
      out.x_masked.row(t).setZero();
    }
  }
  return out;
}

std::size_t SeriesBatch::masked_total() const {
  std::size_t n = 0;
  for (const auto& m : mask) n += masked_count(m);
  return n;
}

SeriesBatch make_batch(const std::vector<Matrix>& series, Scalar mask_ratio, Index decomp_kernel,
                       Rng& rng) {
  SeriesBatch b;
  for (const auto& s : series) {
    MaskedSeries m = apply_mtsm_mask(s, mask_ratio, rng);
    b.x.push_back(s);
    b.x_masked.push_back(std::move(m.x_masked));
    b.mask.push_back(std::move(m.mask));
    b.targets.push_back(decompose(s, decomp_kernel));
  }
  return b;
}

Matrix window_for_epoch(const Matrix& raw, Index len, Rng& rng) {
  if (raw.rows() <= len) return standardize_and_fit_length(raw, len);
  const Index start = rng.uniform_int(0, raw.rows() - len);
  return standardize_and_fit_length(raw.middleRows(start, len), len);
}

const char* to_string(SynthFamily f) {
  switch (f) {
    case SynthFamily::kTrendSeasonal: return "trend_seasonal";
    case SynthFamily::kPureSine: return "pure_sine";
    case SynthFamily::kPureTrend: return "pure_trend";
    case SynthFamily::kAr2: return "ar2";
    case SynthFamily::kRegimeShift: return "regime_shift";
  }
  return "unknown";
}

std::vector<SyntheticSeries> synth_corpus(std::size_t n, Index len, Rng& rng) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  std::vector<SyntheticSeries> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    SyntheticSeries s;
    s.family = static_cast<SynthFamily>(i % 5);
    s.values = Matrix::Zero(len, 1);
    std::ostringstream params;
    params << std::setprecision(6);
    const double denom = static_cast<double>(std::max<Index>(len - 1, 1));
    switch (s.family) {
      case SynthFamily::kTrendSeasonal: {
        const double slope = rng.uniform(-2.0, 2.0);
        const double curve = rng.uniform(-1.0, 1.0);
        const int n_sines = static_cast<int>(rng.uniform_int(1, 3));
        params << "slope=" << slope << " curve=" << curve;
        for (Index t = 0; t < len; ++t) {
          const double u = static_cast<double>(t) / denom;
          s.values(t, 0) = slope * u + curve * u * u;
        }
        for (int k = 0; k < n_sines; ++k) {
          const double period = rng.uniform(6.0, 64.0);
          const double amp = rng.uniform(0.3, 1.0);
          const double phase = rng.uniform(0.0, kTwoPi);
          params << " sine(period=" << period << ",amp=" << amp << ")";
          for (Index t = 0; t < len; ++t) {
            s.values(t, 0) += amp * std::sin(kTwoPi * static_cast<double>(t) / period + phase);
          }
        }
        for (Index t = 0; t < len; ++t) s.values(t, 0) += rng.normal(0.0, 0.05);
        break;
      }
      case SynthFamily::kPureSine: {
        const double period = rng.uniform(4.0, 24.0);
        const double amp = rng.uniform(0.5, 2.0);
        const double phase = rng.uniform(0.0, kTwoPi);
        params << "period=" << period << " amp=" << amp << " phase=" << phase;
        for (Index t = 0; t < len; ++t) {
          s.values(t, 0) = amp * std::sin(kTwoPi * static_cast<double>(t) / period + phase);
        }
        break;
      }
      case SynthFamily::kPureTrend: {
        const double slope = rng.uniform(0.5, 3.0) * (rng.bernoulli(0.5) ? 1.0 : -1.0);
        const double offset = rng.uniform(-1.0, 1.0);
        params << "slope=" << slope << " offset=" << offset;
        for (Index t = 0; t < len; ++t) {
          s.values(t, 0) = offset + slope * static_cast<double>(t) / denom;
        }
        break;
      }
      case SynthFamily::kAr2: {
        const double phi1 = rng.uniform(0.3, 0.9);
        const double phi2 = rng.uniform(-0.5, 0.0);
        params << "phi1=" << phi1 << " phi2=" << phi2;
        double prev1 = 0.0;
        double prev2 = 0.0;
        for (Index t = 0; t < len; ++t) {
          const double v = phi1 * prev1 + phi2 * prev2 + rng.normal();
          s.values(t, 0) = v;
          prev2 = prev1;
          prev1 = v;
        }
        break;
      }
      case SynthFamily::kRegimeShift: {
        const int n_regimes = static_cast<int>(rng.uniform_int(2, 4));
        params << "regimes=" << n_regimes;
        Index start = 0;
        for (int r = 0; r < n_regimes; ++r) {
          const Index end = r + 1 == n_regimes ? len : std::min(len, start + len / n_regimes);
          const double level = rng.uniform(-2.0, 2.0);
          params << " level=" << level;
          for (Index t = start; t < end; ++t) s.values(t, 0) = level + rng.normal(0.0, 0.2);
          start = end;
        }
        break;
      }
    }
    s.params = params.str();
    out.push_back(std::move(s));
  }
  return out;
}

LabeledDataset synth_labeled(std::size_t n_per_class, int num_classes, Index len, Rng& rng) {
  if (num_classes < 2 || num_classes > 8) {
    throw ConfigError("synth_labeled: class count must lie in 2..8");
  }
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  constexpr double kPeriods[8] = {8, 32, 16, 64, 12, 48, 24, 96};
  LabeledDataset ds;
  ds.name = "synthetic_k" + std::to_string(num_classes);
  ds.type_tag = "SIMULATED";
  for (int c = 0; c < num_classes; ++c) ds.class_names.push_back(std::to_string(c));

  std::vector<std::pair<Matrix, int>> samples;
  const double denom = static_cast<double>(std::max<Index>(len - 1, 1));
  for (int c = 0; c < num_classes; ++c) {
    for (std::size_t i = 0; i < n_per_class; ++i) {
      const double amp = rng.uniform(0.8, 1.2);
      const double phase = rng.uniform(0.0, kTwoPi);
      const double rise = c >= 4 ? 3.0 : 0.0;
      Matrix s(len, 1);
      for (Index t = 0; t < len; ++t) {
        const double u = static_cast<double>(t);
        s(t, 0) = amp * std::sin(kTwoPi * u / kPeriods[c] + phase) + rise * u / denom +
                  rng.normal(0.0, 0.3);
      }
      samples.emplace_back(std::move(s), c);
    }
  }
  std::shuffle(samples.begin(), samples.end(), rng.engine());
  for (auto& [s, c] : samples) {
    ds.series.push_back(std::move(s));
    ds.labels.push_back(c);
  }
  return ds;
}

}  // namespace chronovae
