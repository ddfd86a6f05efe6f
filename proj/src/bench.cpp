#include "chronovae/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "chronovae/hope.hpp"

namespace chronovae {

namespace {

template <typename F>
double median_ms(F&& f, int reps) {
  f();  // warm-up
  std::vector<double> times;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    times.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  }
  std::nth_element(times.begin(), times.begin() + times.size() / 2, times.end());
  return times[times.size() / 2];
}

Matrix random_matrix(Index rows, Index cols, Rng& rng, double scale) {
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal(0.0, scale);
  return m;
}

}  // namespace

Matrix attention_forward(const Matrix& x, const Matrix& wq, const Matrix& wk, const Matrix& wv) {
  const Matrix q = x * wq;
  const Matrix k = x * wk;
  const Matrix v = x * wv;
  Matrix scores = (q * k.transpose()) / std::sqrt(static_cast<double>(x.cols()));
  for (Index i = 0; i < scores.rows(); ++i) {
    const double m = scores.row(i).maxCoeff();
    scores.row(i) = (scores.row(i).array() - m).exp().matrix();
    scores.row(i) /= scores.row(i).sum();
  }
  return scores * v;
}

double loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  const std::size_t n = std::min(xs.size(), ys.size());
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(xs[i]);
    my += std::log(ys[i]);
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(xs[i]) - mx;
    sxy += dx * (std::log(ys[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

std::string ScalingTable::to_csv() const {
  std::ostringstream os;
  os << std::setprecision(10) << "L,hope_ms,attn_ms,hope_ratio,attn_ratio\n";
  for (const auto& r : rows) {
    os << r.length << ',' << r.hope_ms << ',' << r.attn_ms << ',';
    if (std::isnan(r.hope_ratio)) {
      os << ",\n";
    } else {
      os << r.hope_ratio << ',' << r.attn_ratio << '\n';
    }
  }
  return os.str();
}

ScalingTable scaling_probe(const std::vector<Index>& lengths, Index dim, int reps, std::uint64_t seed) {
  if (lengths.empty()) throw ConfigError("scaling_probe: no lengths given");
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    if (lengths[i] < 1 || (i > 0 && lengths[i] <= lengths[i - 1])) {
      throw ConfigError("scaling_probe: lengths must be positive and strictly ascending");
    }
  }
  if (reps < 3) throw ConfigError("scaling_probe: reps must be at least 3");
  if (dim < 2) throw ConfigError("scaling_probe: dim must be at least 2");

  ModelConfig cfg;
  cfg.embed_dim = static_cast<int>(dim);
  Rng rng(seed_mix(seed, 4));
  const HopeBlockParams block = make_hope_block(cfg, rng);
  const CmsState cms_state = CmsState::zeros(cfg.cms_levels, dim);
  const TitansSettings settings = TitansSettings::from(cfg);
  const double wscale = 1.0 / std::sqrt(static_cast<double>(dim));
  const Matrix wq = random_matrix(dim, dim, rng, wscale);
  const Matrix wk = random_matrix(dim, dim, rng, wscale);
  const Matrix wv = random_matrix(dim, dim, rng, wscale);

  ScalingTable table;
  std::vector<double> ls, hope, attn;
  for (Index len : lengths) {
    const Matrix x = random_matrix(len, dim, rng, 1.0);
    ScalingRow row;
    row.length = len;
    row.hope_ms = median_ms(
        [&] {
          NoGradGuard no_grad;
          volatile double sink = hope_forward(Tensor(x), block, cms_state, settings, false, rng).output.value()(0, 0);
          (void)sink;
        },
        reps);
    row.attn_ms = median_ms(
        [&] {
          volatile double sink = attention_forward(x, wq, wk, wv)(0, 0);
          (void)sink;
        },
        reps);
    if (table.rows.empty()) {
      row.hope_ratio = row.attn_ratio = std::numeric_limits<double>::quiet_NaN();
    } else {
      row.hope_ratio = row.hope_ms / table.rows.back().hope_ms;
      row.attn_ratio = row.attn_ms / table.rows.back().attn_ms;
    }
    table.rows.push_back(row);
    ls.push_back(static_cast<double>(len));
    hope.push_back(row.hope_ms);
    attn.push_back(row.attn_ms);
  }
  table.hope_exponent = loglog_slope(ls, hope);
  table.attn_exponent = loglog_slope(ls, attn);
  return table;
}

}  // namespace chronovae
