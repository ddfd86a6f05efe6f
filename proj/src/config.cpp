#include "chronovae/config.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "chronovae/error.hpp"

namespace chronovae {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw ConfigError("config key '" + key + "': cannot parse '" + text + "'");
  }
  return v;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<int>(key, trim(item)));
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

std::vector<std::string> validate(const ModelConfig& c) {
  std::vector<std::string> errors;
  auto need = [&](bool ok, const std::string& msg) {
    if (!ok) errors.push_back(msg);
  };
  need(c.seq_len >= 1, "seq_len must be >= 1");
  need(c.max_len >= 1, "max_len must be >= 1");
  need(c.seq_len <= c.max_len, "seq_len must not exceed max_len");
  need(c.embed_dim >= 2, "embed_dim must be >= 2");
  need(c.latent_dim >= 1, "latent_dim must be >= 1");
  need(c.n_encoder_blocks >= 1, "n_encoder_blocks must be >= 1");
  need(c.n_seasonal_decoder_blocks >= 0, "n_seasonal_decoder_blocks must be >= 0");
  need(c.titans_chunk >= 1, "titans_chunk must be >= 1");
  need(c.titans_alpha > 0.0 && c.titans_alpha <= 1.0, "titans_alpha must lie in (0, 1]");
  need(c.titans_eta > 0.0, "titans_eta must be > 0");
  need(c.titans_clamp > 0.0, "titans_clamp must be > 0");
  need(c.cms_levels >= 1, "cms_levels must be >= 1");
  need(static_cast<int>(c.cms_freqs.size()) == c.cms_levels,
       "cms_freqs: freq list length " + std::to_string(c.cms_freqs.size()) +
           " does not match cms_levels " + std::to_string(c.cms_levels));
  for (int f : c.cms_freqs) need(f >= 1, "cms_freqs entries must be >= 1");
  need(c.cms_base_rate > 0.0 && c.cms_base_rate <= 1.0, "cms_base_rate must lie in (0, 1]");
  need(c.decomp_kernel >= 1 && c.decomp_kernel % 2 == 1, "decomp_kernel must be odd and positive");
  need(c.stem_kernel >= 1 && c.stem_kernel % 2 == 1, "stem_kernel must be odd and positive");
  need(c.dropout_p >= 0.0 && c.dropout_p < 1.0, "dropout_p must lie in [0, 1)");
  need(c.mask_ratio >= 0.0 && c.mask_ratio < 1.0, "mask_ratio must lie in [0, 1)");
  need(c.lambda_kl >= 0.0, "lambda_kl must be >= 0");
  need(c.lambda_mtsm >= 0.0, "lambda_mtsm must be >= 0");
  return errors;
}

std::vector<std::string> validate(const TrainConfig& c) {
  std::vector<std::string> errors;
  auto need = [&](bool ok, const std::string& msg) {
    if (!ok) errors.push_back(msg);
  };
  need(c.lr > 0.0, "lr must be > 0");
  need(c.batch_size >= 1, "batch_size must be >= 1");
  need(c.max_epochs >= 0, "max_epochs must be >= 0");
  need(c.pretrain_patience >= 1, "pretrain_patience must be >= 1");
  need(c.pretrain_min_delta >= 0.0, "pretrain_min_delta must be >= 0");
  need(c.cls_patience >= 1, "cls_patience must be >= 1");
  need(c.cls_min_delta >= 0.0, "cls_min_delta must be >= 0");
  need(c.classifier_hidden >= 1, "classifier_hidden must be >= 1");
  need(c.grad_clip > 0.0, "grad_clip must be > 0");
  return errors;
}

void set_config_value(const std::string& key, const std::string& value, ModelConfig& m,
                      TrainConfig& t) {
  using I = int;
  using D = double;
  if (key == "seq_len") m.seq_len = parse_number<I>(key, value);
  else if (key == "embed_dim") m.embed_dim = parse_number<I>(key, value);
  else if (key == "latent_dim") m.latent_dim = parse_number<I>(key, value);
  else if (key == "n_encoder_blocks") m.n_encoder_blocks = parse_number<I>(key, value);
  else if (key == "n_seasonal_decoder_blocks") m.n_seasonal_decoder_blocks = parse_number<I>(key, value);
  else if (key == "titans_chunk") m.titans_chunk = parse_number<I>(key, value);
  else if (key == "titans_alpha") m.titans_alpha = parse_number<D>(key, value);
  else if (key == "titans_eta") m.titans_eta = parse_number<D>(key, value);
  else if (key == "titans_clamp") m.titans_clamp = parse_number<D>(key, value);
  else if (key == "cms_levels") m.cms_levels = parse_number<I>(key, value);
  else if (key == "cms_freqs") m.cms_freqs = parse_int_list(key, value);
  else if (key == "cms_base_rate") m.cms_base_rate = parse_number<D>(key, value);
  else if (key == "decomp_kernel") m.decomp_kernel = parse_number<I>(key, value);
  else if (key == "dropout_p") m.dropout_p = parse_number<D>(key, value);
  else if (key == "mask_ratio") m.mask_ratio = parse_number<D>(key, value);
  else if (key == "lambda_kl") m.lambda_kl = parse_number<D>(key, value);
  else if (key == "lambda_mtsm") m.lambda_mtsm = parse_number<D>(key, value);
  else if (key == "stem_kernel") m.stem_kernel = parse_number<I>(key, value);
  else if (key == "max_len") m.max_len = parse_number<I>(key, value);
  else if (key == "lr") t.lr = parse_number<D>(key, value);
  else if (key == "batch_size") t.batch_size = parse_number<I>(key, value);
  else if (key == "max_epochs") t.max_epochs = parse_number<I>(key, value);
  else if (key == "pretrain_patience") t.pretrain_patience = parse_number<I>(key, value);
  else if (key == "pretrain_min_delta") t.pretrain_min_delta = parse_number<D>(key, value);
  else if (key == "cls_patience") t.cls_patience = parse_number<I>(key, value);
  else if (key == "cls_min_delta") t.cls_min_delta = parse_number<D>(key, value);
  else if (key == "classifier_hidden") t.classifier_hidden = parse_number<I>(key, value);
  else if (key == "grad_clip") t.grad_clip = parse_number<D>(key, value);
  else if (key == "seed") t.seed = parse_number<std::uint64_t>(key, value);
  else throw ConfigError("unknown config key '" + key + "'");
}

void apply_config_text(const std::string& text, ModelConfig& model, TrainConfig& train) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    }
    set_config_value(trim(line.substr(0, eq)), trim(line.substr(eq + 1)), model, train);
  }
}

void load_config_file(const std::string& path, ModelConfig& model, TrainConfig& train) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  apply_config_text(ss.str(), model, train);
}

std::string to_config_text(const ModelConfig& m, const TrainConfig& t) {
  std::ostringstream os;
  os << "seq_len=" << m.seq_len << "\n"
     << "embed_dim=" << m.embed_dim << "\n"
     << "latent_dim=" << m.latent_dim << "\n"
     << "n_encoder_blocks=" << m.n_encoder_blocks << "\n"
     << "n_seasonal_decoder_blocks=" << m.n_seasonal_decoder_blocks << "\n"
     << "titans_chunk=" << m.titans_chunk << "\n"
     << "titans_alpha=" << fmt(m.titans_alpha) << "\n"
     << "titans_eta=" << fmt(m.titans_eta) << "\n"
     << "titans_clamp=" << fmt(m.titans_clamp) << "\n"
     << "cms_levels=" << m.cms_levels << "\n"
     << "cms_freqs=";
  for (std::size_t i = 0; i < m.cms_freqs.size(); ++i) os << (i ? "," : "") << m.cms_freqs[i];
  os << "\n"
     << "cms_base_rate=" << fmt(m.cms_base_rate) << "\n"
     << "decomp_kernel=" << m.decomp_kernel << "\n"
     << "dropout_p=" << fmt(m.dropout_p) << "\n"
     << "mask_ratio=" << fmt(m.mask_ratio) << "\n"
     << "lambda_kl=" << fmt(m.lambda_kl) << "\n"
     << "lambda_mtsm=" << fmt(m.lambda_mtsm) << "\n"
     << "stem_kernel=" << m.stem_kernel << "\n"
     << "max_len=" << m.max_len << "\n"
     << "lr=" << fmt(t.lr) << "\n"
     << "batch_size=" << t.batch_size << "\n"
     << "max_epochs=" << t.max_epochs << "\n"
     << "pretrain_patience=" << t.pretrain_patience << "\n"
     << "pretrain_min_delta=" << fmt(t.pretrain_min_delta) << "\n"
     << "cls_patience=" << t.cls_patience << "\n"
     << "cls_min_delta=" << fmt(t.cls_min_delta) << "\n"
     << "classifier_hidden=" << t.classifier_hidden << "\n"
     << "grad_clip=" << fmt(t.grad_clip) << "\n"
     << "seed=" << t.seed << "\n";
  return os.str();
}

}  // namespace chronovae
