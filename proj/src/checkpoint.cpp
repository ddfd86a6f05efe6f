#include "chronovae/checkpoint.hpp"

#include <array>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "chronovae/classify.hpp"

namespace chronovae {

namespace {

constexpr std::array<char, 8> kMagic = {'C', 'V', 'A', 'E', 'C', 'K', 'P', 'T'};

class Writer {
 public:
  explicit Writer(std::ostream& os) : os_(os) {}
  template <typename T>
  void pod(T v) {
    os_.write(reinterpret_cast<const char*>(&v), sizeof(v));
  }
  void str(const std::string& s) {
    pod<std::uint64_t>(s.size());
    os_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void matrix(const Matrix& m) {
    pod<std::int64_t>(m.rows());
    pod<std::int64_t>(m.cols());
    os_.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(Scalar)));
  }

 private:
  std::ostream& os_;
};

class Reader {
 public:
  Reader(std::istream& is, std::string path) : is_(is), path_(std::move(path)) {}
  template <typename T>
  T pod() {
    T v{};
    is_.read(reinterpret_cast<char*>(&v), sizeof(v));
    check();
    return v;
  }
  std::string str() {
    const auto n = pod<std::uint64_t>();
    if (n > (1u << 24)) fail("string length " + std::to_string(n));
    std::string s(n, '\0');
    is_.read(s.data(), static_cast<std::streamsize>(n));
    check();
    return s;
  }
  Matrix matrix() {
    const auto rows = pod<std::int64_t>();
    const auto cols = pod<std::int64_t>();
    if (rows < 0 || cols < 0 || rows * cols > (std::int64_t{1} << 32)) fail("bad tensor shape");
    Matrix m(rows, cols);
    is_.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(Scalar)));
    check();
    return m;
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("checkpoint '" + path_ + "': " + what);
  }

 private:
  void check() const {
    if (!is_) fail("truncated file");
  }
  std::istream& is_;
  std::string path_;
};

void write_state(Writer& w, const CmsState& s) {
  w.pod<std::uint64_t>(s.memory.size());
  for (const auto& m : s.memory) w.matrix(Matrix(m));
  w.pod<std::uint64_t>(s.batch_counter);
  for (auto c : s.update_counts) w.pod<std::uint64_t>(c);
}

CmsState read_state(Reader& r, Index dim) {
  const auto levels = r.pod<std::uint64_t>();
  CmsState s = CmsState::zeros(static_cast<Index>(levels), dim);
  for (auto& m : s.memory) {
    Matrix v = r.matrix();
    if (v.rows() != 1 || v.cols() != dim) r.fail("CMS memory shape mismatch");
    m = v.row(0);
  }
  s.batch_counter = r.pod<std::uint64_t>();
  for (auto& c : s.update_counts) c = r.pod<std::uint64_t>();
  return s;
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                     const ModelParams& params, const ModelState& state) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write checkpoint '" + path + "'");
  Writer w(f);
  f.write(kMagic.data(), kMagic.size());
  w.pod(kCheckpointVersion);
  w.str(to_config_text(model_cfg, train_cfg));
  w.pod<std::uint64_t>(train_cfg.seed);
  const ParamList plist = params.parameters();
  w.pod<std::uint64_t>(plist.size());
  for (const auto& nt : plist) {
    w.str(nt.name);
    w.matrix(nt.tensor.value());
  }
  w.pod<std::uint64_t>(state.encoder.size());
  for (const auto& s : state.encoder) write_state(w, s);
  w.pod<std::uint64_t>(state.decoder.size());
  for (const auto& s : state.decoder) write_state(w, s);
  if (!f) throw Error("write failed for checkpoint '" + path + "'");

  nlohmann::json j;
  j["format_version"] = kCheckpointVersion;
  j["seed"] = train_cfg.seed;
  j["parameter_count"] = parameter_count(plist);
  j["encoder_blocks"] = state.encoder.size();
  j["decoder_blocks"] = state.decoder.size();
  std::ostringstream sum;
  sum << std::hex << std::setw(16) << std::setfill('0') << model_checksum(params, state);
  j["checksum"] = sum.str();
  j["config"] = to_config_text(model_cfg, train_cfg);
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& nt : plist) {
    tensors.push_back({{"name", nt.name}, {"shape", {nt.tensor.rows(), nt.tensor.cols()}}});
  }
  j["tensors"] = tensors;
  std::ofstream jf(path + ".json");
  if (!jf) throw Error("cannot write checkpoint manifest '" + path + ".json'");
  jf << j.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DatasetError("cannot open checkpoint '" + path + "'");
  Reader r(f, path);
  std::array<char, 8> magic{};
  f.read(magic.data(), magic.size());
  if (!f || magic != kMagic) r.fail("not a checkpoint file");
  const auto version = r.pod<std::uint32_t>();
  if (version != kCheckpointVersion) r.fail("unsupported version " + std::to_string(version));

  Checkpoint ck;
  apply_config_text(r.str(), ck.model_cfg, ck.train_cfg);
  ck.train_cfg.seed = r.pod<std::uint64_t>();
  if (auto errs = validate(ck.model_cfg); !errs.empty()) r.fail("stored config invalid: " + errs.front());

  Rng rng(0);
  ck.params = make_model(ck.model_cfg, rng);
  const ParamList plist = ck.params.parameters();
  const auto n = r.pod<std::uint64_t>();
  if (n != plist.size()) {
    r.fail("expected " + std::to_string(plist.size()) + " tensors, found " + std::to_string(n));
  }
  for (NamedTensor nt : plist) {  // copies share the parameter node
    const std::string name = r.str();
    if (name != nt.name) r.fail("expected tensor '" + nt.name + "', found '" + name + "'");
    Matrix m = r.matrix();
    if (m.rows() != nt.tensor.rows() || m.cols() != nt.tensor.cols()) r.fail("shape mismatch for " + name);
    nt.tensor.mutable_value() = std::move(m);
  }
  const Index dim = ck.model_cfg.embed_dim;
  const auto n_enc = r.pod<std::uint64_t>();
  if (n_enc != static_cast<std::uint64_t>(ck.model_cfg.n_encoder_blocks)) r.fail("encoder state count mismatch");
  for (std::uint64_t i = 0; i < n_enc; ++i) ck.state.encoder.push_back(read_state(r, dim));
  const auto n_dec = r.pod<std::uint64_t>();
  if (n_dec != static_cast<std::uint64_t>(ck.model_cfg.n_seasonal_decoder_blocks)) r.fail("decoder state count mismatch");
  for (std::uint64_t i = 0; i < n_dec; ++i) ck.state.decoder.push_back(read_state(r, dim));
  for (const auto* v : {&ck.state.encoder, &ck.state.decoder}) {
    for (const auto& s : *v) {
      if (static_cast<int>(s.memory.size()) != ck.model_cfg.cms_levels) r.fail("CMS level count mismatch");
    }
  }
  return ck;
}

}  // namespace chronovae
