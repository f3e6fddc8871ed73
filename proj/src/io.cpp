#include "toeplista/io.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include "json.hpp"

namespace toeplista {

namespace {

using nlohmann::json;

constexpr std::array<char, 4> kDatasetMagic{'H', 'U', 'D', '1'};
constexpr std::array<char, 4> kModelMagic{'H', 'U', 'N', '1'};
constexpr std::array<char, 4> kIqMagic{'H', 'I', 'Q', '1'};

class Writer {
 public:
  void magic(const std::array<char, 4>& m) { buf_.append(m.data(), m.size()); }
  void u32(std::size_t v) {
    if (v > std::numeric_limits<std::uint32_t>::max()) throw FormatError("value does not fit in u32");
    put(static_cast<std::uint64_t>(v), 4);
  }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  void bytes(const std::string& s) { buf_ += s; }
  void planes(const ComplexArray& a) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      f64(a.re()[i]);
      f64(a.im()[i]);
    }
  }
  const std::string& data() const noexcept { return buf_; }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xffU));
  }
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string data) : data_(std::move(data)) {}

  void magic(const std::array<char, 4>& m, const char* what) {
    need(4);
    if (std::memcmp(data_.data() + pos_, m.data(), 4) != 0) {
      throw FormatError(std::string(what) + ": bad magic");
    }
    pos_ += 4;
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  double f64() { return std::bit_cast<double>(get(8)); }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void planes(ComplexArray& a) {
    need(16 * a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      a.re()[i] = f64();
      a.im()[i] = f64();
    }
  }
  void expect_end(const char* what) const {
    if (pos_ != data_.size()) throw FormatError(std::string(what) + ": trailing bytes");
  }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw FormatError("unexpected end of file");
  }
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::string data_;
  std::size_t pos_ = 0;
};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::filesystem::path sidecar(const std::filesystem::path& path) {
  std::filesystem::path p = path;
  p += ".json";
  return p;
}

void write_json(const std::filesystem::path& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

std::optional<json> read_sidecar(const std::filesystem::path& path) {
  const auto p = sidecar(path);
  if (!std::filesystem::exists(p)) return std::nullopt;
  try {
    return json::parse(read_file(p));
  } catch (const json::exception& e) {
    throw FormatError("malformed sidecar " + p.string() + ": " + e.what());
  }
}

json grid_json(const GridShape& g) {
  json j;
  j["kind"] = g.is_2d() ? "2D" : "1D";
  if (g.is_2d()) {
    j["M1"] = g.m1;
    j["M2"] = g.m2;
  } else {
    j["M"] = g.m1;
  }
  return j;
}

json sampling_json(const SamplingSet& s) { return json{{"omega", s.omega}, {"sampling_seed", s.seed}}; }

SamplingSet sampling_from_json(const json& j) {
  SamplingSet s;
  s.omega = j.at("omega").get<std::vector<std::size_t>>();
  s.seed = j.value("sampling_seed", std::uint64_t{0});
  return s;
}

GridShape read_grid(Reader& r, std::uint32_t kind) {
  if (kind == 1) return GridShape::one_d(r.u32());
  if (kind == 2) {
    const std::size_t m1 = r.u32();
    const std::size_t m2 = r.u32();
    return GridShape::two_d(m1, m2);
  }
  throw FormatError("unknown problem kind tag " + std::to_string(kind));
}

void write_grid(Writer& w, const GridShape& g) {
  w.u32(g.is_2d() ? 2 : 1);
  w.u32(g.m1);
  if (g.is_2d()) w.u32(g.m2);
}

}  // namespace

void save_dataset(const std::filesystem::path& path, const Dataset& ds) {
  const DatasetMeta& m = ds.meta;
  if (ds.Y.rows() != m.n_obs || ds.X.rows() != m.grid.total() || ds.Y.cols() != m.n_samples ||
      ds.X.cols() != m.n_samples) {
    throw DimensionError("save_dataset: matrices do not match the header");
  }
  Writer w;
  w.magic(kDatasetMagic);
  write_grid(w, m.grid);
  w.u32(m.n_obs);
  w.u32(m.n_samples);
  w.u32(m.sparsity);
  w.u64(m.seed);
  w.f64(m.sigma2);
  w.planes(ds.Y);
  w.planes(ds.X);
  write_file(path, w.data());

  json j{{"format", "HUD1"}, {"grid", grid_json(m.grid)}, {"N", m.n_obs}, {"n_samples", m.n_samples},
         {"K", m.sparsity}, {"seed", m.seed}, {"sigma2", m.sigma2}, {"sampling", sampling_json(m.sampling)}};
  write_json(sidecar(path), j);
}

Dataset load_dataset(const std::filesystem::path& path) {
  Reader r(read_file(path));
  r.magic(kDatasetMagic, "dataset");
  DatasetMeta m;
  m.grid = read_grid(r, r.u32());
  m.n_obs = r.u32();
  m.n_samples = r.u32();
  m.sparsity = r.u32();
  m.seed = r.u64();
  m.sigma2 = r.f64();
  if (m.grid.total() == 0 || m.n_obs == 0) throw FormatError("dataset: empty dimensions");
  Dataset ds{ComplexArray(m.n_obs, m.n_samples), ComplexArray(m.grid.total(), m.n_samples), m};
  r.planes(ds.Y);
  r.planes(ds.X);
  r.expect_end("dataset");
  if (const auto j = read_sidecar(path); j && j->contains("sampling")) {
    try {
      ds.meta.sampling = sampling_from_json(j->at("sampling"));
    } catch (const json::exception& e) {
      throw FormatError(std::string("dataset sidecar: ") + e.what());
    }
    if (ds.meta.sampling.omega.size() != m.n_obs) throw FormatError("dataset sidecar: |omega| differs from N");
  }
  return ds;
}

void save_model(const std::filesystem::path& path, const UnfoldedNetwork& net, const ModelInfo& info) {
  const NetworkDims& d = net.dims();
  Writer w;
  w.magic(kModelMagic);
  w.u32(static_cast<std::uint32_t>(net.arch()));
  w.u32(net.depth());
  write_grid(w, d.grid);
  w.u32(d.n_obs);
  for (const auto plane : net.planes()) {
    for (double v : plane) w.f64(v);
  }
  write_file(path, w.data());

  json j{{"format", "HUN1"}, {"arch", to_string(net.arch())}, {"layers", net.depth()},
         {"grid", grid_json(d.grid)}, {"N", d.n_obs}};
  const ParamCount pc = param_count(net);
  j["parameters"] = {{"total", pc.total}, {"inhibition", pc.inhibition_total}};
  if (info.sampling) j["sampling"] = sampling_json(*info.sampling);
  if (info.train) {
    const TrainConfig& c = *info.train;
    j["train"] = {{"learning_rate", c.learning_rate}, {"batch_size", c.batch_size}, {"epochs", c.epochs},
                  {"adam_beta1", c.adam_beta1},       {"adam_beta2", c.adam_beta2}, {"adam_eps", c.adam_eps},
                  {"lr_decay_patience", c.lr_decay_patience}, {"max_lr_decays", c.max_lr_decays},
                  {"seed", c.seed}};
  }
  if (info.report) {
    const TrainReport& rep = *info.report;
    j["metrics"] = {{"initial_val_nmse", rep.initial_val}, {"best_val_nmse", rep.best_val},
                    {"best_epoch", rep.best_epoch}, {"epochs_run", rep.val_history.size()}};
  }
  write_json(sidecar(path), j);
}

UnfoldedNetwork load_model(const std::filesystem::path& path, ModelInfo* info) {
  Reader r(read_file(path));
  r.magic(kModelMagic, "model");
  const std::uint32_t tag = r.u32();
  if (tag < 1 || tag > 4) throw FormatError("model: unknown architecture tag " + std::to_string(tag));
  const auto arch = static_cast<Architecture>(tag);
  const std::size_t depth = r.u32();
  NetworkDims dims;
  dims.grid = read_grid(r, r.u32());
  dims.n_obs = r.u32();
  UnfoldedNetwork net = [&] {
    try {
      return UnfoldedNetwork::zeros(arch, dims, depth);
    } catch (const std::invalid_argument& e) {
      throw FormatError(std::string("model: inconsistent header: ") + e.what());
    }
  }();
  for (auto plane : net.planes()) {
    for (double& v : plane) v = r.f64();
  }
  r.expect_end("model");
  for (const auto& layer : net.layers()) {
    if (!(layer.theta >= 0.0)) throw FormatError("model: negative threshold");
  }
  if (info != nullptr) {
    *info = {};
    if (const auto j = read_sidecar(path); j && j->contains("sampling")) {
      try {
        info->sampling = sampling_from_json(j->at("sampling"));
      } catch (const json::exception& e) {
        throw FormatError(std::string("model sidecar: ") + e.what());
      }
    }
  }
  return net;
}

void save_iq_grid(const std::filesystem::path& path, const IqGrid& grid) {
  if (grid.samples.size() != grid.omega.size()) throw DimensionError("save_iq_grid: |omega| differs from sample count");
  const json header{{"M1", grid.m1}, {"M2", grid.m2}, {"omega", grid.omega}};
  const std::string text = header.dump();
  Writer w;
  w.magic(kIqMagic);
  w.u32(text.size());
  w.bytes(text);
  w.planes(grid.samples);
  write_file(path, w.data());
}

IqGrid load_iq_grid(const std::filesystem::path& path) {
  Reader r(read_file(path));
  r.magic(kIqMagic, "IQ grid");
  const std::size_t len = r.u32();
  IqGrid g;
  try {
    const json header = json::parse(r.bytes(len));
    g.m1 = header.at("M1").get<std::size_t>();
    g.m2 = header.at("M2").get<std::size_t>();
    g.omega = header.at("omega").get<std::vector<std::size_t>>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("IQ grid header: ") + e.what());
  }
  if (g.m1 == 0 || g.m2 == 0) throw FormatError("IQ grid: empty grid");
  g.samples = ComplexArray(g.omega.size());
  r.planes(g.samples);
  // Any extra payload means the sample count disagrees with omega.
  r.expect_end("IQ grid: |omega| differs from sample count;");
  return g;
}

IqObservation ingest_iq_grid(const std::filesystem::path& path) {
  IqGrid g = load_iq_grid(path);
  SamplingSet s{std::move(g.omega), 0};
  try {
    return {Dictionary(GridShape::two_d(g.m1, g.m2), std::move(s)), std::move(g.samples)};
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("IQ grid: ") + e.what());
  }
}

IqObservation ingest_iq_grid(const std::filesystem::path& path, std::size_t m1, std::size_t m2,
                             const std::vector<std::size_t>& omega) {
  const IqGrid g = load_iq_grid(path);
  if (g.m1 != m1 || g.m2 != m2) throw FormatError("IQ grid: header grid differs from the declared grid");
  if (g.omega != omega) throw FormatError("IQ grid: header sampling set differs from the declared one");
  return {Dictionary(GridShape::two_d(m1, m2), SamplingSet{omega, 0}), g.samples};
}

}  // namespace toeplista
