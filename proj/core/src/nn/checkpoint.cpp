#include "loopcompat/nn/checkpoint.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "loopcompat/error.hpp"

namespace loopcompat::nn {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

using nlohmann::json;

std::string_view to_string(Mixing mixing) { return mixing == Mixing::Sum ? "sum" : "stack"; }

Mixing parse_mixing(std::string_view text) {
  if (text == "sum") return Mixing::Sum;
  if (text == "stack") return Mixing::Stack;
  fail(ErrorKind::InvalidInput, "unknown mixing mode '" + std::string(text) + "'");
}

void Standardizer::apply(Matrix& features) const {
  if (empty()) return;
  require(features.cols == mean.size(), ErrorKind::ShapeError,
          "standardizer fitted on " + std::to_string(mean.size()) + " bins, input has " +
              std::to_string(features.cols));
  for (std::size_t r = 0; r < features.rows; ++r) {
    auto row = features.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] = (row[c] - mean[c]) / scale[c];
  }
}

Standardizer Standardizer::fit(const std::vector<const Matrix*>& features) {
  require(!features.empty(), ErrorKind::InsufficientData, "standardizer: no features");
  const std::size_t cols = features.front()->cols;
  std::vector<double> sum(cols, 0.0), sq(cols, 0.0);
  double count = 0.0;
  for (const Matrix* m : features) {
    require(m->cols == cols, ErrorKind::ShapeError, "standardizer: inconsistent feature widths");
    for (std::size_t r = 0; r < m->rows; ++r) {
      auto row = m->row(r);
      for (std::size_t c = 0; c < cols; ++c) sum[c] += row[c];
    }
    count += static_cast<double>(m->rows);
  }
  require(count > 0.0, ErrorKind::InsufficientData, "standardizer: empty features");
  Standardizer out;
  out.mean.resize(cols);
  for (std::size_t c = 0; c < cols; ++c) out.mean[c] = sum[c] / count;
  for (const Matrix* m : features) {
    for (std::size_t r = 0; r < m->rows; ++r) {
      auto row = m->row(r);
      for (std::size_t c = 0; c < cols; ++c) sq[c] += (row[c] - out.mean[c]) * (row[c] - out.mean[c]);
    }
  }
  out.scale.resize(cols);
  for (std::size_t c = 0; c < cols; ++c) {
    const double sd = std::sqrt(sq[c] / count);
    out.scale[c] = sd > 1e-8 ? sd : 1.0;
  }
  return out;
}

std::vector<Blob> ModelCheckpoint::capture(Network& net) {
  std::vector<Blob> blobs;
  for (Parameter* p : net.state()) blobs.push_back(Blob{p->name, p->dims, p->value});
  return blobs;
}

void ModelCheckpoint::restore(Network& net) const {
  auto state = net.state();
  require(state.size() == blobs.size(), ErrorKind::ShapeError,
          "checkpoint has " + std::to_string(blobs.size()) + " blobs, model expects " + std::to_string(state.size()));
  for (std::size_t i = 0; i < state.size(); ++i) {
    const Blob& b = blobs[i];
    Parameter& p = *state[i];
    require(b.name == p.name, ErrorKind::ShapeError, "checkpoint blob '" + b.name + "' where '" + p.name + "' expected");
    require(b.dims == p.dims && b.values.size() == p.value.size(), ErrorKind::ShapeError,
            "checkpoint blob '" + b.name + "' has the wrong shape");
    p.value = b.values;
  }
}

Network ModelCheckpoint::instantiate() const {
  Network net(kind, arch);
  restore(net);
  return net;
}

namespace {

constexpr std::array<char, 8> kMagic = {'L', 'C', 'K', 'P', 'T', '\0', '\0', '\1'};

json header_json(const ModelCheckpoint& c) {
  json h;
  h["kind"] = to_string(c.kind);
  h["arch"] = {{"channels", c.arch.channels},
               {"height", c.arch.height},
               {"width", c.arch.width},
               {"dropout", c.arch.dropout},
               {"seed", c.arch.seed}};
  h["train"] = {{"kind", to_string(c.train.kind)},
                {"learning_rate", c.train.learning_rate},
                {"batch_size", c.train.batch_size},
                {"epochs", c.train.epochs},
                {"seed", c.train.seed},
                {"negative_strategy", c.train.negative_strategy},
                {"margin", c.train.margin},
                {"mixing", to_string(c.train.mixing)},
                {"dropout", c.train.dropout}};
  json history = json::array();
  for (const auto& e : c.history) {
    history.push_back({{"epoch", e.epoch},
                       {"train_loss", e.train_loss},
                       {"val_loss", e.val_loss},
                       {"val_metric", e.val_metric}});
  }
  h["history"] = history;
  h["best_epoch"] = c.best_epoch;
  return h;
}

void parse_header(const json& h, ModelCheckpoint& c) {
  c.kind = parse_model_kind(h.at("kind").get<std::string>());
  const auto& a = h.at("arch");
  c.arch.channels = a.at("channels").get<std::size_t>();
  c.arch.height = a.at("height").get<std::size_t>();
  c.arch.width = a.at("width").get<std::size_t>();
  c.arch.dropout = a.at("dropout").get<double>();
  c.arch.seed = a.at("seed").get<std::uint64_t>();
  const auto& t = h.at("train");
  c.train.kind = parse_model_kind(t.at("kind").get<std::string>());
  c.train.learning_rate = t.at("learning_rate").get<double>();
  c.train.batch_size = t.at("batch_size").get<std::size_t>();
  c.train.epochs = t.at("epochs").get<std::size_t>();
  c.train.seed = t.at("seed").get<std::uint64_t>();
  c.train.negative_strategy = t.at("negative_strategy").get<std::string>();
  c.train.margin = t.at("margin").get<double>();
  c.train.mixing = parse_mixing(t.at("mixing").get<std::string>());
  c.train.dropout = t.at("dropout").get<double>();
  for (const auto& e : h.at("history")) {
    c.history.push_back(EpochRecord{e.at("epoch").get<std::size_t>(), e.at("train_loss").get<double>(),
                                    e.at("val_loss").get<double>(), e.at("val_metric").get<double>()});
  }
  c.best_epoch = h.at("best_epoch").get<std::size_t>();
}

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

void put_doubles(std::ostream& out, const std::vector<double>& v) {
  put<std::uint64_t>(out, v.size());
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint64_t>(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

class Reader {
 public:
  Reader(std::istream& in, std::string path) : in_(in), path_(std::move(path)) {}

  template <class T>
  T get() {
    T v{};
    bytes(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
  }

  std::string string(std::uint64_t limit) {
    const auto n = get<std::uint64_t>();
    if (n > limit) corrupt("string length out of range");
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }

  std::vector<double> doubles(std::uint64_t expected) {
    const auto n = get<std::uint64_t>();
    if (n != expected) corrupt("blob length does not match its dims");
    std::vector<double> v(n);
    bytes(reinterpret_cast<char*>(v.data()), n * sizeof(double));
    return v;
  }

  void bytes(char* dst, std::size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) corrupt("truncated file");
  }

  [[noreturn]] void corrupt(const std::string& why) const {
    fail(ErrorKind::InvalidInput, "checkpoint " + path_ + ": " + why);
  }

 private:
  std::istream& in_;
  std::string path_;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelCheckpoint& ckpt) {
  json h = header_json(ckpt);
  h["standardizer"] = {{"mean", ckpt.standardizer.mean}, {"scale", ckpt.standardizer.scale}};
  const std::string header = h.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(out.good(), ErrorKind::InvalidInput, "cannot write checkpoint " + tmp.string());
    out.write(kMagic.data(), kMagic.size());
    put<std::uint32_t>(out, kCheckpointVersion);
    put_string(out, header);
    put<std::uint64_t>(out, ckpt.blobs.size());
    for (const Blob& b : ckpt.blobs) {
      put_string(out, b.name);
      put<std::uint32_t>(out, static_cast<std::uint32_t>(b.dims.size()));
      for (std::size_t d : b.dims) put<std::uint64_t>(out, d);
      put_doubles(out, b.values);
    }
    out.flush();
    require(out.good(), ErrorKind::InvalidInput, "failed writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

ModelCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::InvalidInput, "cannot open checkpoint " + path.string());
  Reader r(in, path.string());
  std::array<char, 8> magic{};
  r.bytes(magic.data(), magic.size());
  if (magic != kMagic) r.corrupt("not a checkpoint file");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) r.corrupt("unsupported version " + std::to_string(version));

  ModelCheckpoint ckpt;
  json h;
  try {
    h = json::parse(r.string(std::uint64_t{1} << 30));
    parse_header(h, ckpt);
    ckpt.standardizer.mean = h.at("standardizer").at("mean").get<std::vector<double>>();
    ckpt.standardizer.scale = h.at("standardizer").at("scale").get<std::vector<double>>();
  } catch (const json::exception& e) {
    r.corrupt(std::string("bad header: ") + e.what());
  }

  const auto count = r.get<std::uint64_t>();
  if (count > 4096) r.corrupt("implausible blob count");
  for (std::uint64_t i = 0; i < count; ++i) {
    Blob b;
    b.name = r.string(4096);
    const auto ndims = r.get<std::uint32_t>();
    if (ndims > 8) r.corrupt("implausible rank for blob " + b.name);
    std::uint64_t elements = 1;
    for (std::uint32_t d = 0; d < ndims; ++d) {
      b.dims.push_back(r.get<std::uint64_t>());
      elements *= b.dims.back();
    }
    b.values = r.doubles(elements);
    ckpt.blobs.push_back(std::move(b));
  }
  // Validate against the architecture the header describes.
  Network probe(ckpt.kind, ckpt.arch);
  ckpt.restore(probe);
  return ckpt;
}

void write_training_log(const std::filesystem::path& path, const std::vector<EpochRecord>& history) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  require(out.good(), ErrorKind::InvalidInput, "cannot write training log " + path.string());
  out.precision(17);
  out << "epoch,train_loss,val_loss,val_metric\n";
  for (const auto& e : history) {
    out << e.epoch << ',' << e.train_loss << ',' << e.val_loss << ',' << e.val_metric << '\n';
  }
}

}  // namespace loopcompat::nn
