#include "dxml/model_file.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include <zlib.h>

#include "dxml/error.hpp"

namespace dxml {
namespace {

constexpr char kMagic[4] = {'D', 'X', 'M', 'L'};

class Writer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void size(std::size_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void f32(double v) { u32(std::bit_cast<std::uint32_t>(static_cast<float>(v))); }
  void f32s(std::span<const double> vs) {
    for (double v : vs) f32(v);
  }

  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  Reader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

  std::uint8_t u8() { return *take(1); }
  std::uint32_t u32() {
    const auto* p = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    const auto* p = take(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
  }
  std::size_t size() {
    const auto v = u64();
    if (v > size_) throw DataError("corrupt model: implausible size field");
    return static_cast<std::size_t>(v);
  }
  /// A count of `elem_bytes`-sized items that must still fit in the payload.
  std::size_t count(std::size_t elem_bytes) {
    const auto v = size();
    if (elem_bytes && v > (size_ - pos_) / elem_bytes)
      throw DataError("corrupt model: array exceeds payload");
    return v;
  }
  /// Throws unless rows * cols four-byte values remain in the payload.
  void need_f32(std::size_t rows, std::size_t cols) {
    const std::size_t avail = (size_ - pos_) / 4;
    if (cols != 0 && rows > avail / cols) throw DataError("corrupt model: tensor exceeds payload");
  }
  double f64() { return std::bit_cast<double>(u64()); }
  double f32() { return static_cast<double>(std::bit_cast<float>(u32())); }
  void f32s(std::span<double> out) {
    if (out.size() > (size_ - pos_) / 4) throw DataError("corrupt model: tensor exceeds payload");
    for (double& v : out) v = f32();
  }
  bool done() const { return pos_ == size_; }

 private:
  const std::uint8_t* take(std::size_t n) {
    if (n > size_ - pos_) throw DataError("corrupt model: payload ends early");
    const auto* p = data_ + pos_;
    pos_ += n;
    return p;
  }

  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

std::uint32_t crc_of(const std::uint8_t* data, std::size_t size) {
  uLong crc = crc32(0L, Z_NULL, 0);
  while (size > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(size, 1u << 30));
    crc = crc32(crc, data, chunk);
    data += chunk;
    size -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

void write_config(Writer& w, const RunConfig& c) {
  w.u8(static_cast<std::uint8_t>(c.scale));
  const auto& dw = c.deepwalk;
  w.size(dw.dim);
  w.size(dw.walks_per_node);
  w.size(dw.walk_length);
  w.size(dw.window);
  w.size(dw.negative_samples);
  w.size(dw.epochs);
  w.f64(dw.initial_learning_rate);
  w.f64(dw.min_learning_rate);
  w.u64(dw.rng_seed);
  w.u8(dw.weighted_walks);
  w.size(dw.threads);
  const auto& t = c.train;
  w.f64(t.learning_rate);
  w.f64(t.momentum);
  w.f64(t.weight_decay);
  w.f64(t.dropout_rate);
  w.size(t.epochs);
  w.size(t.minibatch_size);
  w.u64(t.rng_seed);
  w.u8(static_cast<std::uint8_t>(t.reduction));
  w.u8(t.shuffle);
  w.size(t.threads);
  w.size(c.hidden);
  w.u8(c.use_bias);
  w.u8(c.normalize_targets);
  w.size(c.clusters);
  w.size(c.kmeans_max_iters);
  w.u64(c.kmeans_seed);
  w.size(c.k);
  w.size(c.p);
  w.u8(static_cast<std::uint8_t>(c.weighting));
  w.u8(static_cast<std::uint8_t>(c.feature_norm));
  w.u64(c.seed);
  w.size(c.threads);
}

template <typename E>
E read_enum(Reader& r, std::uint8_t max) {
  const auto v = r.u8();
  if (v > max) throw DataError("corrupt model: enum value out of range");
  return static_cast<E>(v);
}

bool read_bool(Reader& r) { return read_enum<std::uint8_t>(r, 1) != 0; }

RunConfig read_config(Reader& r) {
  RunConfig c;
  c.scale = read_enum<Scale>(r, 1);
  auto& dw = c.deepwalk;
  dw.dim = r.size();
  dw.walks_per_node = r.size();
  dw.walk_length = r.size();
  dw.window = r.size();
  dw.negative_samples = r.size();
  dw.epochs = r.size();
  dw.initial_learning_rate = r.f64();
  dw.min_learning_rate = r.f64();
  dw.rng_seed = r.u64();
  dw.weighted_walks = read_bool(r);
  dw.threads = r.size();
  auto& t = c.train;
  t.learning_rate = r.f64();
  t.momentum = r.f64();
  t.weight_decay = r.f64();
  t.dropout_rate = r.f64();
  t.epochs = r.size();
  t.minibatch_size = r.size();
  t.rng_seed = r.u64();
  t.reduction = read_enum<LossReduction>(r, 1);
  t.shuffle = read_bool(r);
  t.threads = r.size();
  c.hidden = r.size();
  c.use_bias = read_bool(r);
  c.normalize_targets = read_bool(r);
  c.clusters = r.size();
  c.kmeans_max_iters = r.size();
  c.kmeans_seed = r.u64();
  c.k = r.size();
  c.p = r.size();
  c.weighting = read_enum<Weighting>(r, 1);
  c.feature_norm = read_enum<FeatureNorm>(r, 1);
  c.seed = r.u64();
  c.threads = r.size();
  return c;
}

}  // namespace

std::vector<std::uint8_t> serialize_model(const ModelArtifacts& model) {
  const auto& knn = model.knn;
  const auto shape = knn.net.shape();
  Writer w;
  write_config(w, model.config);
  // dims: d, H, l, L, m, n_train
  w.size(shape.input_dim);
  w.size(shape.hidden);
  w.size(shape.output_dim);
  w.size(model.num_labels);
  w.size(knn.clusters.num_clusters());
  w.size(knn.train_embeddings.count());

  w.size(model.label_embeddings.dim());
  w.size(model.label_embeddings.count());
  w.f32s(model.label_embeddings.flat());

  w.u8(knn.net.use_bias);
  w.f32s(knn.net.w1.flat());
  w.f32s(knn.net.b1);
  w.f32s(knn.net.w2.flat());
  w.f32s(knn.net.b2);

  w.f32s(knn.clusters.centers.flat());
  for (auto a : knn.clusters.assignments) w.u32(a);
  w.f32s(knn.train_embeddings.flat());
  for (const auto& labels : knn.train_labels) {
    w.size(labels.size());
    for (auto l : labels) w.u32(l);
  }

  Writer file;
  for (char c : kMagic) file.u8(static_cast<std::uint8_t>(c));
  file.u32(kModelFormatVersion);
  file.u64(w.bytes().size());
  auto& out = file.bytes();
  out.insert(out.end(), w.bytes().begin(), w.bytes().end());
  file.u32(crc_of(w.bytes().data(), w.bytes().size()));
  return std::move(out);
}

ModelArtifacts deserialize_model(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw DataError("not a DXML model file (bad magic)");
  if (bytes.size() < 16) throw DataError("checksum error: model file truncated");
  Reader header(bytes.data() + 4, 12);
  const auto version = header.u32();
  if (version != kModelFormatVersion)
    throw DataError("unsupported version " + std::to_string(version) + " (this build reads version " +
                    std::to_string(kModelFormatVersion) + ")");
  const auto payload_size = header.u64();
  if (payload_size > bytes.size() - 16 || bytes.size() - 16 - payload_size != 4)
    throw DataError("checksum error: model file truncated or has trailing bytes");
  const std::uint8_t* payload = bytes.data() + 16;
  Reader trailer(payload + payload_size, 4);
  if (trailer.u32() != crc_of(payload, static_cast<std::size_t>(payload_size)))
    throw DataError("checksum error: model payload does not match its CRC-32");

  Reader r(payload, static_cast<std::size_t>(payload_size));
  ModelArtifacts model;
  model.config = read_config(r);
  const auto d = r.size(), H = r.size(), l = r.size(), L = r.size(), m = r.size(),
             n = r.size();
  model.num_features = d;
  model.num_labels = L;
  model.knn.num_labels = L;

  const auto v_dim = r.size(), v_count = r.size();
  if (v_dim != l || v_count != L) throw DataError("corrupt model: label embedding shape mismatch");
  r.need_f32(l, L);
  model.label_embeddings = EmbeddingMatrix(l, L);
  r.f32s(model.label_embeddings.flat());

  auto& net = model.knn.net;
  net.use_bias = read_bool(r);
  r.need_f32(d, H);
  net.w1 = Matrix(d, H);
  r.f32s(net.w1.flat());
  r.need_f32(H, 1);
  net.b1.assign(H, 0.0);
  r.f32s(net.b1);
  r.need_f32(H, l);
  net.w2 = Matrix(H, l);
  r.f32s(net.w2.flat());
  r.need_f32(l, 1);
  net.b2.assign(l, 0.0);
  r.f32s(net.b2);

  auto& clusters = model.knn.clusters;
  r.need_f32(l, m);
  clusters.centers = EmbeddingMatrix(l, m);
  r.f32s(clusters.centers.flat());
  r.need_f32(n, 1);
  clusters.assignments.resize(n);
  for (auto& a : clusters.assignments) {
    a = r.u32();
    if (a >= m) throw DataError("corrupt model: cluster assignment out of range");
  }
  clusters.members = members_from_assignments(clusters.assignments, m);
  r.need_f32(l, n);
  model.knn.train_embeddings = EmbeddingMatrix(l, n);
  r.f32s(model.knn.train_embeddings.flat());
  model.knn.train_labels.resize(n);
  for (auto& labels : model.knn.train_labels) {
    labels.resize(r.count(4));
    for (auto& lab : labels) {
      lab = r.u32();
      if (lab >= L) throw DataError("corrupt model: training label out of range");
    }
  }
  if (!r.done()) throw DataError("corrupt model: unexpected bytes after payload");
  return model;
}

void save_model(const ModelArtifacts& model, const std::string& path) {
  const auto bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write model '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for model '" + path + "'");
}

ModelArtifacts load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return deserialize_model(bytes);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

}  // namespace dxml
