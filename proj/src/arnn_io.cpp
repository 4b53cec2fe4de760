#include <zlib.h>

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "fxh/arnn.hpp"
#include "fxh/errors.hpp"

// Layout (all integers little-endian):
//   "ARNN" | u16 version | u32 n + n bytes descriptor text
//   | u32 tensor count | per tensor: u32 n + name, u32 rank, u64 dims[rank], f64 data[]
//   | u32 CRC-32 of everything before it

namespace fxh {

namespace {

constexpr char kMagic[4] = {'A', 'R', 'N', 'N'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  template <typename U>
  void uint(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    uint(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  std::vector<std::uint8_t>& data() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}
  template <typename U>
  U uint() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<U>(b_[pos_ + i]) << (8 * i));
    pos_ += sizeof(U);
    return v;
  }
  double f64() { return std::bit_cast<double>(uint<std::uint64_t>()); }
  std::string str() {
    const auto n = uint<std::uint32_t>();
    need(n);
    std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return b_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) throw DataError("weight file is truncated");
  }
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

std::uint32_t crc32_of(std::span<const std::uint8_t> b) {
  uLong crc = crc32(0L, Z_NULL, 0);
  std::size_t off = 0;
  while (off < b.size()) {
    const auto n = static_cast<uInt>(std::min<std::size_t>(b.size() - off, 1u << 30));
    crc = crc32(crc, b.data() + off, n);
    off += n;
  }
  return static_cast<std::uint32_t>(crc);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += fmt(v[i]);
  }
  return s;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::strtod(item.c_str(), nullptr));
  }
  return out;
}

std::string metadata_text(const TrainingMetadata& m) {
  std::string s;
  s += "meta.epochs_run=" + std::to_string(m.epochs_run) + "\n";
  s += "meta.best_epoch=" + std::to_string(m.best_epoch) + "\n";
  s += "meta.best_val_loss=" + fmt(m.best_val_loss) + "\n";
  s += "meta.seed=" + std::to_string(m.seed) + "\n";
  s += "meta.train_loss=" + list(m.train_loss) + "\n";
  s += "meta.val_loss=" + list(m.val_loss) + "\n";
  return s;
}

void apply_metadata(TrainingMetadata& m, const std::string& key, const std::string& val) {
  if (key == "meta.epochs_run") m.epochs_run = std::stoull(val);
  else if (key == "meta.best_epoch") m.best_epoch = std::stoull(val);
  else if (key == "meta.best_val_loss") m.best_val_loss = std::strtod(val.c_str(), nullptr);
  else if (key == "meta.seed") m.seed = std::stoull(val);
  else if (key == "meta.train_loss") m.train_loss = parse_list(val);
  else if (key == "meta.val_loss") m.val_loss = parse_list(val);
}

}  // namespace

std::vector<std::uint8_t> serialize_weights(const ArnnWeights& w) {
  Writer out;
  out.bytes(kMagic, 4);
  out.uint(kWeightFormatVersion);
  out.str(w.arch.descriptor() + metadata_text(w.meta));
  out.uint(static_cast<std::uint32_t>(w.params.size()));
  for (std::size_t i = 0; i < w.params.size(); ++i) {
    const nn::Tensor& t = w.params[i];
    out.str(w.params.name(i));
    out.uint(static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape) out.uint(static_cast<std::uint64_t>(d));
    for (double v : t.data) out.f64(v);
  }
  const std::uint32_t crc = crc32_of(out.data());
  out.uint(crc);
  return std::move(out.data());
}

ArnnWeights deserialize_weights(std::span<const std::uint8_t> bytes, const ArnnArchitecture* expected) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw DataError("not an ARNN weight file (bad magic)");
  if (bytes.size() < 4 + 2 + 4 + 4 + 4)
    throw DataError("weight file checksum mismatch: file is truncated");
  const auto body = bytes.first(bytes.size() - 4);
  Reader tail(bytes.last(4));
  if (crc32_of(body) != tail.uint<std::uint32_t>())
    throw DataError("weight file checksum mismatch: file is corrupted or truncated");

  Reader in(body.subspan(4));
  const auto version = in.uint<std::uint16_t>();
  if (version != kWeightFormatVersion)
    throw DataError("unsupported weight file version " + std::to_string(version) + " (expected " +
                    std::to_string(kWeightFormatVersion) + ")");

  ArnnWeights w;
  {
    std::istringstream text(in.str());
    std::string line;
    std::string arch_text;
    while (std::getline(text, line)) {
      if (line.rfind("meta.", 0) == 0) {
        const auto eq = line.find('=');
        if (eq != std::string::npos) apply_metadata(w.meta, line.substr(0, eq), line.substr(eq + 1));
      } else {
        arch_text += line + "\n";
      }
    }
    try {
      w.arch = ArnnArchitecture::from_descriptor(arch_text);
    } catch (const std::exception& e) {
      throw DataError(std::string("weight file has an invalid architecture descriptor: ") + e.what());
    }
  }
  if (expected && !(*expected == w.arch))
    throw DataError("architecture mismatch: weight file holds\n" + w.arch.descriptor() + "but expected\n" +
                    expected->descriptor());

  const auto count = in.uint<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = in.str();
    const auto rank = in.uint<std::uint32_t>();
    if (rank > 8) throw DataError("tensor '" + name + "' has implausible rank " + std::to_string(rank));
    std::vector<std::size_t> shape(rank);
    std::size_t n = 1;
    for (auto& d : shape) {
      d = static_cast<std::size_t>(in.uint<std::uint64_t>());
      n *= d;
    }
    if (n > in.remaining() / 8) throw DataError("tensor '" + name + "' exceeds the file size");
    std::vector<double> data(n);
    for (double& v : data) v = in.f64();
    w.params.add(std::move(name), nn::Tensor(std::move(shape), std::move(data)));
  }
  if (in.remaining() != 0) throw DataError("weight file has trailing bytes after the last tensor");

  const nn::ParameterSet layout = parameter_layout(w.arch);
  if (!layout.compatible_with(w.params))
    throw DataError("weight tensors are inconsistent with the stored architecture (shape mismatch)");
  return w;
}

void save_weights(const ArnnWeights& w, const std::filesystem::path& path) {
  const auto bytes = serialize_weights(w);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing " + path.string());
}

ArnnWeights load_weights(const std::filesystem::path& path, const ArnnArchitecture* expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open weight file " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_weights(bytes, expected);
}

}  // namespace fxh
