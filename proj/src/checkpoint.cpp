#include "baitwatch/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace baitwatch {

namespace {

constexpr char kMagic[4] = {'B', 'W', 'C', 'K'};

template <typename U>
void put(std::string& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename U>
  U get(const char* what) {
    need(sizeof(U), what);
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      v |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(U);
    return v;
  }

  std::string_view take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) {
      throw CheckpointError(std::string("truncated checkpoint while reading ") + what + " at byte " +
                            std::to_string(pos_));
    }
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const Model<float>& model) {
  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(model.kind()));
  put<std::uint8_t>(out, model.ip() ? 1 : 0);
  const auto& tensors = model.tensors();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, p] : tensors) {
    put<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out += name;
    put<std::uint8_t>(out, static_cast<std::uint8_t>(p.value.rank()));
    for (auto d : p.value.shape) put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    for (float x : p.value.data) put<std::uint32_t>(out, std::bit_cast<std::uint32_t>(x));
  }
  return out;
}

Model<float> deserialize_checkpoint(std::string_view bytes) {
  Reader in(bytes);
  if (in.take(4, "magic") != std::string_view(kMagic, 4)) throw CheckpointError("not a checkpoint (bad magic)");
  const auto version = in.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto kind_tag = in.get<std::uint8_t>("kind");
  if (kind_tag > static_cast<std::uint8_t>(ModelKind::hre)) {
    throw CheckpointError("unknown model kind tag " + std::to_string(kind_tag));
  }
  const auto ip_tag = in.get<std::uint8_t>("ip flag");
  if (ip_tag > 1) throw CheckpointError("bad ip flag " + std::to_string(ip_tag));
  const auto count = in.get<std::uint32_t>("tensor count");

  Model<float>::Tensors tensors;
  for (std::uint32_t t = 0; t < count; ++t) {
    const auto len = in.get<std::uint16_t>("name length");
    std::string name(in.take(len, "name"));
    const auto rank = in.get<std::uint8_t>("rank");
    ad::Shape shape(rank);
    std::size_t n = 1;
    for (auto& d : shape) {
      d = in.get<std::uint32_t>("dims");
      // checked against the bytes left so a corrupt header cannot force a huge allocation
      if (d != 0 && n > in.remaining() / d) throw CheckpointError("truncated checkpoint: tensor '" + name + "' too large");
      n *= d;
    }
    if (n > in.remaining() / sizeof(float)) throw CheckpointError("truncated checkpoint: tensor '" + name + "' data");
    ad::Tensor<float> value(shape);
    for (std::size_t i = 0; i < n; ++i) value.data[i] = std::bit_cast<float>(in.get<std::uint32_t>("data"));
    if (!tensors.emplace(std::move(name), std::move(value)).second) throw CheckpointError("duplicate tensor name");
  }
  if (!in.done()) throw CheckpointError("trailing bytes after last tensor");

  try {
    return Model<float>::from_tensors(static_cast<ModelKind>(kind_tag), ip_tag == 1, std::move(tensors));
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("checkpoint does not match its model kind: ") + e.what());
  }
}

void save_checkpoint(const std::string& path, const Model<float>& model) {
  const auto bytes = serialize_checkpoint(model);
  const auto tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Model<float> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_checkpoint(buf.str());
}

}  // namespace baitwatch
