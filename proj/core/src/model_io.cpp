#include "ink2tex/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>
#include <vector>

#include "ink2tex/errors.hpp"

namespace ink2tex {
namespace {

constexpr std::size_t kMagicSize = sizeof(kModelMagic) - 1;

template <class T>
void put_le(std::string& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  const U bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <class T>
  T get() {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    need(sizeof(U));
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      bits |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(U);
    return std::bit_cast<T>(bits);
  }

  std::string get_bytes(std::uint64_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::uint64_t n) const {
    if (n > bytes_.size() - pos_) {
      throw TruncatedError("model file is truncated at byte " + std::to_string(pos_));
    }
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_model(const ModelParams& params, std::ostream& out) {
  std::string buf(kModelMagic, kMagicSize);
  put_le<std::uint32_t>(buf, kModelFormatVersion);
  const std::string config = to_json(params.config);
  put_le<std::uint64_t>(buf, config.size());
  buf += config;
  put_le<std::uint64_t>(buf, params.tensors.size());
  for (const auto& [name, t] : params.tensors) {
    put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(name.size()));
    buf += name;
    put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) put_le<std::uint64_t>(buf, d);
    for (double v : t.values()) put_le<double>(buf, v);
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error("failed to write model");
}

void save_model(const ModelParams& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  save_model(params, out);
}

ModelParams load_model(std::istream& in, const ModelConfig* expected) {
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Reader reader(bytes);
  if (reader.get_bytes(kMagicSize) != std::string(kModelMagic, kMagicSize)) {
    throw ModelFormatError("not an ink2tex model (bad magic)");
  }
  const auto version = reader.get<std::uint32_t>();
  if (version != kModelFormatVersion) throw VersionMismatchError(version, kModelFormatVersion);

  ModelParams params;
  params.config = config_from_json(reader.get_bytes(reader.get<std::uint64_t>()));

  const auto count = reader.get<std::uint64_t>();
  TensorMap stored;
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name = reader.get_bytes(reader.get<std::uint32_t>());
    const auto rank = reader.get<std::uint32_t>();
    if (rank > 8) throw ModelFormatError("parameter '" + name + "' has implausible rank " + std::to_string(rank));
    Shape shape(rank);
    for (auto& d : shape) d = reader.get<std::uint64_t>();
    const std::size_t n = shape_size(shape);
    if (n > bytes.size() / sizeof(double)) throw TruncatedError("model file is truncated in '" + name + "'");
    std::vector<double> data(n);
    for (auto& v : data) v = reader.get<double>();
    if (!stored.emplace(name, Tensor(std::move(shape), std::move(data))).second) {
      throw ModelFormatError("parameter '" + name + "' appears twice");
    }
  }
  if (!reader.done()) throw ModelFormatError("trailing bytes after the last tensor");

  const ModelConfig& target = expected ? *expected : params.config;
  std::set<std::string> known;
  for (const auto& spec : parameter_table(target)) {
    const auto it = stored.find(spec.name);
    if (it == stored.end()) throw MissingKeyError(spec.name);
    if (it->second.shape() != spec.shape) {
      throw ShapeMismatchError(spec.name, shape_string(it->second.shape()), shape_string(spec.shape));
    }
    known.insert(spec.name);
  }
  for (const auto& [name, t] : stored) {
    if (!known.contains(name)) throw ModelFormatError("unexpected parameter '" + name + "'");
  }
  params.tensors = std::move(stored);
  return params;
}

ModelParams load_model(const std::string& path, const ModelConfig* expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model '" + path + "'");
  return load_model(in, expected);
}

}  // namespace ink2tex
