#include "bcnet/bcnw.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace bcnet {

static_assert(std::endian::native == std::endian::little,
              "BCNW I/O assumes a little-endian host");

const char* to_string(WeightErrorKind kind) {
  switch (kind) {
    case WeightErrorKind::io: return "io error";
    case WeightErrorKind::bad_magic: return "bad magic";
    case WeightErrorKind::version_mismatch: return "version mismatch";
    case WeightErrorKind::truncated: return "truncated";
    case WeightErrorKind::trailing_bytes: return "trailing bytes";
    case WeightErrorKind::bad_header: return "bad tensor header";
    case WeightErrorKind::duplicate_name: return "duplicate name";
    case WeightErrorKind::missing_tensor: return "missing tensor";
    case WeightErrorKind::shape_mismatch: return "shape mismatch";
  }
  return "unknown";
}

namespace {

std::string error_message(WeightErrorKind kind, const std::string& tensor,
                          const std::string& detail) {
  std::string msg = to_string(kind);
  if (!tensor.empty()) msg += " (tensor '" + tensor + "')";
  if (!detail.empty()) msg += ": " + detail;
  return msg;
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T read(const std::string& tensor, const char* what) {
    T v;
    need(sizeof(T), tensor, what);
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::span<const std::uint8_t> take(std::size_t n, const std::string& tensor, const char* what) {
    need(n, tensor, what);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n, const std::string& tensor, const char* what) const {
    if (remaining() < n) {
      throw WeightFileError(WeightErrorKind::truncated, tensor,
                            std::string("file ends inside ") + what);
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

template <typename T>
void put(std::vector<std::uint8_t>& out, T v) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  out.insert(out.end(), p, p + sizeof(T));
}

constexpr std::uint64_t kFnvOffset = 1469598103934665603ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const std::uint8_t*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
  return h;
}

}  // namespace

WeightFileError::WeightFileError(WeightErrorKind kind, std::string tensor,
                                 const std::string& detail)
    : std::runtime_error(error_message(kind, tensor, detail)),
      kind_(kind),
      tensor_(std::move(tensor)) {}

void WeightStore::add(std::string name, Tensor tensor) {
  if (name.size() > kMaxTensorNameBytes) {
    throw WeightFileError(WeightErrorKind::bad_header, name, "name longer than 255 bytes");
  }
  if (contains(name)) {
    throw WeightFileError(WeightErrorKind::duplicate_name, name, "");
  }
  entries_.emplace_back(std::move(name), std::move(tensor));
}

const Tensor* WeightStore::find(std::string_view name) const {
  for (const auto& [n, t] : entries_) {
    if (n == name) return &t;
  }
  return nullptr;
}

bool WeightStore::contains(std::string_view name) const { return find(name) != nullptr; }

const Tensor& WeightStore::get(std::string_view name) const {
  if (const Tensor* t = find(name)) return *t;
  throw WeightFileError(WeightErrorKind::missing_tensor, std::string(name), "");
}

std::vector<std::uint8_t> encode_weights(const WeightStore& store) {
  std::vector<std::uint8_t> out;
  out.insert(out.end(), {'B', 'C', 'N', 'W'});
  put<std::uint32_t>(out, kBcnwVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(store.size()));
  for (const auto& [name, t] : store) {
    put<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    put<std::uint8_t>(out, static_cast<std::uint8_t>(t.rank()));
    for (auto d : t.dims()) put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    const auto* p = reinterpret_cast<const std::uint8_t*>(t.data());
    out.insert(out.end(), p, p + t.size() * sizeof(float));
  }
  return out;
}

WeightStore decode_weights(std::span<const std::uint8_t> bytes) {
  Reader in(bytes);
  auto magic = in.take(4, "", "magic");
  if (std::memcmp(magic.data(), "BCNW", 4) != 0) {
    throw WeightFileError(WeightErrorKind::bad_magic, "",
                          "expected \"BCNW\", got \"" +
                              std::string(reinterpret_cast<const char*>(magic.data()), 4) + "\"");
  }
  const auto version = in.read<std::uint32_t>("", "version");
  if (version != kBcnwVersion) {
    throw WeightFileError(WeightErrorKind::version_mismatch, "",
                          "file version " + std::to_string(version) + ", reader supports 1");
  }
  const auto count = in.read<std::uint32_t>("", "tensor count");

  WeightStore store;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string index_label = "#" + std::to_string(i);
    const auto name_len = in.read<std::uint16_t>(index_label, "name length");
    if (name_len > kMaxTensorNameBytes) {
      throw WeightFileError(WeightErrorKind::bad_header, index_label,
                            "name length " + std::to_string(name_len) + " exceeds 255");
    }
    auto name_bytes = in.take(name_len, index_label, "name");
    std::string name(reinterpret_cast<const char*>(name_bytes.data()), name_bytes.size());
    if (store.contains(name)) throw WeightFileError(WeightErrorKind::duplicate_name, name, "");

    const auto rank = in.read<std::uint8_t>(name, "rank");
    if (rank < 1 || rank > 4) {
      throw WeightFileError(WeightErrorKind::bad_header, name,
                            "rank " + std::to_string(rank) + " outside 1..4");
    }
    Dims dims(rank);
    for (auto& d : dims) {
      d = in.read<std::uint32_t>(name, "dims");
      if (d == 0) throw WeightFileError(WeightErrorKind::bad_header, name, "zero dimension");
    }
    const std::size_t n = element_count(dims);
    if (n > in.remaining() / sizeof(float)) {
      throw WeightFileError(WeightErrorKind::truncated, name,
                            "payload needs " + std::to_string(n * sizeof(float)) + " bytes, " +
                                std::to_string(in.remaining()) + " left");
    }
    auto payload = in.take(n * sizeof(float), name, "data");
    std::vector<float> data(n);
    std::memcpy(data.data(), payload.data(), payload.size());
    store.add(std::move(name), Tensor(std::move(dims), std::move(data)));
  }
  if (in.remaining() != 0) {
    throw WeightFileError(WeightErrorKind::trailing_bytes, "",
                          std::to_string(in.remaining()) + " bytes after the last tensor");
  }
  return store;
}

void save_weights(const std::filesystem::path& path, const WeightStore& store) {
  const auto bytes = encode_weights(store);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw WeightFileError(WeightErrorKind::io, "", "cannot open " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw WeightFileError(WeightErrorKind::io, "", "write failed for " + path.string());
}

WeightStore load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WeightFileError(WeightErrorKind::io, "", "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_weights(bytes);
}

std::uint64_t tensor_checksum(const Tensor& t) {
  return fnv1a(kFnvOffset, t.data(), t.size() * sizeof(float));
}

std::uint64_t store_checksum(const WeightStore& store) {
  std::uint64_t h = kFnvOffset;
  for (const auto& [name, t] : store) {
    h = fnv1a(h, name.data(), name.size());
    for (auto d : t.dims()) {
      const auto d32 = static_cast<std::uint32_t>(d);
      h = fnv1a(h, &d32, sizeof(d32));
    }
    h = fnv1a(h, t.data(), t.size() * sizeof(float));
  }
  return h;
}

}  // namespace bcnet
