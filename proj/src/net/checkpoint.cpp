#include "dcnn/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace dcnn {

namespace {

constexpr char kMagic[4] = {'D', 'C', 'N', 'N'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint8_t kFlagTrainable = 1;
constexpr std::uint8_t kFlagRunningStat = 2;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_f32(std::string& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

class Reader {
 public:
  explicit Reader(std::string bytes) : bytes_(std::move(bytes)) {}

  void raw(void* dst, std::size_t n) {
    if (pos_ + n > bytes_.size())
      throw CheckpointError(CheckpointError::Kind::Truncated, "checkpoint ends early");
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }
  std::uint32_t u32() {
    unsigned char b[4];
    raw(b, 4);
    return b[0] | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
           (std::uint32_t(b[3]) << 24);
  }
  std::uint64_t u64() {
    std::uint64_t v = u32();
    return v | (std::uint64_t(u32()) << 32);
  }
  float f32() {
    std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  std::string str(std::size_t n) {
    if (pos_ + n > bytes_.size())
      throw CheckpointError(CheckpointError::Kind::Truncated, "checkpoint ends early");
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string bytes_;
  std::size_t pos_ = 0;
};

void put_array(std::string& out, const std::string& name, const Tensor& t, std::uint8_t flags) {
  put_u32(out, static_cast<std::uint32_t>(name.size()));
  out.append(name);
  out.push_back(static_cast<char>(flags));
  put_u32(out, static_cast<std::uint32_t>(t.rank()));
  for (int i = 0; i < t.rank(); ++i) put_u32(out, static_cast<std::uint32_t>(t.dim(i)));
  put_u64(out, t.size());
  for (std::size_t i = 0; i < t.size(); ++i) put_f32(out, t[i]);
}

}  // namespace

void save_checkpoint(const ModelSpec& spec, const ParamStore& params, const BnStats& stats,
                     const std::string& path) {
  std::string out;
  out.append(kMagic, 4);
  put_u32(out, kVersion);
  const std::string arch = spec.to_json();
  put_u64(out, arch.size());
  out.append(arch);

  std::uint64_t count = params.size();
  for (const auto& [name, s] : stats) {
    (void)name;
    count += 2;
  }
  put_u64(out, count);
  for (const auto& [name, e] : params.entries())
    put_array(out, name, e.var->value, e.trainable ? kFlagTrainable : 0);
  for (const auto& [name, s] : stats) {
    put_array(out, name + ".running_mean", s.running_mean, kFlagRunningStat);
    put_array(out, name + ".running_var", s.running_var, kFlagRunningStat);
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw CheckpointError(CheckpointError::Kind::Io, "cannot open for writing: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw CheckpointError(CheckpointError::Kind::Io, "write failed: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError(CheckpointError::Kind::Io, "cannot open: " + path);
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  Reader r(std::move(bytes));

  char magic[4];
  r.raw(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw CheckpointError(CheckpointError::Kind::BadMagic, "bad magic in " + path);
  const std::uint32_t version = r.u32();
  if (version != kVersion)
    throw CheckpointError(CheckpointError::Kind::Version,
                          "unsupported checkpoint version " + std::to_string(version));

  const std::uint64_t arch_len = r.u64();
  const std::string arch = r.str(arch_len);

  LoadedCheckpoint out;
  try {
    out.model = ModelSpec::from_json(arch);
  } catch (const ModelError& e) {
    throw CheckpointError(CheckpointError::Kind::Format, e.what());
  }

  const std::uint64_t count = r.u64();
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = r.u32();
    const std::string name = r.str(name_len);
    std::uint8_t flags;
    r.raw(&flags, 1);
    const std::uint32_t rank = r.u32();
    if (rank == 0 || rank > 8)
      throw CheckpointError(CheckpointError::Kind::Format, "array " + name + " has bad rank");
    Shape dims(rank);
    std::uint64_t prod = 1;
    for (auto& d : dims) {
      d = static_cast<int>(r.u32());
      if (d <= 0) throw CheckpointError(CheckpointError::Kind::Format, "array " + name + " has bad dims");
      prod *= static_cast<std::uint64_t>(d);
    }
    const std::uint64_t numel = r.u64();
    if (numel != prod)
      throw CheckpointError(CheckpointError::Kind::DimsMismatch,
                            "array " + name + ": dims product " + std::to_string(prod) +
                                " != payload length " + std::to_string(numel));
    Tensor t(dims);
    for (std::uint64_t k = 0; k < numel; ++k) t[k] = r.f32();

    if (flags & kFlagRunningStat) {
      const bool is_mean = name.size() > 13 && name.rfind(".running_mean") == name.size() - 13;
      const bool is_var = name.size() > 12 && name.rfind(".running_var") == name.size() - 12;
      if (!is_mean && !is_var)
        throw CheckpointError(CheckpointError::Kind::Format, "unrecognized stat array " + name);
      const std::string layer = name.substr(0, name.rfind(".running_"));
      auto& st = out.stats[layer];
      (is_mean ? st.running_mean : st.running_var) = std::move(t);
    } else {
      out.params.insert(name, std::move(t), (flags & kFlagTrainable) != 0);
    }
  }
  if (!r.done())
    throw CheckpointError(CheckpointError::Kind::Format, "trailing bytes after checkpoint payload");

  for (const auto& name : required_param_names(out.model))
    if (!out.params.contains(name))
      throw CheckpointError(CheckpointError::Kind::Format, "checkpoint missing parameter " + name);
  return out;
}

}  // namespace dcnn
