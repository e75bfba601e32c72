#include "fmbeam/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "fmbeam/errors.hpp"

namespace fmbeam {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'F', 'M', 'B', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 32;

template <class T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is, const std::filesystem::path& path) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw DataError("truncated checkpoint " + path.string());
  }
  return v;
}

std::string get_string(std::istream& is, std::uint64_t len, const std::filesystem::path& path) {
  if (len > kMaxElements) throw DataError("corrupt checkpoint " + path.string());
  std::string s(len, '\0');
  if (len > 0 && !is.read(s.data(), static_cast<std::streamsize>(len))) {
    throw DataError("truncated checkpoint " + path.string());
  }
  return s;
}

}  // namespace

const Tensor* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return &t;
  }
  return nullptr;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot write checkpoint " + path.string());
  os.write(kMagic, sizeof(kMagic));
  put(os, Checkpoint::kVersion);
  put(os, static_cast<std::uint64_t>(ckpt.config_json.size()));
  os.write(ckpt.config_json.data(), static_cast<std::streamsize>(ckpt.config_json.size()));
  put(os, static_cast<std::uint64_t>(ckpt.tensors.size()));
  for (const auto& [name, t] : ckpt.tensors) {
    put(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put(os, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) put(os, static_cast<std::uint64_t>(d));
    os.write(reinterpret_cast<const char*>(t.data().data()),
             static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
  if (!os) throw DataError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint " + path.string());
  char magic[8];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw DataError(path.string() + " is not a checkpoint");
  }
  const auto version = get<std::uint32_t>(is, path);
  if (version != Checkpoint::kVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.config_json = get_string(is, get<std::uint64_t>(is, path), path);
  const auto count = get<std::uint64_t>(is, path);
  if (count > kMaxElements) throw DataError("corrupt checkpoint " + path.string());
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name = get_string(is, get<std::uint32_t>(is, path), path);
    const auto rank = get<std::uint32_t>(is, path);
    if (rank > 8) throw DataError("corrupt checkpoint " + path.string());
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(get<std::uint64_t>(is, path));
    const std::size_t n = product(shape);
    if (n > kMaxElements) throw DataError("corrupt checkpoint " + path.string());
    std::vector<double> values(n);
    if (n > 0 && !is.read(reinterpret_cast<char*>(values.data()),
                          static_cast<std::streamsize>(n * sizeof(double)))) {
      throw DataError("truncated checkpoint " + path.string());
    }
    ckpt.tensors.emplace_back(std::move(name), Tensor(std::move(shape), std::move(values)));
  }
  return ckpt;
}

void store_params(Checkpoint& ckpt, const ParamStore& params) {
  for (const auto& p : params) ckpt.tensors.emplace_back(p.name, p.value);
}

void restore_params(const Checkpoint& ckpt, ParamStore& params) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor* t = ckpt.find(params[i].name);
    if (t == nullptr) throw DataError("checkpoint lacks parameter '" + params[i].name + "'");
    if (t->shape() != params[i].value.shape()) {
      throw DataError("checkpoint parameter '" + params[i].name + "' has shape " +
                      t->shape_string() + ", model expects " + params[i].value.shape_string());
    }
    params[i].value = *t;
  }
}

}  // namespace fmbeam
