#include "teamq/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "teamq/errors.hpp"

namespace teamq::nn {

namespace {

constexpr char kMagic[4] = {'T', 'Q', 'P', 'C'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 8);
}

void put_f64(std::ostream& os, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  put_u64(os, bits);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

double get_f64(std::istream& is) {
  const std::uint64_t bits = get_u64(is);
  double d;
  std::memcpy(&d, &bits, 8);
  return d;
}

}  // namespace

void save_parameters(const std::filesystem::path& path, const ParameterSet& params) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw ConfigurationError("save_parameters: cannot open '" + path.string() + "'");
  os.write(kMagic, 4);
  put_u32(os, kVersion);
  put_u32(os, static_cast<std::uint32_t>(params.tensors().size()));
  for (const auto& t : params.tensors()) {
    put_u32(os, static_cast<std::uint32_t>(t.name.size()));
    os.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put_u32(os, static_cast<std::uint32_t>(t.rank));
    put_u64(os, static_cast<std::uint64_t>(t.value.rows()));
    if (t.rank == 2) put_u64(os, static_cast<std::uint64_t>(t.value.cols()));
    for (Eigen::Index r = 0; r < t.value.rows(); ++r)
      for (Eigen::Index c = 0; c < t.value.cols(); ++c) put_f64(os, t.value(r, c));
  }
  if (!os) throw ConfigurationError("save_parameters: write failed for '" + path.string() + "'");
}

ParameterSet load_parameters(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigurationError("load_parameters: cannot open '" + path.string() + "'");
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw ConfigurationError("load_parameters: bad magic in '" + path.string() + "'");
  const std::uint32_t version = get_u32(is);
  if (version != kVersion)
    throw ConfigurationError("load_parameters: unsupported version " + std::to_string(version));
  const std::uint32_t count = get_u32(is);

  ParameterSet params;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = get_u32(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    const auto rank = static_cast<int>(get_u32(is));
    if (rank != 1 && rank != 2)
      throw ConfigurationError("load_parameters: tensor '" + name + "' has bad rank");
    const auto rows = static_cast<Eigen::Index>(get_u64(is));
    const auto cols = rank == 2 ? static_cast<Eigen::Index>(get_u64(is)) : 1;
    Tensor& t = params.add(std::move(name), rank, rows, cols);
    for (Eigen::Index r = 0; r < t.value.rows(); ++r)
      for (Eigen::Index c = 0; c < t.value.cols(); ++c) t.value(r, c) = get_f64(is);
    if (!is)
      throw ConfigurationError("load_parameters: truncated file '" + path.string() + "'");
  }
  return params;
}

}  // namespace teamq::nn
