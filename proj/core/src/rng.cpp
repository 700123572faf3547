#include "teamq/rng.hpp"

#include <sstream>

#include "teamq/errors.hpp"

namespace teamq {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t stream_seed(std::uint64_t master, std::string_view stream_name) {
  // FNV-1a over the name, then splitmix-mix both halves together.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : stream_name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::uint64_t state = master ^ h;
  splitmix64(state);
  return splitmix64(state);
}

int Rng::uniform_int(int n) {
  if (n < 1) throw ContractViolation("Rng::uniform_int: n must be >= 1");
  const auto range = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % range;
  std::uint64_t x = next_u64();
  while (x >= limit) x = next_u64();
  return static_cast<int>(x % range);
}

std::string Rng::save_state() const {
  std::ostringstream os;
  os << gen_;
  return os.str();
}

void Rng::restore_state(const std::string& text) {
  std::istringstream is(text);
  is >> gen_;
  if (is.fail()) throw ConfigurationError("Rng::restore_state: malformed state string");
}

}  // namespace teamq
