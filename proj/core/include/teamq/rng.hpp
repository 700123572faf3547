#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace teamq {

// splitmix64 step; mutates the state and returns the next output.
std::uint64_t splitmix64(std::uint64_t& state);

// Derives the seed of a named substream from a master seed. Every component
// (net init, rollout worker, replay sampler, env reset, ...) draws from its
// own stream so that enabling one component never shifts another's sequence.
std::uint64_t stream_seed(std::uint64_t master, std::string_view stream_name);

// Deterministic RNG. std::*_distribution output is implementation-defined,
// so the few draw kinds we need are implemented here on raw 64-bit output.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // uniform double in [0, 1)
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0, n), n >= 1; unbiased by rejection
  int uniform_int(int n);

  bool bernoulli(double p) { return uniform() < p; }

  // serialization for checkpoint/resume
  std::string save_state() const;
  void restore_state(const std::string& text);

 private:
  std::mt19937_64 gen_;
};

}  // namespace teamq
