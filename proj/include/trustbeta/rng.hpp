#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace trustbeta {

// Seeded random stream. One owner per stream; never share across threads.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0);
  double normal(double mean = 0.0, double stddev = 1.0);
  // Uniform integer on [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  std::uint64_t next_u64() { return engine_(); }

  // Derives an independent child stream; advances this stream by one draw.
  Rng split();

  std::string save_state() const;
  void restore_state(const std::string& state);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

Rng seeded_rng(std::uint64_t seed);

}  // namespace trustbeta
