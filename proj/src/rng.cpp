#include "trustbeta/rng.hpp"

#include <sstream>

#include "trustbeta/errors.hpp"

namespace trustbeta {

double Rng::uniform(double lo, double hi) {
  if (lo == hi) return lo;
  return std::uniform_real_distribution<double>(lo, hi)(engine_);
}

double Rng::normal(double mean, double stddev) {
  // A fresh distribution per draw keeps the stream state fully captured by
  // the engine.
  return std::normal_distribution<double>(mean, stddev)(engine_);
}

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(engine_);
}

Rng Rng::split() {
  // splitmix64 finalizer decorrelates the child seed from the parent output.
  std::uint64_t z = engine_() + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return Rng(z ^ (z >> 31));
}

std::string Rng::save_state() const {
  std::ostringstream out;
  out << engine_;
  return out.str();
}

void Rng::restore_state(const std::string& state) {
  std::istringstream in(state);
  std::mt19937_64 engine;
  in >> engine;
  if (in.fail()) throw SchemaError("invalid RNG state string");
  engine_ = engine;
}

Rng seeded_rng(std::uint64_t seed) { return Rng(seed); }

}  // namespace trustbeta
