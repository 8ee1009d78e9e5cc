#pragma once

#include <cstdint>
#include <random>

namespace tsel::rng {

// SplitMix64 finalizer; used only to decorrelate seeds of derived streams.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of substream `index` under `master`. Replication r of any Monte Carlo
/// loop draws from substream(master, r), so results never depend on which
/// worker ran the replication.
inline std::uint64_t substream(std::uint64_t master, std::uint64_t index) {
  return mix64(mix64(master) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

inline std::uint64_t substream(std::uint64_t master, std::uint64_t index,
                               std::uint64_t sub) {
  return substream(substream(master, index), sub);
}

/// A single deterministic random stream.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : engine_(mix64(seed)) {}

  double normal() { return normal_(engine_); }

  double uniform() { return uniform_(engine_); }

  /// Uniform draw on {0, ..., count - 1}.
  std::size_t index(std::size_t count) {
    return std::uniform_int_distribution<std::size_t>(0, count - 1)(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace tsel::rng
