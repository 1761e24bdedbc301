#pragma once

#include <cstdint>
#include <vector>

namespace dagnet {

/// Counter-based pseudo-random stream. Every draw is a pure function of
/// (seed, counter), so results are reproducible across platforms.
class SeededStream {
 public:
  explicit SeededStream(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next_u64();
  /// Uniform on [0, 1).
  double uniform();
  /// Uniform on (0, 1]; safe as a logarithm argument.
  double uniform_open();
  /// Standard normal via Box-Muller. Both variates of a pair are used.
  double normal();
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Derives an independent seed for a named sub-stream.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

/// k distinct indices drawn uniformly from [0, n) (partial Fisher-Yates),
/// returned in draw order.
std::vector<std::size_t> sample_without_replacement(SeededStream& rng, std::size_t n,
                                                    std::size_t k);

}  // namespace dagnet
