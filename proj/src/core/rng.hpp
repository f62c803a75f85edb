#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>

namespace wmlab {

/// Counter-based Philox4x32-10 generator. Output depends only on
/// (seed, stream, position), so sweeps can hand every work item its own
/// substream and get identical results in any execution order.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  std::uint32_t next_u32() noexcept;
  std::uint64_t next_u64() noexcept;
  /// Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform in (0, 1), never exactly 0.
  double uniform_open() noexcept;
  /// Standard normal via Box-Muller.
  double normal() noexcept;
  /// Uniform integer in [0, n); n must be > 0.
  std::uint64_t below(std::uint64_t n) noexcept;
  bool bernoulli(double p) noexcept { return uniform() < p; }

 private:
  void refill() noexcept;

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Philox4x32-10 block function, exposed for known-answer tests.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) noexcept;

/// Mixes a list of identifiers (image index, spec index, seed, ...) into one
/// 64-bit stream id.
std::uint64_t stream_id(std::initializer_list<std::uint64_t> parts) noexcept;

std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace wmlab
