#pragma once

#include <array>
#include <cstdint>

namespace mheat {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Stateless:
/// the same (counter, key) always yields the same 128-bit block, which is what
/// makes per-path streams reproducible independently of scheduling.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter ctr, Key key) noexcept;
};

/// SplitMix64 finalizer; used to derive well-separated stream identifiers.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Identifier of an independent stream; child streams are derived by hashing.
struct StreamId {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  StreamId child(std::uint64_t tag) const noexcept {
    return {seed, mix64(stream ^ mix64(tag + 0x632BE59BD9B4E019ULL))};
  }
};

/// Sequential reader over one stream: uniforms in (0,1) and standard normals
/// (Box–Muller, two per Philox block).
class RandomStream {
 public:
  explicit RandomStream(StreamId id) noexcept;

  double uniform() noexcept;
  double normal() noexcept;

  /// Repositions the stream at the start of a given block.
  void seek(std::uint64_t block_index) noexcept;

 private:
  void refill() noexcept;

  Philox4x32::Key key_{};
  std::uint64_t stream_ = 0;
  std::uint64_t block_ = 0;
  std::array<double, 2> uniforms_{};
  std::array<double, 2> normals_{};
  int next_uniform_ = 2;
  int next_normal_ = 2;
};

}  // namespace mheat
