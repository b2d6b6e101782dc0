#pragma once

#include <array>
#include <cstdint>

namespace ooskit {

/// Philox4x32-10 block function (Salmon et al., Random123). Pure: the same
/// (counter, key) always yields the same four words on every platform.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter ctr, Key key);
};

/// Independent purposes draw from disjoint counter spaces.
enum class StreamDomain : std::uint32_t {
  split = 1,
  episode = 2,
  synth = 3,
  init = 4,
  sampling = 5,
  misc = 6,
};

/// Sequential draws from one Philox stream keyed by (seed, stream, domain).
///
/// Counter layout: word 0 = block index, word 1 = domain, words 2..3 = stream.
/// Key = the two halves of the 64-bit seed.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream, StreamDomain domain = StreamDomain::misc);

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform on [0, n), unbiased (Lemire's multiply-and-reject).
  std::uint64_t uniform_index(std::uint64_t n);
  // Standard normal via Box-Muller; consumes two uniforms per call.
  double normal();

  std::uint64_t blocks_consumed() const { return block_; }

 private:
  void refill();

  Philox4x32::Key key_;
  std::uint32_t domain_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  Philox4x32::Counter buffer_{};
  int used_ = 4;
};

}  // namespace ooskit
