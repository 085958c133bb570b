#pragma once

#include <array>
#include <cstdint>

namespace fbf {

// Philox4x32-10 block for (counter, key).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

// Counter-based stream: key = seed, counter = (block index, stream id).
// Identical (seed, stream id) give identical draws on every platform.
// Gaussians use the Box-Muller transform on 53-bit uniforms.
class SeededStream {
 public:
  SeededStream(std::uint64_t seed, std::uint64_t stream_id = 0) : seed_(seed), stream_(stream_id) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_; }

  // Independent stream derived from (stream id, index), e.g. one per path.
  SeededStream substream(std::uint64_t index) const;

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  // Uniform on the open interval (0, 1).
  double uniform();
  double normal();

  static constexpr const char* generator_name() { return "philox4x32-10"; }
  static constexpr const char* normal_method() { return "box-muller"; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace fbf
