#ifndef CROWDLAB_RNG_HPP_
#define CROWDLAB_RNG_HPP_

#include <array>
#include <cstdint>

namespace crowdlab {

// Philox 4x64, 10 rounds. Counter-based: every (key, counter) pair maps to an
// independent 256-bit block, so disjoint counter regions under one seed give
// independent streams regardless of evaluation order.
struct Philox4x64 {
  static std::array<std::uint64_t, 4> block(std::array<std::uint64_t, 2> key,
                                            std::array<std::uint64_t, 4> counter);
};

// A deterministic stream addressed by (seed, purpose, a, b, c). The address
// occupies the key and the high counter words; the low counter word indexes
// draws, so two streams with different addresses never overlap and a stream's
// output does not depend on what other streams consumed.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t purpose, std::uint64_t a = 0,
            std::uint64_t b = 0, std::uint64_t c = 0)
      : key_{seed, purpose}, path_{a, b, c}, next_block_(0), buffered_(0) {}

  std::uint64_t next_u64();

  // Uniform on [0, 1) with 53 random bits.
  double next_double();

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Uniform integer in [0, n); unbiased via rejection.
  std::uint64_t uniform_int(std::uint64_t n);

 private:
  std::array<std::uint64_t, 2> key_;
  std::array<std::uint64_t, 3> path_;
  std::uint64_t next_block_;
  std::array<std::uint64_t, 4> buffer_{};
  int buffered_;
};

}  // namespace crowdlab

#endif  // CROWDLAB_RNG_HPP_
