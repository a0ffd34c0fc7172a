#pragma once
// Counter-based random streams (Philox 4x64, 10 rounds).
//
// Every draw is a pure function of (master_seed, stream_id, counter):
// the key is (master_seed, stream_id), the 128-bit block counter fills
// ctr[0..1]. Distinct stream ids give statistically independent streams
// with no coordination, so trial t of a Monte Carlo run always uses
// stream (seed, base + t) and the result is independent of how trials
// are scheduled across workers.
//
// The integer path is bit-exact across platforms; known-answer vectors
// (generated with an independent implementation of the same generator)
// are frozen in tests/test_rng.cpp.

#include <array>
#include <cstdint>

namespace rarelaw {

namespace philox {

// multiplier and Weyl constants from the published parameterization
inline constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ULL;
inline constexpr std::uint64_t kMul1 = 0xCA5A826395121157ULL;
inline constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
inline constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi, std::uint64_t& lo) {
  const unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
  hi = static_cast<std::uint64_t>(p >> 64);
  lo = static_cast<std::uint64_t>(p);
}

inline std::array<std::uint64_t, 4> block(std::array<std::uint64_t, 4> ctr,
                                          std::array<std::uint64_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    std::uint64_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

}  // namespace philox

class RandomStream {
 public:
  RandomStream(std::uint64_t master_seed, std::uint64_t stream_id)
      : key_{master_seed, stream_id} {}

  std::uint64_t master_seed() const { return key_[0]; }
  std::uint64_t stream_id() const { return key_[1]; }

  std::uint64_t next_u64() {
    if (buf_pos_ == 4) {
      buf_ = philox::block({ctr_lo_, ctr_hi_, 0, 0}, key_);
      if (++ctr_lo_ == 0) ++ctr_hi_;
      buf_pos_ = 0;
    }
    return buf_[buf_pos_++];
  }

  // 53-bit uniform in [0,1)
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // uniform on [-eps, eps)
  double symmetric(double eps) { return eps * (2.0 * uniform01() - 1.0); }

 private:
  std::array<std::uint64_t, 2> key_;
  std::uint64_t ctr_lo_ = 0;
  std::uint64_t ctr_hi_ = 0;
  std::array<std::uint64_t, 4> buf_{};
  int buf_pos_ = 4;
};

// Stream-id bases keep the purposes of derived streams disjoint within one
// experiment; trial t uses base + t.
namespace stream_ids {
inline constexpr std::uint64_t kEvlTrials = 0x0100000000ULL;
inline constexpr std::uint64_t kHitting = 0x0200000000ULL;
inline constexpr std::uint64_t kReturns = 0x0300000000ULL;
inline constexpr std::uint64_t kRepp = 0x0400000000ULL;
inline constexpr std::uint64_t kDPrime = 0x0500000000ULL;
inline constexpr std::uint64_t kBootstrap = 0x0600000000ULL;
inline constexpr std::uint64_t kSelfTest = 0x0700000000ULL;
}  // namespace stream_ids

}  // namespace rarelaw
