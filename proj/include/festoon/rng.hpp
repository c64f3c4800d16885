#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace festoon {

// Philox4x32-10 block cipher (Salmon et al. counter-based generator).
// One keyed instance enumerates 2^128 counter blocks; streams are disjoint
// 2^64-block slices addressed by a 64-bit stream id, so a draw sequence is a
// pure function of (master_seed, stream_id, draw index) and independent of
// thread scheduling.
struct Philox4x32 {
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                            std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
      const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
      const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    return ctr;
  }
};

// Collapses an id path (replicate index, grid index, purpose tag, ...) into a
// single stream id with splitmix64 finalization per component.
inline std::uint64_t mix_stream_id(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x243F6A8885A308D3ull;
  for (std::uint64_t part : parts) {
    h += 0x9E3779B97F4A7C15ull + part;
    h = (h ^ (h >> 30)) * 0xBF58476D1CE4E5B9ull;
    h = (h ^ (h >> 27)) * 0x94D049BB133111EBull;
    h ^= h >> 31;
  }
  return h;
}

class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
      : key_{static_cast<std::uint32_t>(master_seed),
             static_cast<std::uint32_t>(master_seed >> 32)},
        stream_{static_cast<std::uint32_t>(stream_id),
                static_cast<std::uint32_t>(stream_id >> 32)} {}

  std::uint64_t next_u64() {
    if (buf_pos_ >= 2) refill_();
    return buf_[buf_pos_++];
  }

  // Strictly inside (0, 1); 53-bit resolution.
  double next_uniform() {
    const std::uint64_t bits = next_u64() >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  double next_normal() { return normal_quantile(next_uniform()); }

  double next_exponential() { return -std::log(next_uniform()); }

  // Exact Poisson sampling by multiplicative inversion over sub-means small
  // enough that exp(-mu) stays far from underflow.
  std::int64_t next_poisson(double mean) {
    std::int64_t total = 0;
    double rem = mean;
    while (rem > 0.0) {
      const double mu = rem < 12.0 ? rem : 12.0;
      rem -= mu;
      const double floor = std::exp(-mu);
      double prod = 1.0;
      std::int64_t k = -1;
      do {
        ++k;
        prod *= next_uniform();
      } while (prod > floor);
      total += k;
    }
    return total;
  }

  // Inverse normal CDF (Wichura's double-precision rational approximations).
  static double normal_quantile(double p) {
    const double q = p - 0.5;
    if (q > -0.425 && q < 0.425) {
      const double r = 0.180625 - q * q;
      const double num =
          (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
              1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
            1.3314166789178437745e+2) * r + 3.3871328727963666080e+0);
      const double den =
          (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
              5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
            4.2313330701600911252e+1) * r + 1.0);
      return q * num / den;
    }
    double r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double value;
    if (r <= 5.0) {
      r -= 1.6;
      const double num =
          (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
              3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
            4.63033784615654529590e+0) * r + 1.42343711074968357734e+0);
      const double den =
          (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
              6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
            2.05319162663775882187e+0) * r + 1.0);
      value = num / den;
    } else {
      r -= 5.0;
      const double num =
          (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
              2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
            5.46378491116411436990e+0) * r + 6.65790464350110377720e+0);
      const double den =
          (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
              1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
            5.99832206555887937690e-1) * r + 1.0);
      value = num / den;
    }
    return q < 0.0 ? -value : value;
  }

 private:
  void refill_() {
    const auto words = Philox4x32::block(
        {static_cast<std::uint32_t>(block_index_),
         static_cast<std::uint32_t>(block_index_ >> 32), stream_[0], stream_[1]},
        key_);
    buf_[0] = (static_cast<std::uint64_t>(words[1]) << 32) | words[0];
    buf_[1] = (static_cast<std::uint64_t>(words[3]) << 32) | words[2];
    ++block_index_;
    buf_pos_ = 0;
  }

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 2> stream_;
  std::uint64_t block_index_ = 0;
  std::array<std::uint64_t, 2> buf_{};
  int buf_pos_ = 2;
};

}  // namespace festoon
