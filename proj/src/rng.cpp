#include "cmv/rng.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace cmv {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo, std::uint32_t& hi) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  lo = static_cast<std::uint32_t>(p);
  hi = static_cast<std::uint32_t>(p >> 32);
}

}  // namespace

Philox4x32::Counter Philox4x32::generate(Counter ctr, Key key) noexcept {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t lo0, hi0, lo1, hi1;
    mulhilo(kPhiloxM0, ctr[0], lo0, hi0);
    mulhilo(kPhiloxM1, ctr[2], lo1, hi1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  return ctr;
}

StreamId derive_streams(std::uint64_t master_seed, std::uint64_t realization, Role role,
                        std::uint32_t particle_index) {
  StreamId id;
  id.key = master_seed;
  id.realization = realization;
  if (role == Role::particle) {
    constexpr std::uint32_t base = static_cast<std::uint32_t>(Role::particle);
    if (particle_index > std::numeric_limits<std::uint32_t>::max() - base) {
      throw std::out_of_range("derive_streams: particle index exceeds the role code space");
    }
    id.role_code = base + particle_index;
  } else {
    id.role_code = static_cast<std::uint32_t>(role);
  }
  return id;
}

void UniformStream::refill() {
  if (block_ == std::numeric_limits<std::uint32_t>::max()) {
    throw std::overflow_error("UniformStream: counter space exhausted");
  }
  const Philox4x32::Counter ctr{block_, id_.role_code, static_cast<std::uint32_t>(id_.realization),
                                static_cast<std::uint32_t>(id_.realization >> 32)};
  const Philox4x32::Key key{static_cast<std::uint32_t>(id_.key),
                            static_cast<std::uint32_t>(id_.key >> 32)};
  buf_ = Philox4x32::generate(ctr, key);
  ++block_;
  pos_ = 0;
}

std::uint64_t UniformStream::next_u64() {
  if (pos_ > 2) refill();
  const std::uint64_t hi = buf_[pos_];
  const std::uint64_t lo = buf_[pos_ + 1];
  pos_ += 2;
  return (hi << 32) | lo;
}

double portable_log(double x) {
  if (!(x > 0.0)) {
    return x == 0.0 ? -std::numeric_limits<double>::infinity()
                    : std::numeric_limits<double>::quiet_NaN();
  }
  if (std::isinf(x)) return x;

  // fdlibm split of ln 2; the high part has trailing zero bits so e*ln2_hi is exact.
  constexpr double ln2_hi = 6.93147180369123816490e-01;
  constexpr double ln2_lo = 1.90821492927058770002e-10;
  constexpr double sqrt_half = 0.70710678118654752440;

  int e = 0;
  double m = std::frexp(x, &e);
  if (m < sqrt_half) {
    m *= 2.0;
    --e;
  }
  // log m = 2 atanh(s), |s| <= 0.1716, so 12 odd terms reach double precision.
  const double s = (m - 1.0) / (m + 1.0);
  const double s2 = s * s;
  double p = 1.0 / 25.0;
  p = p * s2 + 1.0 / 23.0;
  p = p * s2 + 1.0 / 21.0;
  p = p * s2 + 1.0 / 19.0;
  p = p * s2 + 1.0 / 17.0;
  p = p * s2 + 1.0 / 15.0;
  p = p * s2 + 1.0 / 13.0;
  p = p * s2 + 1.0 / 11.0;
  p = p * s2 + 1.0 / 9.0;
  p = p * s2 + 1.0 / 7.0;
  p = p * s2 + 1.0 / 5.0;
  p = p * s2 + 1.0 / 3.0;
  const double log_m = 2.0 * s + 2.0 * s * s2 * p;
  const double de = static_cast<double>(e);
  return de * ln2_hi + (de * ln2_lo + log_m);
}

double NormalStream::next() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniforms_.next_double() - 1.0;
    v = 2.0 * uniforms_.next_double() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double scale = std::sqrt(-2.0 * portable_log(s) / s);
  cached_ = v * scale;
  has_cached_ = true;
  return u * scale;
}

}  // namespace cmv
