#pragma once

#include <array>
#include <cstdint>

namespace cmv {

/// Philox4x32-10 block cipher (Salmon et al., SC'11). Counter-based: the
/// output for a given (key, counter) is a pure function, so streams can be
/// positioned anywhere without sequential state.
class Philox4x32 {
public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter ctr, Key key) noexcept;
};

enum class Role : std::uint32_t {
  common = 0,
  aux_common = 1,
  initial = 2,
  initial_tilde = 3,
  particle = 4,
};

/// Identifies one random stream. The mapping (seed, realization, role) to
/// (key, counter prefix) is injective, so distinct streams never share a
/// Philox input block.
struct StreamId {
  std::uint64_t key = 0;
  std::uint64_t realization = 0;
  std::uint32_t role_code = 0;

  friend bool operator==(const StreamId&, const StreamId&) = default;
};

/// `particle_index` is ignored unless role == Role::particle.
StreamId derive_streams(std::uint64_t master_seed, std::uint64_t realization, Role role,
                        std::uint32_t particle_index = 0);

/// Uniform doubles from one stream, 53 random bits each.
class UniformStream {
public:
  UniformStream() = default;
  explicit UniformStream(StreamId id) : id_(id) {}

  std::uint64_t next_u64();
  /// Uniform on [0, 1).
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  const StreamId& id() const noexcept { return id_; }
  std::uint32_t blocks_consumed() const noexcept { return block_; }

private:
  void refill();

  StreamId id_{};
  std::uint32_t block_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int pos_ = 4;
};

/// Natural logarithm built only from IEEE-exact operations (frexp, +, *, /),
/// so Gaussian draws do not depend on the platform libm.
double portable_log(double x);

/// Standard normal draws by the Marsaglia polar method over a UniformStream,
/// using portable_log and sqrt (correctly rounded in IEEE 754).
class NormalStream {
public:
  NormalStream() = default;
  explicit NormalStream(StreamId id) : uniforms_(id) {}

  double next();

  const StreamId& id() const noexcept { return uniforms_.id(); }

private:
  UniformStream uniforms_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace cmv
