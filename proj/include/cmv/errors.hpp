#pragma once

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>

namespace cmv {

/// Non-finite state or violated step-size guard during integration.
class NumericalFault : public std::runtime_error {
public:
  static constexpr std::size_t kUnknown = std::numeric_limits<std::size_t>::max();

  NumericalFault(const std::string& what, std::size_t step = kUnknown, std::size_t particle = kUnknown)
      : std::runtime_error(what), step_(step), particle_(particle) {}

  std::size_t step() const noexcept { return step_; }
  std::size_t particle() const noexcept { return particle_; }

private:
  std::size_t step_;
  std::size_t particle_;
};

}  // namespace cmv

namespace cmv {

/// The distance profile cannot be built from the given kappa and mesh.
class ProfileError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace cmv
