#pragma once

#include <cstddef>
#include <exception>
#include <vector>

#include "cmv/kernels.hpp"

namespace cmv {

/// Calls job(r) for r = 0..count-1, concurrently when exec is parallel.
/// The first exception in realization order is rethrown after all jobs end.
template <class Job>
void farm(std::size_t count, Exec exec, const Job& job) {
  std::vector<std::exception_ptr> errors(count);
  const auto guarded = [&](std::size_t r) {
    try {
      job(r);
    } catch (...) {
      errors[r] = std::current_exception();
    }
  };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::size_t r = 0; r < count; ++r) guarded(r);
  } else {
    for (std::size_t r = 0; r < count; ++r) guarded(r);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace cmv
