#pragma once

// Data-parallel inner loops. Every kernel has a serial reference path and an
// OpenMP path; both produce bit-identical results because per-particle work
// is independent and reductions use one fixed summation tree.

#include <cstddef>
#include <span>

#include "cmv/model.hpp"
#include "cmv/rng.hpp"

namespace cmv {

enum class Exec { serial, parallel };

namespace kernels {

/// Leaves of the summation tree are contiguous blocks of this many terms.
inline constexpr std::size_t kSumBlock = 1024;

/// Fixed-order pairwise sum of x[0], x[stride], ..., x[(n-1)*stride].
double pairwise_sum(const double* x, std::size_t n, std::size_t stride, Exec exec = Exec::serial);

inline double pairwise_sum(std::span<const double> x, Exec exec = Exec::serial) {
  return pairwise_sum(x.data(), x.size(), 1, exec);
}

/// Per-coordinate mean of an n x d row-major array.
void coordinate_mean(std::span<const double> x, int d, std::span<double> mean, Exec exec = Exec::serial);

/// out[i*d + k] = next normal of streams[i], for k = 0..d-1.
void draw_normals(std::span<NormalStream> streams, int d, std::span<double> out, Exec exec = Exec::serial);

/// One Euler-Maruyama update in place:
///   x_i += [G(x_i) + F(x_i - mean) + H(mean)] dt + noise_scale * xi_i + shift
/// `xi` may be empty when noise_scale is 0. Returns the index of the first
/// particle with a non-finite coordinate, or n when all are finite.
std::size_t euler_update(const ModelSpec& model, std::span<double> x, std::span<const double> mean,
                         double dt, double noise_scale, std::span<const double> xi,
                         std::span<const double> shift, Exec exec = Exec::serial);

/// sum_i |x_i - center|^2 over the rows of an n x d array (fixed-order).
double centered_square_sum(std::span<const double> x, std::span<const double> center, int d,
                           Exec exec = Exec::serial);

/// sum_i |(a_i - center_a) - (b_i - center_b)|^2 over the rows of two n x d arrays (fixed-order).
double squared_distance_sum(std::span<const double> a, std::span<const double> b,
                            std::span<const double> center_a, std::span<const double> center_b,
                            int d, Exec exec = Exec::serial);

}  // namespace kernels
}  // namespace cmv
