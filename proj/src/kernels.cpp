#include "cmv/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <omp.h>

namespace cmv::kernels {

namespace {

constexpr std::size_t kLeaf = 16;

template <class Term>
double tree(std::size_t lo, std::size_t hi, const Term& term) {
  const std::size_t n = hi - lo;
  if (n <= kLeaf) {
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += term(i);
    return s;
  }
  const std::size_t mid = lo + n / 2;
  return tree(lo, mid, term) + tree(mid, hi, term);
}

/// Sum of term(0..n-1) over a tree whose shape depends only on n.
template <class Term>
double tree_sum(std::size_t n, const Term& term, Exec exec) {
  if (n <= kSumBlock) return tree(0, n, term);
  const std::size_t blocks = (n + kSumBlock - 1) / kSumBlock;
  std::vector<double> partial(blocks);
  const auto block_sum = [&](std::size_t b) {
    partial[b] = tree(b * kSumBlock, std::min(n, (b + 1) * kSumBlock), term);
  };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (std::size_t b = 0; b < blocks; ++b) block_sum(b);
  } else {
    for (std::size_t b = 0; b < blocks; ++b) block_sum(b);
  }
  return tree(0, blocks, [&](std::size_t b) { return partial[b]; });
}

}  // namespace

double pairwise_sum(const double* x, std::size_t n, std::size_t stride, Exec exec) {
  return tree_sum(n, [x, stride](std::size_t i) { return x[i * stride]; }, exec);
}

void coordinate_mean(std::span<const double> x, int d, std::span<double> mean, Exec exec) {
  const std::size_t n = x.size() / static_cast<std::size_t>(d);
  for (int k = 0; k < d; ++k) {
    mean[k] = pairwise_sum(x.data() + k, n, static_cast<std::size_t>(d), exec) / static_cast<double>(n);
  }
}

void draw_normals(std::span<NormalStream> streams, int d, std::span<double> out, Exec exec) {
  const std::size_t n = streams.size();
  const auto body = [&](std::size_t i) {
    for (int k = 0; k < d; ++k) out[i * d + k] = streams[i].next();
  };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) body(i);
  } else {
    for (std::size_t i = 0; i < n; ++i) body(i);
  }
}

std::size_t euler_update(const ModelSpec& model, std::span<double> x, std::span<const double> mean,
                         double dt, double noise_scale, std::span<const double> xi,
                         std::span<const double> shift, Exec exec) {
  const std::size_t d = static_cast<std::size_t>(model.dim);
  const std::size_t n = x.size() / d;
  std::vector<double> h_mean(d, 0.0);
  if (model.H) model.H(mean, h_mean);
  const bool noisy = noise_scale != 0.0;

  const auto run_range = [&](std::size_t begin, std::size_t end) {
    std::vector<double> g(d, 0.0), f(d, 0.0), z(d);
    std::size_t first_bad = n;
    for (std::size_t i = begin; i < end; ++i) {
      std::span<double> xi_pos = x.subspan(i * d, d);
      for (std::size_t k = 0; k < d; ++k) z[k] = xi_pos[k] - mean[k];
      if (model.G) model.G(xi_pos, g);
      if (model.F) model.F(z, f);
      bool finite = true;
      for (std::size_t k = 0; k < d; ++k) {
        double next = xi_pos[k] + (g[k] + f[k] + h_mean[k]) * dt + shift[k];
        if (noisy) next += noise_scale * xi[i * d + k];
        xi_pos[k] = next;
        finite = finite && std::isfinite(next);
      }
      if (!finite && first_bad == n) first_bad = i;
    }
    return first_bad;
  };

  if (exec == Exec::parallel) {
    std::size_t first_bad = n;
#pragma omp parallel reduction(min : first_bad)
    {
      const std::size_t threads = static_cast<std::size_t>(omp_get_num_threads());
      const std::size_t t = static_cast<std::size_t>(omp_get_thread_num());
      const std::size_t chunk = (n + threads - 1) / threads;
      const std::size_t begin = std::min(n, t * chunk), end = std::min(n, begin + chunk);
      first_bad = run_range(begin, end);
    }
    return first_bad;
  }
  return run_range(0, n);
}

double squared_distance_sum(std::span<const double> a, std::span<const double> b,
                            std::span<const double> center_a, std::span<const double> center_b,
                            int d, Exec exec) {
  const std::size_t n = a.size() / static_cast<std::size_t>(d);
  return tree_sum(
      n,
      [&](std::size_t i) {
        double s = 0.0;
        for (int k = 0; k < d; ++k) {
          const double diff = (a[i * d + k] - center_a[k]) - (b[i * d + k] - center_b[k]);
          s += diff * diff;
        }
        return s;
      },
      exec);
}

double centered_square_sum(std::span<const double> x, std::span<const double> center, int d,
                           Exec exec) {
  const std::size_t n = x.size() / static_cast<std::size_t>(d);
  return tree_sum(
      n,
      [&](std::size_t i) {
        double s = 0.0;
        for (int k = 0; k < d; ++k) {
          const double diff = x[i * d + k] - center[k];
          s += diff * diff;
        }
        return s;
      },
      exec);
}

}  // namespace cmv::kernels
