#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <numbers>
#include <random>
#include <string_view>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace topoderiv {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

/// Seed for one chunk of one named check. Independent of thread count.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view check, std::uint64_t chunk = 0) {
  return splitmix64(splitmix64(seed ^ fnv1a(check)) + chunk);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
  /// log-uniform on [lo, hi], lo > 0
  double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }

  Eigen::VectorXd unit_vector(int dim) {
    Eigen::VectorXd v(dim);
    do {
      for (int i = 0; i < dim; ++i) v[i] = normal();
    } while (v.norm() < 1e-12);
    return v / v.norm();
  }

  Eigen::VectorXd in_box(int dim, double half_width) {
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v[i] = uniform(-half_width, half_width);
    return v;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

/// Unit vector at angle theta in the plane.
inline Eigen::VectorXd planar(double theta) {
  Eigen::VectorXd v(2);
  v << std::cos(theta), std::sin(theta);
  return v;
}

inline Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

/// Runs fn(chunk) for chunk in [0, chunks) on up to `threads` workers and
/// returns the results in chunk order, so reductions over the result do
/// not depend on scheduling. The first exception thrown by a chunk is
/// rethrown.
template <typename Fn>
auto run_chunks(std::size_t chunks, unsigned threads, Fn fn) -> std::vector<decltype(fn(std::size_t{}))> {
  using R = decltype(fn(std::size_t{}));
  std::vector<R> results(chunks);
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(chunks, 1))));
  if (threads == 1) {
    for (std::size_t c = 0; c < chunks; ++c) results[c] = fn(c);
    return results;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(chunks);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w)
    pool.emplace_back([&] {
      for (std::size_t c = next++; c < chunks; c = next++) {
        try {
          results[c] = fn(c);
        } catch (...) {
          errors[c] = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

inline constexpr std::size_t kChunkSize = 1000;

inline std::size_t chunk_count(std::size_t samples) { return (samples + kChunkSize - 1) / kChunkSize; }

inline std::size_t chunk_length(std::size_t samples, std::size_t chunk) {
  return std::min(kChunkSize, samples - chunk * kChunkSize);
}

}  // namespace topoderiv
