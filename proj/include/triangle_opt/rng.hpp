#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

#include <Eigen/Dense>

namespace triangle_opt {

/// Counter-based random stream.
///
/// Every draw is a pure function of (seed, stream, counter), so a stochastic run
/// can be replayed bit for bit from its seed alone. `split` derives an
/// independent child stream without consuming anything from the parent. The
/// normal sampler is implemented here (Box-Muller) rather than taken from
/// <random>, whose distributions are not specified bit-exactly across
/// standard libraries.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t seed = 0, std::uint64_t stream = 0) noexcept
      : seed_(seed), stream_(stream), key_(mix(seed ^ mix(stream + kGolden))) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept { return at(counter_++); }

  /// The value the stream yields at position `counter`, without advancing.
  result_type at(std::uint64_t counter) const noexcept {
    return mix(key_ ^ mix(counter * kGolden + 0x632BE59BD9B4E019ULL));
  }

  CounterRng split(std::uint64_t child) const noexcept {
    return CounterRng(seed_, mix(stream_ * 0xD1B54A32D192ED03ULL + child + 1));
  }

  /// Uniform on [0, 1).
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  double normal() noexcept {
    // 1 - U keeps the log argument in (0, 1].
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Uniform index in [0, n).
  std::uint64_t index(std::uint64_t n) noexcept {
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
  }

  Eigen::VectorXd normal_vector(Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace triangle_opt
