#pragma once

#include <cstdint>
#include <random>

namespace kere {

/** Deterministic stream of doubles built on std::mt19937_64.
 *
 *  All stochastic components of the library draw through this class so that
 *  a given seed reproduces the same sequence on every platform.  Uniforms
 *  are formed from the top 53 bits of each 64-bit word, giving values in
 *  [2^-54, 1 - 2^-54] (never exactly 0 or 1, safe for quantile transforms).
 */
class UniformStream {
 public:
  explicit UniformStream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform draw in the open interval (0, 1).
  double next_uniform() {
    const std::uint64_t bits = engine_() >> 11;  // 53 random bits
    return (static_cast<double>(bits) + 0.5) * 0x1p-53;
  }

  /// Uniform integer in [0, bound) by rejection, bound >= 1.
  std::uint64_t next_below(std::uint64_t bound);

  /// Standard normal draw via the inverse CDF.
  double next_normal() { return normal_quantile(next_uniform()); }

  /// Derives an independent stream for a labelled subtask.
  static std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

  static double normal_quantile(double p);
  static double normal_cdf(double x);
  static double normal_pdf(double x);

 private:
  std::mt19937_64 engine_;
};

/// In-place Fisher-Yates shuffle driven by the stream (deterministic).
template <typename Vec>
void shuffle_indices(Vec& v, UniformStream& stream) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(stream.next_below(i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace kere
