#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

namespace ajl {

/// 64-bit FNV-1a, used for stream names and content hashes.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

/// Counter-based generator: output n is a SplitMix64 finalizer applied to
/// key + n·γ, where the key is derived from (seed, stream, index). Streams with
/// distinct (stream, index) pairs are independent for practical purposes and
/// can be generated in any order.
class StreamRng {
 public:
  using result_type = std::uint64_t;

  StreamRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);
  StreamRng(std::uint64_t seed, std::string_view stream, std::uint64_t index);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform on the open interval (0, 1).
  double uniform();

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace ajl
