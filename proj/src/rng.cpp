#include "ajl/rng.hpp"

namespace ajl {

namespace {

constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

StreamRng::StreamRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index)
    : key_(mix64(mix64(seed + kGamma) ^ mix64(stream * kGamma + 0x632be59bd9b4e019ULL) ^
                 mix64((index + 1) * 0xd1b54a32d192ed03ULL))) {}

StreamRng::StreamRng(std::uint64_t seed, std::string_view stream, std::uint64_t index)
    : StreamRng(seed, fnv1a64(stream), index) {}

StreamRng::result_type StreamRng::operator()() { return mix64(key_ + (++counter_) * kGamma); }

double StreamRng::uniform() {
  // 53 random bits, shifted off zero.
  return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace ajl
