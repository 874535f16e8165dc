#pragma once

#include <cstdint>
#include <string_view>

namespace vascr {

// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// 64-bit FNV-1a.
constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Per-module seed: mix64(master ^ fnv1a(module)). Every stochastic stage of
// the pipeline draws its seed this way from the single master seed.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view module) noexcept {
  return mix64(master ^ fnv1a(module));
}

// Stream key for a (seed, id) pair, e.g. the inner-simulation stream of one contract.
constexpr std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t id) noexcept {
  return mix64(mix64(seed) ^ (id * 0xd6e8feb86659fd93ULL));
}

}  // namespace vascr
