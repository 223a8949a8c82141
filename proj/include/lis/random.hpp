#pragma once

#include <cstdint>
#include <initializer_list>

namespace lis {

/// splitmix64 finalizer; a bijective mix of 64-bit values.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Child seed for a structured index, e.g. derive_seed(master, {cell, point, sample}).
/// Streams derived from distinct index tuples are independent for practical purposes.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = splitmix64(base);
  for (std::uint64_t part : path) s = splitmix64(s ^ splitmix64(part + 0x632BE59BD9B4E019ULL));
  return s;
}

}  // namespace lis
