#pragma once

#include <cstdint>
#include <initializer_list>

namespace rtprof {

// SplitMix64 finalizer; used to derive independent stream seeds from one master seed.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = splitmix64(master);
  for (std::uint64_t part : path) {
    s = splitmix64(s ^ splitmix64(part + 0x632be59bd9b4e019ULL));
  }
  return s;
}

}  // namespace rtprof
