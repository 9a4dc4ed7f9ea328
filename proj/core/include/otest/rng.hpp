#pragma once

#include <cstdint>
#include <random>

namespace otest {

using Engine = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-style seed for trial `index` of stream `stream`. Results depend only
// on (base, stream, index), so any partition of trials across threads agrees.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index) {
  return splitmix64(splitmix64(base ^ splitmix64(stream + 0x51ed27a1ULL)) + index);
}

inline Engine make_engine(std::uint64_t base, std::uint64_t stream, std::uint64_t index) {
  return Engine(derive_seed(base, stream, index));
}

}  // namespace otest
