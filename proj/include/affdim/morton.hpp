#pragma once

#include <cstdint>

namespace affdim::morton {

// Bit-interleaving for 2-D cell coordinates. Coordinates up to 31 bits per
// axis fit a single uint64 key, and sorting by key groups every dyadic
// ancestor into a contiguous range, which is what all the prefix scans rely
// on.

inline std::uint64_t spread(std::uint64_t v) {
  v &= 0x7fffffffull;
  v = (v | (v << 16)) & 0x0000ffff0000ffffull;
  v = (v | (v << 8)) & 0x00ff00ff00ff00ffull;
  v = (v | (v << 4)) & 0x0f0f0f0f0f0f0f0full;
  v = (v | (v << 2)) & 0x3333333333333333ull;
  v = (v | (v << 1)) & 0x5555555555555555ull;
  return v;
}

inline std::uint64_t compact(std::uint64_t v) {
  v &= 0x5555555555555555ull;
  v = (v | (v >> 1)) & 0x3333333333333333ull;
  v = (v | (v >> 2)) & 0x0f0f0f0f0f0f0f0full;
  v = (v | (v >> 4)) & 0x00ff00ff00ff00ffull;
  v = (v | (v >> 8)) & 0x0000ffff0000ffffull;
  v = (v | (v >> 16)) & 0x00000000ffffffffull;
  return v;
}

inline std::uint64_t encode2(std::uint64_t x, std::uint64_t y) {
  return spread(x) | (spread(y) << 1);
}

inline std::uint64_t decode2_x(std::uint64_t key) { return compact(key); }
inline std::uint64_t decode2_y(std::uint64_t key) { return compact(key >> 1); }

}  // namespace affdim::morton
