#include "ewfs/rng.hpp"

namespace ewfs {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path) {
  std::uint64_t state = mix64(root);
  std::uint64_t position = 1;
  for (std::uint64_t component : path) {
    state = mix64(state ^ (component + 0x9e3779b97f4a7c15ULL * position));
    ++position;
  }
  return state;
}

}  // namespace ewfs
