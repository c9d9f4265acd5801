#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace ewfs {

using Rng = std::mt19937_64;

/// Stage tags mixed into derived seeds. Values are part of the on-disk
/// reproducibility contract; append only.
enum class Stage : std::uint64_t {
  Folds = 1,
  InjectTrain = 2,
  InjectTest = 3,
  FactorInit = 4,
  ReliefOrder = 5,
  Inject = 6,
};

/// splitmix64 finaliser.
std::uint64_t mix64(std::uint64_t x);

/// Expands a root seed along a path of integers, e.g.
/// derive_seed(root, {run, fold, Stage::InjectTrain}). Each step computes
/// state = mix64(state ^ (component + 0x9e3779b97f4a7c15 * position)) with
/// position counting from 1, starting from state = mix64(root).
std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path);

inline std::uint64_t tag(Stage s) { return static_cast<std::uint64_t>(s); }

}  // namespace ewfs
