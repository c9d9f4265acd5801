#pragma once

#include "ewfs/common.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ewfs {

/// Per-feature value ranges and discreteness flags used by diff().
struct FeatureRanges {
  Vector min;
  Vector max;
  std::vector<bool> discrete;

  /// Ranges of the columns of a complete matrix. `discrete` defaults to all
  /// false.
  static FeatureRanges of(const Matrix& X, std::vector<bool> discrete = {});
};

/// Dissimilarity of two samples on feature l, in [0, 1]. Continuous:
/// |a - b| / (max - min), 0 for a constant feature. Discrete: 0 if equal,
/// else 1.
double diff(const RowVector& xi, const RowVector& xj, Index l, const FeatureRanges& ranges);

struct NeighborSets {
  /// Same class as sample i, excluding i.
  std::vector<Index> hits;
  /// Indexed by class id; the entry for i's own class is empty.
  std::vector<std::vector<Index>> misses;
};

NeighborSets neighbor_sets(Index i, const Labels& y, int num_classes);

struct AverageDistances {
  /// Mean Euclidean distance to the hit set; empty for a singleton class.
  std::optional<double> hit;
  /// Mean distance to each other class. NaN at i's own class.
  std::vector<double> miss;
};

AverageDistances average_distances(Index i, const Matrix& X, const Labels& y);

struct ReliefConfig {
  /// Number of visited samples; 0 means n, i.e. every sample once.
  int iterations = 0;
  std::uint64_t seed = 0;
  /// Neighbours per class for the classical ReliefF baseline.
  int relieff_k = 10;
};

struct ReliefResult {
  FeatureWeights weights;
  /// Visits whose hit term was skipped because the class has one member.
  int skipped_hit_terms = 0;
};

/// Mean-distance ReliefF with absolute deviations. Starting from all ones,
/// each visited sample x_i updates every weight by
///
///   v_l -= 1/|H_i| sum_{j in H_i} diff(x_i, x_j, l) |d_ij - dbar_H|
///   v_l += sum_{c != y_i} 1/n_c sum_{j in M_ic} diff(x_i, x_j, l) |d_ij - dbar_Mc|
///
/// with Euclidean d_ij and n_c the size of class c. Samples are visited in a
/// seeded random order without replacement. The raw weights are returned.
ReliefResult mu_relief_a(const Matrix& X, const Labels& y, const ReliefConfig& cfg,
                         const std::vector<bool>& discrete = {});

/// Classical ReliefF with k nearest hits and k nearest misses per class,
/// misses weighted by P(c) / (1 - P(y_i)). Weights start at 0.
ReliefResult relieff(const Matrix& X, const Labels& y, const ReliefConfig& cfg,
                     const std::vector<bool>& discrete = {});

/// Feature indices by descending weight, ties by ascending index.
std::vector<Index> rank_features(const Vector& weights);

enum class Selector { MuReliefA, ReliefF };

Selector parse_selector(std::string_view text);
std::string to_string(Selector s);

ReliefResult select_features(Selector selector, const Matrix& X, const Labels& y, const ReliefConfig& cfg);

}  // namespace ewfs
