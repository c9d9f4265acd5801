#pragma once

#include "ewfs/common.hpp"

#include <filesystem>
#include <iosfwd>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace ewfs {

/// Labelled feature matrix with a missingness mask.
///
/// Values at unobserved cells are unspecified and must not be read; every
/// consumer goes through `mask`. Labels are dense ids 0..num_classes()-1
/// whose display names live in `class_names`.
struct IncompleteDataset {
  Matrix values;
  Mask mask;
  Labels labels;
  std::vector<std::string> feature_names;
  std::vector<std::string> class_names;
  std::string label_column = "class";

  Index rows() const { return values.rows(); }
  Index cols() const { return values.cols(); }
  int num_classes() const { return static_cast<int>(class_names.size()); }
  Index missing_count() const;
  bool is_complete() const { return missing_count() == 0; }

  /// Throws DataError if any structural invariant is violated: shape
  /// agreement, a row without observed entries, a label out of range or a
  /// class id that never occurs.
  void validate() const;
};

/// Builds a fully observed dataset. Class names default to "0", "1", ...
IncompleteDataset make_complete_dataset(Matrix values, Labels labels,
                                        std::vector<std::string> feature_names = {},
                                        std::vector<std::string> class_names = {});

/// Same labels and names, all cells observed with the given values.
IncompleteDataset with_values(const IncompleteDataset& data, Matrix completed);

IncompleteDataset subset_rows(const IncompleteDataset& data, std::span<const Index> rows);

/// `top` rows followed by `bottom` rows. Feature counts must agree; class
/// vocabularies must be identical.
IncompleteDataset stack_rows(const IncompleteDataset& top, const IncompleteDataset& bottom);

const std::set<std::string>& default_missing_tokens();

/// Reads a comma separated file with a header row. Labels are mapped to
/// dense ids in order of first appearance.
IncompleteDataset load_csv(const std::filesystem::path& path, const std::string& label_column,
                           const std::set<std::string>& missing_tokens = default_missing_tokens());
IncompleteDataset read_csv(std::istream& in, const std::string& label_column,
                           const std::set<std::string>& missing_tokens = default_missing_tokens(),
                           const std::string& source_name = "<stream>");

/// Writes features followed by the label column. Missing cells are empty;
/// observed values use the shortest representation that round-trips.
void write_csv(const IncompleteDataset& data, std::ostream& out);
void save_csv(const IncompleteDataset& data, const std::filesystem::path& path);

/// Shortest round-trip decimal form of a double.
std::string format_double(double x);

struct NormalizationParams {
  Vector min;
  Vector max;
  /// max == min, including features with no observed value (min = max = 0).
  std::vector<bool> constant;
};

NormalizationParams fit_normalizer(const IncompleteDataset& data);

/// Maps observed cells to (x - min) / (max - min), clamped to [0, 1];
/// constant features map to 0. The mask is unchanged.
IncompleteDataset apply_normalizer(const IncompleteDataset& data, const NormalizationParams& params);

/// Inverse affine map, applied to every cell.
Matrix denormalize(const Matrix& values, const NormalizationParams& params);

struct FoldSplit {
  std::vector<Index> train_indices;
  std::vector<Index> test_indices;
  int fold_id = 0;
  int run_id = 0;
};

/// Stratified k-fold partition. Members of each class are shuffled and dealt
/// round-robin; the dealing position carries over between classes so fold
/// sizes differ by at most one.
std::vector<FoldSplit> stratified_folds(const Labels& labels, int k, std::uint64_t seed,
                                        int run_id = 0);

}  // namespace ewfs
