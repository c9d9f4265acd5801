#pragma once

#include "ewfs/dataset.hpp"

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ewfs {

enum class ImputerKind { Mean, Knn, Em, Svd };

ImputerKind parse_imputer(std::string_view text);
std::string to_string(ImputerKind kind);

struct ImputerConfig {
  int knn_k = 5;
  int em_max_iter = 50;
  double em_tol = 1e-4;
  double em_ridge = 1e-6;
  int svd_rank = 5;
  int svd_max_iter = 100;
  double svd_tol = 1e-4;

  void validate() const;
};

/// Output of a single imputer. `values` agrees with the source at every
/// observed cell bit for bit.
struct Imputation {
  Matrix values;
  int iterations = 0;
  bool converged = true;
  /// Degenerate situations that were handled by a fallback.
  std::vector<std::string> notes;
};

/// Column mean of the observed entries; a column with no observed entry is
/// filled with 0.
Imputation impute_mean(const IncompleteDataset& data);

/// k nearest neighbours under the partial distance strategy: squared
/// differences over mutually observed features, scaled by
/// d / |shared|. Candidates must observe the target feature and share at
/// least one feature with the row. Equidistant candidates are ordered by row
/// index. With no candidate the column mean is used.
Imputation impute_knn(const IncompleteDataset& data, const ImputerConfig& cfg);

/// Single multivariate Gaussian fitted by EM. Missing cells end at their
/// conditional means under the final parameters.
Imputation impute_em(const IncompleteDataset& data, const ImputerConfig& cfg);

/// Iterative low-rank fill: start from column means, then repeatedly replace
/// the missing cells by the best rank-`svd_rank` approximation until the
/// Frobenius change of the missing cells drops below `svd_tol`.
Imputation impute_svd(const IncompleteDataset& data, const ImputerConfig& cfg);

Imputation impute(const IncompleteDataset& data, ImputerKind kind, const ImputerConfig& cfg);

struct ImputationEnsemble {
  std::vector<Matrix> members;
  std::vector<std::string> method_tags;

  Index size() const { return static_cast<Index>(members.size()); }
  /// (1/m) * sum of members.
  Matrix mean() const;
};

/// em, knn, svd.
std::vector<ImputerKind> default_ensemble_methods();

ImputationEnsemble build_ensemble(const IncompleteDataset& data, std::span<const ImputerKind> methods,
                                  const ImputerConfig& cfg);

}  // namespace ewfs
