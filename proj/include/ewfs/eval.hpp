#pragma once

#include "ewfs/dataset.hpp"
#include "ewfs/framework.hpp"
#include "ewfs/imputers.hpp"
#include "ewfs/missingness.hpp"
#include "ewfs/relief.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ewfs {

/// Euclidean kNN. Neighbour distance ties go to the lower training row,
/// vote ties to the smaller summed distance, then to the smaller class id.
Labels knn_classify(const Matrix& train_X, const Labels& train_y, const Matrix& test_X, int k);

/// Accuracy for each prefix 1..d of rank_features(weights).
std::vector<double> accuracy_curve(const FeatureWeights& weights, const Matrix& train_X, const Labels& train_y,
                                   const Matrix& test_X, const Labels& test_y, int k);

/// "<imputer>+<selector>", e.g. "ewmc+mu-reliefa" or "knn+relieff".
struct PipelineId {
  /// Empty for EWMC.
  std::optional<ImputerKind> imputer;
  Selector selector = Selector::MuReliefA;

  bool is_ewmc() const { return !imputer.has_value(); }
  std::string name() const;
};

PipelineId parse_pipeline(std::string_view text);

struct ProtocolConfig {
  int runs = 10;
  int folds = 5;
  std::uint64_t seed = 0;
  /// Classifier neighbours.
  int knn_k = 5;
  FrameworkConfig framework;
  ImputerConfig imputer;
  std::vector<ImputerKind> ensemble_methods = default_ensemble_methods();
  /// Worker threads over (run, fold) jobs; 1 is sequential.
  int jobs = 1;

  void validate() const;
};

struct AccuracyRecord {
  std::string dataset;
  std::string mechanism;
  double rate = 0.0;
  std::string method;
  int run = 0;
  int fold = 0;
  /// 0 with accuracy NaN marks a failed (run, fold, method) job.
  int feature_count = 0;
  double accuracy = 0.0;
};

struct FoldDiagnostics {
  std::string method;
  int run = 0;
  int fold = 0;
  int outer_iters = 0;
  bool outer_converged = true;
  /// Inner iterations of each training M-stage followed by the test M-stage.
  std::vector<int> m_stage_iters;
  bool m_stages_converged = true;
  std::string error;
};

struct EvalReport {
  std::vector<AccuracyRecord> records;
  std::vector<FoldDiagnostics> diagnostics;

  /// Mean over feature counts, then folds, then runs. Failed folds are
  /// left out. NaN if the method has no successful fold.
  double cell_mean(const std::string& method) const;
  /// Mean accuracy per feature count over all successful folds.
  std::map<int, double> curve(const std::string& method) const;
  std::vector<std::string> methods() const;
  int failures() const;
};

/// Runs stratified `runs` x `folds` cross-validation. With `spec` set, the
/// dataset must be complete and missingness is injected into each train and
/// test fold independently; all methods share the same folds and masks.
EvalReport run_protocol(const IncompleteDataset& data, const std::string& dataset_name,
                        const std::optional<MissingSpec>& spec, std::span<const PipelineId> methods,
                        const ProtocolConfig& cfg);

}  // namespace ewfs
