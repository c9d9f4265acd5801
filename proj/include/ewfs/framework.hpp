#pragma once

#include "ewfs/dataset.hpp"
#include "ewfs/ewmc.hpp"
#include "ewfs/imputers.hpp"
#include "ewfs/relief.hpp"

#include <span>
#include <vector>

namespace ewfs {

struct FrameworkConfig {
  EwmcConfig ewmc;
  ReliefConfig relief;
  /// Weight learner of the W-stage.
  Selector selector = Selector::MuReliefA;
  /// Outer loop stops when |zeta_t - zeta_{t-1}| < delta. +inf stops after
  /// the first W-stage.
  double delta = 0.01;
  int max_outer_iter = 20;

  void validate() const;
};

struct FrameworkResult {
  /// Raw output of the last W-stage.
  FeatureWeights v;
  /// Imputed matrix of the last M-stage.
  Matrix Z;
  /// ||v_t||^2 after each W-stage.
  std::vector<double> zeta_trace;
  int outer_iters = 0;
  bool converged = false;
  /// One entry per M-stage, in order.
  std::vector<MStageResult> m_stages;
};

/// Alternates the M-stage (EWMC with the normalised current weights) and the
/// W-stage (weight learning on the imputed matrix) starting from all-ones
/// weights. Labels are read only by the W-stage. Every M-stage starts from a
/// fresh G drawn with cfg.ewmc.seed, so v -> Z is a fixed map and zeta can
/// settle.
FrameworkResult run_framework(const IncompleteDataset& data, const ImputationEnsemble& ensemble,
                              const FrameworkConfig& cfg);

struct TestImputation {
  Matrix values;
  MStageResult m_stage;
};

/// Stacks `test` under `train`, rebuilds the baseline ensemble on the
/// stacked matrix, runs one M-stage with the fixed weights `v` (normalised
/// here) and returns the rows belonging to `test`.
TestImputation impute_test_set(const IncompleteDataset& train, const IncompleteDataset& test,
                               const FeatureWeights& v, const FrameworkConfig& cfg,
                               std::span<const ImputerKind> methods, const ImputerConfig& imputer_cfg);

}  // namespace ewfs
