#include "ewfs/framework.hpp"

#include <cmath>
#include <limits>

namespace ewfs {

void FrameworkConfig::validate() const {
  if (!(delta > 0)) throw ConfigError("delta must be positive");
  if (max_outer_iter < 1) throw ConfigError("max_outer_iter must be at least 1");
}

FrameworkResult run_framework(const IncompleteDataset& data, const ImputationEnsemble& ensemble,
                              const FrameworkConfig& cfg) {
  cfg.validate();
  cfg.ewmc.validate(data.rows(), data.cols());

  FrameworkResult result;
  result.v = Vector::Ones(data.cols());
  double previous_zeta = -std::numeric_limits<double>::infinity();
  for (int t = 1; t <= cfg.max_outer_iter; ++t) {
    auto stage = run_m_stage(data, ensemble, normalize_weights(result.v), cfg.ewmc);

    result.v = select_features(cfg.selector, stage.Z, data.labels, cfg.relief).weights;
    if (!result.v.allFinite()) throw NumericalError("W-stage produced non-finite weights");
    result.Z = stage.Z;
    result.m_stages.push_back(std::move(stage));

    const double zeta = result.v.squaredNorm();
    result.zeta_trace.push_back(zeta);
    result.outer_iters = t;
    if (std::isinf(cfg.delta) || std::abs(zeta - previous_zeta) < cfg.delta) {
      result.converged = true;
      break;
    }
    previous_zeta = zeta;
  }
  return result;
}

TestImputation impute_test_set(const IncompleteDataset& train, const IncompleteDataset& test,
                               const FeatureWeights& v, const FrameworkConfig& cfg,
                               std::span<const ImputerKind> methods, const ImputerConfig& imputer_cfg) {
  if (train.cols() != test.cols())
    throw DataError("train has " + std::to_string(train.cols()) + " features, test has " +
                    std::to_string(test.cols()));
  if (v.size() != train.cols()) throw DataError("weight vector length does not match feature count");
  const auto stacked = stack_rows(train, test);
  const auto ensemble = build_ensemble(stacked, methods, imputer_cfg);
  TestImputation out;
  out.m_stage = run_m_stage(stacked, ensemble, normalize_weights(v), cfg.ewmc);
  out.values = out.m_stage.Z.bottomRows(test.rows());
  return out;
}

}  // namespace ewfs
