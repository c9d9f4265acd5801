#pragma once

#include "ewfs/dataset.hpp"
#include "ewfs/imputers.hpp"

#include <cstdint>
#include <vector>

namespace ewfs {

/// Ensemble-based weighted matrix completion.
///
/// Minimises over G (n x r) and H (r x d)
///
///   (1/m) sum_i ||GH - X_i||_F^2 + ||(GH - Xhat) Diag(v)||_F^2 + gamma (||G||_F^2 + ||H||_F^2)
///
/// where X_1..X_m are baseline imputations and Xhat takes the observed
/// entries of the data and the current GH elsewhere. H and G are updated in
/// turn with their closed-form minimisers.
struct EwmcConfig {
  int rank = 5;
  double gamma = 20.0;
  /// Stop once two consecutive objective values differ by less than eta.
  double eta = 0.1;
  int max_inner_iter = 200;
  std::uint64_t seed = 0;

  void validate(Index n, Index d) const;
};

struct FactorPair {
  Matrix G;
  Matrix H;

  Matrix product() const { return G * H; }
};

/// Clamps negative entries to 0 and divides by the largest entry. A vector
/// with no positive entry becomes all ones.
Vector normalize_weights(const Vector& raw);

/// Observed cells from `data`, the rest from `Z`.
Matrix project_observed(const IncompleteDataset& data, const Matrix& Z);

double objective(const FactorPair& factors, const Matrix& x_hat, const ImputationEnsemble& ensemble,
                 const Vector& v, double gamma);

/// Column q: [(v_q^2 + 1) G'G + gamma I]^-1 [v_q^2 G' Xhat^q + G' mean_i(X_i)^q].
Matrix solve_h(const Matrix& G, const Matrix& x_hat, const ImputationEnsemble& ensemble,
               const Vector& v, double gamma);

/// Row p: [Xhat_p D (HD)' + mean_i(X_i)_p H'] [HD (HD)' + gamma I + HH']^-1,
/// D = Diag(v). All rows share the same r x r system.
Matrix solve_g(const Matrix& H, const Matrix& x_hat, const ImputationEnsemble& ensemble,
               const Vector& v, double gamma);

/// Standard Gaussian n x r matrix orthonormalised by thin QR.
Matrix orthonormal_init(Index n, Index r, std::uint64_t seed);

struct MStageResult {
  /// G H with observed cells replaced by the data.
  Matrix Z;
  FactorPair factors;
  /// Objective after each iteration.
  std::vector<double> trace;
  int iterations = 0;
  bool converged = false;
};

/// `v` is used as given; callers normalise it first.
MStageResult run_m_stage(const IncompleteDataset& data, const ImputationEnsemble& ensemble,
                         const Vector& v, const EwmcConfig& cfg);

}  // namespace ewfs
