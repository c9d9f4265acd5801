#include "ewfs/ewmc.hpp"

#include "ewfs/rng.hpp"

#include <cmath>
#include <limits>

namespace ewfs {

namespace {

void check_shapes(const Matrix& x_hat, const ImputationEnsemble& ensemble, const Vector& v) {
  if (ensemble.members.empty()) throw ConfigError("EWMC needs a non-empty imputation ensemble");
  for (const auto& member : ensemble.members)
    if (member.rows() != x_hat.rows() || member.cols() != x_hat.cols())
      throw DataError("ensemble member shape does not match the data");
  if (v.size() != x_hat.cols()) throw DataError("weight vector length does not match feature count");
}

}  // namespace

void EwmcConfig::validate(Index n, Index d) const {
  if (rank < 1) throw ConfigError("rank must be positive");
  if (rank > std::min(n, d))
    throw ConfigError("rank " + std::to_string(rank) + " exceeds min(n, d) = " +
                      std::to_string(std::min(n, d)));
  if (!(gamma > 0)) throw ConfigError("gamma must be positive");
  if (!(eta > 0)) throw ConfigError("eta must be positive");
  if (max_inner_iter < 1) throw ConfigError("max_inner_iter must be positive");
}

Vector normalize_weights(const Vector& raw) {
  Vector v = raw.cwiseMax(0.0);
  const double top = v.size() ? v.maxCoeff() : 0.0;
  if (!(top > 0) || !std::isfinite(top)) return Vector::Ones(raw.size());
  return v / top;
}

Matrix project_observed(const IncompleteDataset& data, const Matrix& Z) {
  if (Z.rows() != data.rows() || Z.cols() != data.cols())
    throw DataError("projection: matrix shape does not match the data");
  return data.mask.select(data.values, Z);
}

double objective(const FactorPair& factors, const Matrix& x_hat, const ImputationEnsemble& ensemble,
                 const Vector& v, double gamma) {
  check_shapes(x_hat, ensemble, v);
  const Matrix Z = factors.product();
  double ensemble_term = 0.0;
  for (const auto& member : ensemble.members) ensemble_term += (Z - member).squaredNorm();
  ensemble_term /= static_cast<double>(ensemble.size());
  const double weighted = ((Z - x_hat) * v.asDiagonal()).squaredNorm();
  return ensemble_term + weighted + gamma * (factors.G.squaredNorm() + factors.H.squaredNorm());
}

Matrix solve_h(const Matrix& G, const Matrix& x_hat, const ImputationEnsemble& ensemble,
               const Vector& v, double gamma) {
  check_shapes(x_hat, ensemble, v);
  const Index r = G.cols(), d = x_hat.cols();
  const Matrix gram = G.transpose() * G;
  const Matrix gt_xhat = G.transpose() * x_hat;
  const Matrix gt_mean = G.transpose() * ensemble.mean();
  const Matrix identity = Matrix::Identity(r, r);

  Matrix H(r, d);
  for (Index q = 0; q < d; ++q) {
    const double w = v(q) * v(q);
    Eigen::LLT<Matrix> llt((w + 1.0) * gram + gamma * identity);
    if (llt.info() != Eigen::Success) throw NumericalError("H-update system is not positive definite");
    H.col(q) = llt.solve(w * gt_xhat.col(q) + gt_mean.col(q));
  }
  return H;
}

Matrix solve_g(const Matrix& H, const Matrix& x_hat, const ImputationEnsemble& ensemble,
               const Vector& v, double gamma) {
  check_shapes(x_hat, ensemble, v);
  const Vector w = v.array().square();
  const Matrix hw = H * w.asDiagonal();
  Matrix system = hw * H.transpose() + H * H.transpose();
  system.diagonal().array() += gamma;
  const Matrix rhs = x_hat * hw.transpose() + ensemble.mean() * H.transpose();

  Eigen::LLT<Matrix> llt(system);
  if (llt.info() != Eigen::Success) throw NumericalError("G-update system is not positive definite");
  return llt.solve(rhs.transpose()).transpose();
}

Matrix orthonormal_init(Index n, Index r, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix A(n, r);
  for (Index j = 0; j < r; ++j)
    for (Index i = 0; i < n; ++i) A(i, j) = normal(rng);
  Eigen::HouseholderQR<Matrix> qr(A);
  return qr.householderQ() * Matrix::Identity(n, r);
}

MStageResult run_m_stage(const IncompleteDataset& data, const ImputationEnsemble& ensemble,
                         const Vector& v, const EwmcConfig& cfg) {
  const Index n = data.rows(), d = data.cols();
  cfg.validate(n, d);
  if (!v.allFinite()) throw NumericalError("feature weights contain non-finite entries");
  const Matrix ensemble_mean = ensemble.mean();

  MStageResult result;
  Matrix G = orthonormal_init(n, cfg.rank, cfg.seed);
  Matrix H;
  Matrix x_hat = project_observed(data, ensemble_mean);
  double previous = std::numeric_limits<double>::quiet_NaN();
  for (int k = 1; k <= cfg.max_inner_iter; ++k) {
    H = solve_h(G, x_hat, ensemble, v, cfg.gamma);
    G = solve_g(H, x_hat, ensemble, v, cfg.gamma);
    x_hat = project_observed(data, G * H);
    const double value = objective({G, H}, x_hat, ensemble, v, cfg.gamma);
    if (!std::isfinite(value)) throw NumericalError("M-stage objective became non-finite");
    result.trace.push_back(value);
    result.iterations = k;
    if (k > 1 && std::abs(value - previous) < cfg.eta) {
      result.converged = true;
      break;
    }
    previous = value;
  }
  result.Z = std::move(x_hat);
  result.factors = {std::move(G), std::move(H)};
  return result;
}

}  // namespace ewfs
