#include "ewfs/imputers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace ewfs {

namespace {

Vector observed_column_means(const IncompleteDataset& data, std::vector<std::string>* notes) {
  Vector means = Vector::Zero(data.cols());
  for (Index j = 0; j < data.cols(); ++j) {
    double sum = 0.0;
    Index count = 0;
    for (Index i = 0; i < data.rows(); ++i)
      if (data.mask(i, j)) {
        sum += data.values(i, j);
        ++count;
      }
    if (count > 0) {
      means(j) = sum / static_cast<double>(count);
    } else if (notes) {
      notes->push_back("feature '" + data.feature_names[static_cast<std::size_t>(j)] +
                       "' has no observed value, filled with 0");
    }
  }
  return means;
}

Matrix fill_with(const IncompleteDataset& data, const Vector& column_values) {
  Matrix out = data.values;
  for (Index j = 0; j < data.cols(); ++j)
    for (Index i = 0; i < data.rows(); ++i)
      if (!data.mask(i, j)) out(i, j) = column_values(j);
  return out;
}

struct RowPattern {
  Index row;
  std::vector<Index> observed;
  std::vector<Index> missing;
};

std::vector<RowPattern> incomplete_rows(const IncompleteDataset& data) {
  std::vector<RowPattern> rows;
  for (Index i = 0; i < data.rows(); ++i) {
    if (data.mask.row(i).all()) continue;
    RowPattern p{i, {}, {}};
    for (Index j = 0; j < data.cols(); ++j) (data.mask(i, j) ? p.observed : p.missing).push_back(j);
    rows.push_back(std::move(p));
  }
  return rows;
}

// Conditional-mean E-step. Writes the expected values of the missing
// coordinates into `filled` and accumulates their conditional covariances.
// Returns false when an observed-block covariance is not positive definite.
bool em_expectation(const std::vector<RowPattern>& rows, const Vector& mu, const Matrix& sigma,
                    Matrix& filled, Matrix& cond_cov) {
  cond_cov.setZero();
  for (const auto& p : rows) {
    const auto& o = p.observed;
    const auto& m = p.missing;
    if (o.empty()) {
      filled(p.row, m) = mu(m).transpose();
      cond_cov(m, m) += sigma(m, m);
      continue;
    }
    Eigen::LLT<Matrix> llt(sigma(o, o));
    if (llt.info() != Eigen::Success) return false;
    const Matrix s_mo = sigma(m, o);
    const Vector resid = filled(p.row, o).transpose() - mu(o);
    filled(p.row, m) = (mu(m) + s_mo * llt.solve(resid)).transpose();
    cond_cov(m, m) += sigma(m, m) - s_mo * llt.solve(s_mo.transpose());
  }
  return true;
}

}  // namespace

ImputerKind parse_imputer(std::string_view text) {
  if (text == "mean") return ImputerKind::Mean;
  if (text == "knn") return ImputerKind::Knn;
  if (text == "em") return ImputerKind::Em;
  if (text == "svd") return ImputerKind::Svd;
  throw ConfigError("unknown imputer '" + std::string(text) + "'");
}

std::string to_string(ImputerKind kind) {
  switch (kind) {
    case ImputerKind::Mean: return "mean";
    case ImputerKind::Knn: return "knn";
    case ImputerKind::Em: return "em";
    case ImputerKind::Svd: return "svd";
  }
  return "?";
}

void ImputerConfig::validate() const {
  if (knn_k < 1) throw ConfigError("knn_k must be positive");
  if (em_max_iter < 1 || svd_max_iter < 1) throw ConfigError("iteration limits must be positive");
  if (!(em_tol > 0) || !(svd_tol > 0)) throw ConfigError("tolerances must be positive");
  if (!(em_ridge > 0)) throw ConfigError("em_ridge must be positive");
  if (svd_rank < 1) throw ConfigError("svd_rank must be positive");
}

Imputation impute_mean(const IncompleteDataset& data) {
  Imputation out;
  out.values = fill_with(data, observed_column_means(data, &out.notes));
  out.iterations = 1;
  return out;
}

Imputation impute_knn(const IncompleteDataset& data, const ImputerConfig& cfg) {
  cfg.validate();
  const Index n = data.rows(), d = data.cols();
  Imputation out;
  out.values = data.values;
  out.iterations = 1;
  const Vector fallback = observed_column_means(data, nullptr);
  const auto k = static_cast<std::size_t>(cfg.knn_k);

  std::vector<double> dist(static_cast<std::size_t>(n));
  std::vector<std::pair<double, Index>> candidates;
  for (Index i = 0; i < n; ++i) {
    if (data.mask.row(i).all()) continue;
    for (Index j = 0; j < n; ++j) {
      double sq = 0.0;
      Index shared = 0;
      for (Index l = 0; l < d; ++l)
        if (data.mask(i, l) && data.mask(j, l)) {
          const double diff = data.values(i, l) - data.values(j, l);
          sq += diff * diff;
          ++shared;
        }
      dist[static_cast<std::size_t>(j)] =
          (j == i || shared == 0) ? std::numeric_limits<double>::infinity()
                                  : sq * static_cast<double>(d) / static_cast<double>(shared);
    }
    for (Index q = 0; q < d; ++q) {
      if (data.mask(i, q)) continue;
      candidates.clear();
      for (Index j = 0; j < n; ++j)
        if (data.mask(j, q) && std::isfinite(dist[static_cast<std::size_t>(j)]))
          candidates.emplace_back(dist[static_cast<std::size_t>(j)], j);
      if (candidates.empty()) {
        out.values(i, q) = fallback(q);
        out.notes.push_back("no neighbour observes feature '" +
                            data.feature_names[static_cast<std::size_t>(q)] + "' for row " +
                            std::to_string(i) + ", used column mean");
        continue;
      }
      const auto take = std::min(k, candidates.size());
      std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take),
                        candidates.end());
      double sum = 0.0;
      for (std::size_t c = 0; c < take; ++c) sum += data.values(candidates[c].second, q);
      out.values(i, q) = sum / static_cast<double>(take);
    }
  }
  return out;
}

Imputation impute_em(const IncompleteDataset& data, const ImputerConfig& cfg) {
  cfg.validate();
  const Index n = data.rows(), d = data.cols();
  Imputation out;
  out.values = fill_with(data, observed_column_means(data, &out.notes));
  out.iterations = 1;
  const auto rows = incomplete_rows(data);
  if (rows.empty()) return out;

  Matrix filled = out.values;
  Vector mu = filled.colwise().mean().transpose();
  Matrix centered = filled.rowwise() - mu.transpose();
  double ridge = cfg.em_ridge;
  Matrix sigma = centered.transpose() * centered / static_cast<double>(n);
  sigma.diagonal().array() += ridge;
  Matrix cond_cov(d, d);

  auto expectation = [&](Matrix& target) {
    for (int escalation = 0; !em_expectation(rows, mu, sigma, target, cond_cov); ++escalation) {
      if (escalation == 3)
        throw NumericalError("EM covariance is not positive definite even with ridge " +
                             std::to_string(ridge));
      sigma.diagonal().array() += 9.0 * ridge;
      ridge *= 10.0;
      out.notes.push_back("EM ridge increased to " + std::to_string(ridge));
    }
  };

  out.converged = false;
  for (int it = 1; it <= cfg.em_max_iter; ++it) {
    out.iterations = it;
    expectation(filled);
    const Vector mu_next = filled.colwise().mean().transpose();
    centered = filled.rowwise() - mu_next.transpose();
    Matrix sigma_next = (centered.transpose() * centered + cond_cov) / static_cast<double>(n);
    sigma_next.diagonal().array() += ridge;
    const double change = std::max((mu_next - mu).cwiseAbs().maxCoeff(),
                                   (sigma_next - sigma).cwiseAbs().maxCoeff());
    mu = mu_next;
    sigma = std::move(sigma_next);
    if (change < cfg.em_tol) {
      out.converged = true;
      break;
    }
  }
  expectation(filled);
  for (const auto& p : rows) out.values(p.row, p.missing) = filled(p.row, p.missing);
  return out;
}

Imputation impute_svd(const IncompleteDataset& data, const ImputerConfig& cfg) {
  cfg.validate();
  const Index n = data.rows(), d = data.cols();
  if (cfg.svd_rank > std::min(n, d))
    throw ConfigError("svd_rank " + std::to_string(cfg.svd_rank) + " exceeds min(n, d) = " +
                      std::to_string(std::min(n, d)));
  Imputation out;
  out.values = fill_with(data, observed_column_means(data, &out.notes));
  if (data.is_complete()) return out;

  const Index r = cfg.svd_rank;
  out.converged = false;
  for (int it = 1; it <= cfg.svd_max_iter; ++it) {
    out.iterations = it;
    Eigen::BDCSVD<Matrix> svd(out.values, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Matrix approx = svd.matrixU().leftCols(r) * svd.singularValues().head(r).asDiagonal() *
                          svd.matrixV().leftCols(r).transpose();
    double change = 0.0;
    for (Index j = 0; j < d; ++j)
      for (Index i = 0; i < n; ++i)
        if (!data.mask(i, j)) {
          const double delta = approx(i, j) - out.values(i, j);
          change += delta * delta;
          out.values(i, j) = approx(i, j);
        }
    if (std::sqrt(change) < cfg.svd_tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

Imputation impute(const IncompleteDataset& data, ImputerKind kind, const ImputerConfig& cfg) {
  switch (kind) {
    case ImputerKind::Mean: return impute_mean(data);
    case ImputerKind::Knn: return impute_knn(data, cfg);
    case ImputerKind::Em: return impute_em(data, cfg);
    case ImputerKind::Svd: return impute_svd(data, cfg);
  }
  throw ConfigError("unknown imputer");
}

Matrix ImputationEnsemble::mean() const {
  if (members.empty()) throw ConfigError("empty imputation ensemble");
  Matrix sum = members.front();
  for (std::size_t i = 1; i < members.size(); ++i) sum += members[i];
  return sum / static_cast<double>(members.size());
}

std::vector<ImputerKind> default_ensemble_methods() {
  return {ImputerKind::Em, ImputerKind::Knn, ImputerKind::Svd};
}

ImputationEnsemble build_ensemble(const IncompleteDataset& data, std::span<const ImputerKind> methods,
                                  const ImputerConfig& cfg) {
  if (methods.empty()) throw ConfigError("ensemble needs at least one imputer");
  ImputationEnsemble ensemble;
  for (ImputerKind kind : methods) {
    ensemble.members.push_back(impute(data, kind, cfg).values);
    ensemble.method_tags.push_back(to_string(kind));
  }
  return ensemble;
}

}  // namespace ewfs
